#pragma once

#include <stdexcept>
#include <string>

namespace reqgen {

// Every failure the library can signal, as a stable code. Tests match on the
// code rather than on message wording.
enum class Errc {
    // config
    syntax_error,
    unknown_item,
    type_mismatch,
    missing_field,
    unknown_unit,
    out_of_bounds,
    unresolved_reference,
    cyclic_dependency,
    duplicate_name,
    reserved_name,
    // expressions
    parse_error,
    unbound_identifier,
    type_error,
    division_by_zero,
    unknown_function,
    // network / io
    missing_attribute,
    empty_network,
    invalid_dimension,
    unknown_node,
    unreachable,
    io_error,
    // sampling
    invalid_params,
    length_mismatch,
    all_zero_weights,
    // generator
    infeasible_config,
    degenerate_poi_index,
    placement_failure,
    // metrics
    too_few_requests,
    unsorted_input,
    negative_reaction_time,
    empty_instance,
    // similarity
    size_mismatch,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
  public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const { return code_; }

  private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace reqgen
