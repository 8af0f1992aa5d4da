#include "reqgen/errors.hpp"

namespace reqgen {

const char* errc_name(Errc c) {
    switch (c) {
        case Errc::syntax_error: return "SyntaxError";
        case Errc::unknown_item: return "UnknownItem";
        case Errc::type_mismatch: return "TypeMismatch";
        case Errc::missing_field: return "MissingField";
        case Errc::unknown_unit: return "UnknownUnit";
        case Errc::out_of_bounds: return "OutOfBounds";
        case Errc::unresolved_reference: return "UnresolvedReference";
        case Errc::cyclic_dependency: return "CyclicDependency";
        case Errc::duplicate_name: return "DuplicateName";
        case Errc::reserved_name: return "ReservedName";
        case Errc::parse_error: return "ParseError";
        case Errc::unbound_identifier: return "UnboundIdentifier";
        case Errc::type_error: return "TypeError";
        case Errc::division_by_zero: return "DivisionByZero";
        case Errc::unknown_function: return "UnknownFunction";
        case Errc::missing_attribute: return "MissingAttribute";
        case Errc::empty_network: return "EmptyNetwork";
        case Errc::invalid_dimension: return "InvalidDimension";
        case Errc::unknown_node: return "UnknownNode";
        case Errc::unreachable: return "Unreachable";
        case Errc::io_error: return "IoError";
        case Errc::invalid_params: return "InvalidParams";
        case Errc::length_mismatch: return "LengthMismatch";
        case Errc::all_zero_weights: return "AllZeroWeights";
        case Errc::infeasible_config: return "InfeasibleConfig";
        case Errc::degenerate_poi_index: return "DegeneratePoiIndex";
        case Errc::placement_failure: return "PlacementFailure";
        case Errc::too_few_requests: return "TooFewRequests";
        case Errc::unsorted_input: return "UnsortedInput";
        case Errc::negative_reaction_time: return "NegativeReactionTime";
        case Errc::empty_instance: return "EmptyInstance";
        case Errc::size_mismatch: return "SizeMismatch";
    }
    return "Error";
}

}  // namespace reqgen
