#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "reqgen/expr.hpp"
#include "reqgen/network.hpp"
#include "reqgen/sampling.hpp"

namespace reqgen {

// All values are canonicalised to seconds / metres / metres-per-second at
// parse time; declared units never survive past the parser.
enum class Dimension { time, length, speed };

// Multiplier that converts one unit of `unit` into the canonical unit of the
// dimension. Throws Errc::unknown_unit.
double unit_factor(Dimension dim, const std::string& unit);
double canonicalize(double value, Dimension dim, const std::string& unit);

enum class ParamType {
    string_,
    integer,
    real,
    array_primitives,
    array_locations,
    array_zones,
};

enum class AttrType { string_, integer, real, location, array_primitives };

const char* param_type_name(ParamType t);
const char* attr_type_name(AttrType t);

struct PlaceSpec {
    std::string name;
    bool is_zone = false;
    std::optional<std::string> cls;  // only "school" is understood
    bool centroid = false;
    std::optional<double> lon, lat;
    // Zone geometry, metres (canonical): full side lengths, or radius.
    std::optional<double> length_lon_m, length_lat_m, radius_m;
};

struct ParameterSpec {
    std::string name;
    ParamType type = ParamType::integer;
    // Exactly one of these carries the value, depending on `type`. Numeric
    // values are already unit-canonical; an integer whose conversion is not
    // integral is stored in real_value instead.
    std::optional<std::int64_t> int_value;
    std::optional<double> real_value;
    std::optional<std::string> string_value;
    std::vector<Primitive> prim_values;     // array_primitives
    std::vector<std::string> name_values;   // array_locations / array_zones
    std::optional<std::int64_t> size;       // target array length
    std::optional<std::string> locs;        // "random" | "schools" fill rule
};

struct AttributeSpec {
    std::string name;
    AttrType type = AttrType::integer;
    std::optional<PdfSpec> pdf;  // loc/scale unit-canonical
    std::optional<std::string> expression;
    std::vector<std::string> constraints;
    std::optional<std::string> subset_primitives;
    std::optional<std::string> subset_locations;
    std::optional<std::string> subset_zones;
    std::vector<double> weights;
    bool output_csv = true;
    std::optional<double> dynamism;            // target in [0,1], time_stamp only
    std::optional<double> static_probability;  // [0,1], time_stamp only
};

struct MethodPois {
    std::vector<std::string> locations;  // exactly two location attributes
    PdfSpec pdf;                         // trip distance distribution, metres
};

struct InstanceConfig {
    std::string network;
    std::uint64_t seed = 0;
    std::string problem;
    bool fixed_lines = false;
    double max_speed_factor = 1.0;
    std::int64_t replicas = 1;
    std::int64_t requests = 0;
    std::vector<std::string> instance_filename;
    std::vector<PlaceSpec> places;
    std::vector<ParameterSpec> parameters;
    std::vector<AttributeSpec> attributes;
    std::vector<std::string> travel_time_matrix;
    std::optional<MethodPois> method_pois;
    // Non-fatal notes produced while parsing (e.g. unsupported toggles).
    std::vector<std::string> warnings;
};

// Strict parser: unknown items or sub-items, wrong JSON types, malformed
// units, and out-of-range values are errors (Errc::syntax_error,
// Errc::unknown_item, Errc::type_mismatch, Errc::missing_field,
// Errc::unknown_unit, Errc::out_of_bounds).
InstanceConfig parse_config(const std::string& json_text);
InstanceConfig parse_config_file(const std::string& path);

// Canonical JSON rendering; parse(serialize(parse(x))) == parse(x).
std::string serialize_config(const InstanceConfig& cfg);

// Name lists the validator treats specially: these identifiers carry fixed
// semantics and may only appear in the role the tool assigns to them.
bool is_reserved_name(const std::string& name);

struct ResolvedPlace {
    LonLat pos;                // declared coordinate or network centroid
    std::optional<Zone> zone;  // set when the place is a zone
    bool is_school = false;
};

struct ValidatedAttribute {
    ExprPtr expression;  // null unless the attribute is expression-defined
    std::vector<ExprPtr> constraints;
    // Names of other *attributes* this one must wait for (expression +
    // constraint identifiers, plus max_walking / walk_speed when stops() is
    // called). Parameters are bound before generation and never appear here.
    std::set<std::string> attr_deps;
    bool uses_stops = false;
};

struct ValidatedConfig {
    InstanceConfig cfg;
    std::vector<ResolvedPlace> places;           // parallel to cfg.places
    std::vector<ValidatedAttribute> attributes;  // parallel to cfg.attributes
    std::vector<std::size_t> attribute_order;    // topological evaluation order
    // Planning period in canonical seconds, taken from the
    // min_planning_period / max_planning_period parameters when declared.
    std::optional<double> ts_min, ts_max;
    std::optional<std::size_t> time_stamp_index;
};

// Checks and resolves everything that can be decided before sampling: place
// coordinates inside network bounds, reference resolution, weight lengths,
// reserved-name rules, dependency cycles, planning-period parameters. The
// network is read-only. Throws the Errc values named in the message on
// failure, notably Errc::out_of_bounds, Errc::unresolved_reference,
// Errc::cyclic_dependency, Errc::duplicate_name, Errc::reserved_name.
ValidatedConfig validate_config(const InstanceConfig& cfg, const RoadNetwork& net);

}  // namespace reqgen
