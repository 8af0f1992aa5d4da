#include "reqgen/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "reqgen/errors.hpp"

namespace reqgen {

using Json = nlohmann::json;

double unit_factor(Dimension dim, const std::string& unit) {
    switch (dim) {
        case Dimension::time:
            if (unit == "s") return 1.0;
            if (unit == "min") return 60.0;
            if (unit == "h") return 3600.0;
            break;
        case Dimension::length:
            if (unit == "m") return 1.0;
            if (unit == "km") return 1000.0;
            if (unit == "mi") return 1609.344;
            break;
        case Dimension::speed:
            if (unit == "mps") return 1.0;
            if (unit == "kmh") return 1.0 / 3.6;
            if (unit == "miph") return 0.44704;
            break;
    }
    fail(Errc::unknown_unit, "unknown unit '" + unit + "'");
}

double canonicalize(double value, Dimension dim, const std::string& unit) {
    return value * unit_factor(dim, unit);
}

const char* param_type_name(ParamType t) {
    switch (t) {
        case ParamType::string_: return "string";
        case ParamType::integer: return "integer";
        case ParamType::real: return "real";
        case ParamType::array_primitives: return "array_primitives";
        case ParamType::array_locations: return "array_locations";
        case ParamType::array_zones: return "array_zones";
    }
    return "?";
}

const char* attr_type_name(AttrType t) {
    switch (t) {
        case AttrType::string_: return "string";
        case AttrType::integer: return "integer";
        case AttrType::real: return "real";
        case AttrType::location: return "location";
        case AttrType::array_primitives: return "array_primitives";
    }
    return "?";
}

bool is_reserved_name(const std::string& name) {
    return name == "bus_stations" || name == "time_stamp" || name == "max_walking" ||
           name == "walk_speed";
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

// Wraps one JSON object; every key must be claimed exactly once, leftovers
// are unknown-item errors.
class ObjectReader {
  public:
    ObjectReader(const Json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
        if (!obj.is_object()) fail(Errc::type_mismatch, where_ + " must be a JSON object");
    }

    const Json* get(const char* key) {
        claimed_.insert(key);
        const auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    const Json& require(const char* key) {
        const Json* v = get(key);
        if (!v) fail(Errc::missing_field, where_ + " lacks required sub-item '" + key + "'");
        return *v;
    }

    void finish() const {
        for (const auto& [key, _] : obj_.items()) {
            if (!claimed_.count(key))
                fail(Errc::unknown_item, where_ + " has unknown sub-item '" + key + "'");
        }
    }

    const std::string& where() const { return where_; }

  private:
    const Json& obj_;
    std::string where_;
    std::set<std::string> claimed_;
};

std::string expect_string(const Json& v, const std::string& where) {
    if (!v.is_string()) fail(Errc::type_mismatch, where + " must be a string");
    return v.get<std::string>();
}

bool expect_bool(const Json& v, const std::string& where) {
    if (!v.is_boolean()) fail(Errc::type_mismatch, where + " must be a boolean");
    return v.get<bool>();
}

double expect_number(const Json& v, const std::string& where) {
    if (!v.is_number()) fail(Errc::type_mismatch, where + " must be a number");
    return v.get<double>();
}

std::int64_t expect_integer(const Json& v, const std::string& where) {
    if (!v.is_number_integer()) fail(Errc::type_mismatch, where + " must be an integer");
    return v.get<std::int64_t>();
}

std::vector<std::string> expect_string_array(const Json& v, const std::string& where) {
    if (!v.is_array()) fail(Errc::type_mismatch, where + " must be an array of strings");
    std::vector<std::string> out;
    for (const Json& item : v) out.push_back(expect_string(item, where + " entry"));
    return out;
}

// The declared measurement unit of an object: at most one of time_unit /
// length_unit / speed_unit, returned as a multiplier to canonical units.
double read_unit(ObjectReader& obj) {
    struct Decl {
        const char* key;
        Dimension dim;
    };
    static constexpr Decl kDecls[] = {{"time_unit", Dimension::time},
                                      {"length_unit", Dimension::length},
                                      {"speed_unit", Dimension::speed}};
    double factor = 1.0;
    int declared = 0;
    for (const Decl& d : kDecls) {
        if (const Json* v = obj.get(d.key)) {
            factor = unit_factor(d.dim, expect_string(*v, obj.where() + "." + d.key));
            ++declared;
        }
    }
    if (declared > 1)
        fail(Errc::type_mismatch, obj.where() + " declares more than one measurement unit");
    return factor;
}

PdfSpec read_pdf(const Json& v, const std::string& where, double factor) {
    ObjectReader obj(v, where);
    PdfSpec spec;
    spec.family = pdf_family_from_name(expect_string(obj.require("type"), where + ".type"));
    spec.loc = expect_number(obj.require("loc"), where + ".loc") * factor;
    spec.scale = expect_number(obj.require("scale"), where + ".scale") * factor;
    if (const Json* aux = obj.get("aux")) spec.aux = expect_number(*aux, where + ".aux");
    obj.finish();
    validate_pdf(spec);
    return spec;
}

PlaceSpec read_place(const Json& v, std::size_t index) {
    const std::string where = "places[" + std::to_string(index) + "]";
    ObjectReader obj(v, where);
    PlaceSpec place;
    place.name = expect_string(obj.require("name"), where + ".name");
    const std::string type = expect_string(obj.require("type"), where + ".type");
    if (type == "zone") place.is_zone = true;
    else if (type != "location")
        fail(Errc::type_mismatch, where + ".type must be \"location\" or \"zone\"");
    // Geometry lengths are the only unit-bearing values in a place.
    double factor = 1.0;
    if (const Json* u = obj.get("length_unit"))
        factor = unit_factor(Dimension::length, expect_string(*u, where + ".length_unit"));
    if (const Json* c = obj.get("centroid")) place.centroid = expect_bool(*c, where + ".centroid");
    if (const Json* lon = obj.get("lon")) place.lon = expect_number(*lon, where + ".lon");
    if (const Json* lat = obj.get("lat")) place.lat = expect_number(*lat, where + ".lat");
    if (const Json* cls = obj.get("class")) {
        place.cls = expect_string(*cls, where + ".class");
        if (*place.cls != "school")
            fail(Errc::type_mismatch, where + ".class only supports \"school\"");
    }
    if (const Json* ll = obj.get("length_lon"))
        place.length_lon_m = expect_number(*ll, where + ".length_lon") * factor;
    if (const Json* ll = obj.get("length_lat"))
        place.length_lat_m = expect_number(*ll, where + ".length_lat") * factor;
    if (const Json* r = obj.get("radius"))
        place.radius_m = expect_number(*r, where + ".radius") * factor;
    obj.finish();

    const bool has_coord = place.lon.has_value() || place.lat.has_value();
    if (has_coord && (!place.lon || !place.lat))
        fail(Errc::missing_field, where + " declares only one of lon/lat");
    if (place.centroid == has_coord)
        fail(Errc::missing_field, where + " needs either lon/lat or centroid=true (not both)");
    if (place.is_zone) {
        const bool rect = place.length_lon_m.has_value() || place.length_lat_m.has_value();
        if (rect && (!place.length_lon_m || !place.length_lat_m))
            fail(Errc::missing_field, where + " declares only one of length_lon/length_lat");
        if (rect == place.radius_m.has_value())
            fail(Errc::missing_field,
                 where + " (zone) needs either length_lon/length_lat or radius");
        if (place.radius_m && !(*place.radius_m > 0.0))
            fail(Errc::out_of_bounds, where + ".radius must be positive");
        if (rect && (!(*place.length_lon_m > 0.0) || !(*place.length_lat_m > 0.0)))
            fail(Errc::out_of_bounds, where + " side lengths must be positive");
    } else {
        if (place.length_lon_m || place.length_lat_m || place.radius_m)
            fail(Errc::unknown_item, where + " (location) cannot carry zone geometry");
    }
    return place;
}

Primitive read_primitive(const Json& v, const std::string& where, double factor) {
    if (v.is_boolean()) return v.get<bool>();
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) {
        const double scaled = static_cast<double>(v.get<std::int64_t>()) * factor;
        if (scaled == std::floor(scaled)) return static_cast<std::int64_t>(scaled);
        return scaled;
    }
    if (v.is_number()) return v.get<double>() * factor;
    fail(Errc::type_mismatch, where + " must be a primitive (number, string, or boolean)");
}

ParameterSpec read_parameter(const Json& v, std::size_t index) {
    const std::string where = "parameters[" + std::to_string(index) + "]";
    ObjectReader obj(v, where);
    ParameterSpec param;
    param.name = expect_string(obj.require("name"), where + ".name");
    const std::string type = expect_string(obj.require("type"), where + ".type");
    if (type == "string") param.type = ParamType::string_;
    else if (type == "integer") param.type = ParamType::integer;
    else if (type == "real") param.type = ParamType::real;
    else if (type == "array_primitives") param.type = ParamType::array_primitives;
    // "array_location" (singular) appears in published configuration
    // examples; treat it as the documented plural form.
    else if (type == "array_locations" || type == "array_location")
        param.type = ParamType::array_locations;
    else if (type == "array_zones" || type == "array_zone") param.type = ParamType::array_zones;
    else fail(Errc::type_mismatch, where + ".type '" + type + "' is not a parameter type");

    const double factor = read_unit(obj);
    const Json* value = obj.get("value");
    if (const Json* size = obj.get("size"))
        param.size = expect_integer(*size, where + ".size");
    if (const Json* locs = obj.get("locs")) {
        param.locs = expect_string(*locs, where + ".locs");
        if (*param.locs != "random" && *param.locs != "schools")
            fail(Errc::type_mismatch, where + ".locs must be \"random\" or \"schools\"");
    }
    obj.finish();

    switch (param.type) {
        case ParamType::string_:
            if (!value) fail(Errc::missing_field, where + " lacks value");
            param.string_value = expect_string(*value, where + ".value");
            break;
        case ParamType::integer: {
            if (!value) fail(Errc::missing_field, where + " lacks value");
            const double scaled =
                static_cast<double>(expect_integer(*value, where + ".value")) * factor;
            if (scaled == std::floor(scaled))
                param.int_value = static_cast<std::int64_t>(scaled);
            else
                param.real_value = scaled;  // unit conversion broke integrality
            break;
        }
        case ParamType::real:
            if (!value) fail(Errc::missing_field, where + " lacks value");
            param.real_value = expect_number(*value, where + ".value") * factor;
            break;
        case ParamType::array_primitives: {
            if (!value) fail(Errc::missing_field, where + " lacks value");
            if (!value->is_array()) fail(Errc::type_mismatch, where + ".value must be an array");
            for (const Json& item : *value)
                param.prim_values.push_back(read_primitive(item, where + ".value entry", factor));
            break;
        }
        case ParamType::array_locations:
        case ParamType::array_zones:
            if (value) param.name_values = expect_string_array(*value, where + ".value");
            break;
    }
    if (param.size && *param.size < 1)
        fail(Errc::out_of_bounds, where + ".size must be at least 1");
    return param;
}

std::string read_expression_item(const Json& v, const std::string& where) {
    // Published examples write the expression either as a string or as a
    // one-element array of strings; accept both.
    if (v.is_string()) return v.get<std::string>();
    if (v.is_array() && v.size() == 1 && v[0].is_string()) return v[0].get<std::string>();
    fail(Errc::type_mismatch, where + " must be a string (or one-element array of strings)");
}

AttributeSpec read_attribute(const Json& v, std::size_t index) {
    const std::string where = "attributes[" + std::to_string(index) + "]";
    ObjectReader obj(v, where);
    AttributeSpec attr;
    attr.name = expect_string(obj.require("name"), where + ".name");
    const std::string type = expect_string(obj.require("type"), where + ".type");
    if (type == "string") attr.type = AttrType::string_;
    else if (type == "integer") attr.type = AttrType::integer;
    else if (type == "real") attr.type = AttrType::real;
    else if (type == "location") attr.type = AttrType::location;
    else if (type == "array_primitives") attr.type = AttrType::array_primitives;
    else fail(Errc::type_mismatch, where + ".type '" + type + "' is not an attribute type");

    const double factor = read_unit(obj);
    if (const Json* pdf = obj.get("pdf")) attr.pdf = read_pdf(*pdf, where + ".pdf", factor);
    if (const Json* e = obj.get("expression"))
        attr.expression = read_expression_item(*e, where + ".expression");
    if (const Json* c = obj.get("constraints"))
        attr.constraints = expect_string_array(*c, where + ".constraints");
    if (const Json* s = obj.get("subset_primitives"))
        attr.subset_primitives = expect_string(*s, where + ".subset_primitives");
    if (const Json* s = obj.get("subset_locations"))
        attr.subset_locations = expect_string(*s, where + ".subset_locations");
    if (const Json* s = obj.get("subset_zones"))
        attr.subset_zones = expect_string(*s, where + ".subset_zones");
    if (const Json* w = obj.get("weights")) {
        if (!w->is_array()) fail(Errc::type_mismatch, where + ".weights must be an array");
        for (const Json& item : *w)
            attr.weights.push_back(expect_number(item, where + ".weights entry"));
    }
    if (const Json* o = obj.get("output_csv")) attr.output_csv = expect_bool(*o, where + ".output_csv");
    if (const Json* d = obj.get("dynamism")) {
        attr.dynamism = expect_number(*d, where + ".dynamism");
        if (*attr.dynamism < 0.0 || *attr.dynamism > 1.0)
            fail(Errc::out_of_bounds, where + ".dynamism must lie in [0, 1]");
    }
    if (const Json* p = obj.get("static_probability")) {
        attr.static_probability = expect_number(*p, where + ".static_probability");
        if (*attr.static_probability < 0.0 || *attr.static_probability > 1.0)
            fail(Errc::out_of_bounds, where + ".static_probability must lie in [0, 1]");
    }
    obj.finish();
    return attr;
}

MethodPois read_method_pois(const Json& v) {
    const Json* entry = &v;
    // The published examples wrap the single object in an array.
    if (v.is_array()) {
        if (v.size() != 1)
            fail(Errc::type_mismatch, "method_pois must hold exactly one object");
        entry = &v[0];
    }
    ObjectReader obj(*entry, "method_pois");
    MethodPois mp;
    mp.locations = expect_string_array(obj.require("locations"), "method_pois.locations");
    // Distances are metres; the pdf carries no unit declaration of its own.
    mp.pdf = read_pdf(obj.require("pdf"), "method_pois.pdf", 1.0);
    obj.finish();
    if (mp.locations.size() != 2)
        fail(Errc::type_mismatch, "method_pois.locations must name exactly two attributes");
    return mp;
}

}  // namespace

InstanceConfig parse_config(const std::string& json_text) {
    Json root;
    try {
        root = Json::parse(json_text);
    } catch (const Json::parse_error& e) {
        fail(Errc::syntax_error, std::string("configuration is not valid JSON: ") + e.what());
    }
    ObjectReader obj(root, "configuration");
    InstanceConfig cfg;
    if (const Json* v = obj.get("network")) cfg.network = expect_string(*v, "network");
    if (const Json* v = obj.get("seed")) {
        if (!v->is_number_integer()) fail(Errc::type_mismatch, "seed must be an integer");
        if (!v->is_number_unsigned() && v->get<std::int64_t>() < 0)
            fail(Errc::out_of_bounds, "seed must be non-negative");
        cfg.seed = v->get<std::uint64_t>();
    }
    if (const Json* v = obj.get("problem")) cfg.problem = expect_string(*v, "problem");
    if (const Json* v = obj.get("fixed_lines")) {
        cfg.fixed_lines = expect_bool(*v, "fixed_lines");
        if (cfg.fixed_lines)
            cfg.warnings.push_back("fixed-line data unsupported; fixed_lines is ignored");
    }
    if (const Json* v = obj.get("max_speed_factor")) {
        cfg.max_speed_factor = expect_number(*v, "max_speed_factor");
        if (!(cfg.max_speed_factor > 0.0) || cfg.max_speed_factor > 1.0)
            fail(Errc::out_of_bounds, "max_speed_factor must lie in (0, 1]");
    }
    if (const Json* v = obj.get("replicas")) {
        cfg.replicas = expect_integer(*v, "replicas");
        if (cfg.replicas < 1) fail(Errc::out_of_bounds, "replicas must be at least 1");
    }
    cfg.requests = expect_integer(obj.require("requests"), "requests");
    if (cfg.requests < 1) fail(Errc::out_of_bounds, "requests must be at least 1");
    if (const Json* v = obj.get("instance_filename"))
        cfg.instance_filename = expect_string_array(*v, "instance_filename");
    if (const Json* v = obj.get("places")) {
        if (!v->is_array()) fail(Errc::type_mismatch, "places must be an array");
        for (std::size_t i = 0; i < v->size(); ++i) cfg.places.push_back(read_place((*v)[i], i));
    }
    if (const Json* v = obj.get("parameters")) {
        if (!v->is_array()) fail(Errc::type_mismatch, "parameters must be an array");
        for (std::size_t i = 0; i < v->size(); ++i)
            cfg.parameters.push_back(read_parameter((*v)[i], i));
    }
    if (const Json* v = obj.get("attributes")) {
        if (!v->is_array()) fail(Errc::type_mismatch, "attributes must be an array");
        for (std::size_t i = 0; i < v->size(); ++i)
            cfg.attributes.push_back(read_attribute((*v)[i], i));
    }
    if (const Json* v = obj.get("travel_time_matrix"))
        cfg.travel_time_matrix = expect_string_array(*v, "travel_time_matrix");
    if (const Json* v = obj.get("method_pois")) cfg.method_pois = read_method_pois(*v);
    obj.finish();
    return cfg;
}

InstanceConfig parse_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::io_error, "cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

// ---------------------------------------------------------------------------
// Serialisation (canonical units, so no unit sub-items are emitted)

namespace {

Json primitive_to_json(const Primitive& p) {
    return std::visit([](const auto& v) -> Json { return v; }, p);
}

Json pdf_to_json(const PdfSpec& pdf) {
    Json out;
    out["type"] = pdf_family_name(pdf.family);
    out["loc"] = pdf.loc;
    out["scale"] = pdf.scale;
    if (pdf.aux) out["aux"] = *pdf.aux;
    return out;
}

}  // namespace

std::string serialize_config(const InstanceConfig& cfg) {
    Json root;
    root["network"] = cfg.network;
    root["seed"] = cfg.seed;
    root["problem"] = cfg.problem;
    root["fixed_lines"] = cfg.fixed_lines;
    root["max_speed_factor"] = cfg.max_speed_factor;
    root["replicas"] = cfg.replicas;
    root["requests"] = cfg.requests;
    if (!cfg.instance_filename.empty()) root["instance_filename"] = cfg.instance_filename;
    if (!cfg.places.empty()) {
        Json arr = Json::array();
        for (const PlaceSpec& p : cfg.places) {
            Json o;
            o["name"] = p.name;
            o["type"] = p.is_zone ? "zone" : "location";
            if (p.centroid) o["centroid"] = true;
            if (p.lon) o["lon"] = *p.lon;
            if (p.lat) o["lat"] = *p.lat;
            if (p.cls) o["class"] = *p.cls;
            if (p.length_lon_m) o["length_lon"] = *p.length_lon_m;
            if (p.length_lat_m) o["length_lat"] = *p.length_lat_m;
            if (p.radius_m) o["radius"] = *p.radius_m;
            arr.push_back(std::move(o));
        }
        root["places"] = std::move(arr);
    }
    if (!cfg.parameters.empty()) {
        Json arr = Json::array();
        for (const ParameterSpec& p : cfg.parameters) {
            Json o;
            o["name"] = p.name;
            o["type"] = param_type_name(p.type);
            if (p.int_value) o["value"] = *p.int_value;
            else if (p.real_value) o["value"] = *p.real_value;
            else if (p.string_value) o["value"] = *p.string_value;
            else if (p.type == ParamType::array_primitives) {
                Json items = Json::array();
                for (const Primitive& item : p.prim_values)
                    items.push_back(primitive_to_json(item));
                o["value"] = std::move(items);
            } else if (!p.name_values.empty()) {
                o["value"] = p.name_values;
            }
            if (p.size) o["size"] = *p.size;
            if (p.locs) o["locs"] = *p.locs;
            arr.push_back(std::move(o));
        }
        root["parameters"] = std::move(arr);
    }
    if (!cfg.attributes.empty()) {
        Json arr = Json::array();
        for (const AttributeSpec& a : cfg.attributes) {
            Json o;
            o["name"] = a.name;
            o["type"] = attr_type_name(a.type);
            if (a.pdf) o["pdf"] = pdf_to_json(*a.pdf);
            if (a.expression) o["expression"] = *a.expression;
            if (!a.constraints.empty()) o["constraints"] = a.constraints;
            if (a.subset_primitives) o["subset_primitives"] = *a.subset_primitives;
            if (a.subset_locations) o["subset_locations"] = *a.subset_locations;
            if (a.subset_zones) o["subset_zones"] = *a.subset_zones;
            if (!a.weights.empty()) o["weights"] = a.weights;
            if (!a.output_csv) o["output_csv"] = false;
            if (a.dynamism) o["dynamism"] = *a.dynamism;
            if (a.static_probability) o["static_probability"] = *a.static_probability;
            arr.push_back(std::move(o));
        }
        root["attributes"] = std::move(arr);
    }
    if (!cfg.travel_time_matrix.empty()) root["travel_time_matrix"] = cfg.travel_time_matrix;
    if (cfg.method_pois) {
        Json o;
        o["locations"] = cfg.method_pois->locations;
        o["pdf"] = pdf_to_json(cfg.method_pois->pdf);
        root["method_pois"] = Json::array({std::move(o)});
    }
    return root.dump(2);
}

// ---------------------------------------------------------------------------
// Validation

namespace {

const PlaceSpec* find_place(const InstanceConfig& cfg, const std::string& name) {
    for (const PlaceSpec& p : cfg.places)
        if (p.name == name) return &p;
    return nullptr;
}

const ParameterSpec* find_parameter(const InstanceConfig& cfg, const std::string& name) {
    for (const ParameterSpec& p : cfg.parameters)
        if (p.name == name) return &p;
    return nullptr;
}

const AttributeSpec* find_attribute(const InstanceConfig& cfg, const std::string& name) {
    for (const AttributeSpec& a : cfg.attributes)
        if (a.name == name) return &a;
    return nullptr;
}

// Resolved length of a subset array: declared entries, possibly grown to
// `size`.
std::size_t subset_length(const ParameterSpec& p) {
    std::size_t n = p.type == ParamType::array_primitives ? p.prim_values.size()
                                                          : p.name_values.size();
    if (p.size && static_cast<std::size_t>(*p.size) > n) n = static_cast<std::size_t>(*p.size);
    return n;
}

}  // namespace

ValidatedConfig validate_config(const InstanceConfig& cfg, const RoadNetwork& net) {
    ValidatedConfig out;
    out.cfg = cfg;
    const Bounds bounds = net.bounds();

    // --- unique, non-reserved declaration names across all three item kinds
    std::set<std::string> seen;
    auto claim_name = [&](const std::string& name, const char* kind, bool may_be_reserved) {
        if (name.empty()) fail(Errc::type_mismatch, std::string(kind) + " with empty name");
        if (!seen.insert(name).second)
            fail(Errc::duplicate_name, std::string(kind) + " '" + name + "' declared twice");
        if (is_reserved_name(name) && !may_be_reserved)
            fail(Errc::reserved_name,
                 std::string(kind) + " '" + name + "' uses a reserved identifier");
    };
    for (const PlaceSpec& p : cfg.places) claim_name(p.name, "place", false);
    for (const ParameterSpec& p : cfg.parameters) {
        // The walking budget may be constant (parameter) or per-request
        // (attribute); either way it feeds stops() through the environment.
        claim_name(p.name, "parameter",
                   p.name == "max_walking" || p.name == "walk_speed");
    }
    for (const AttributeSpec& a : cfg.attributes) {
        // time_stamp / max_walking / walk_speed are attribute roles; only
        // bus_stations can never be declared.
        claim_name(a.name, "attribute", a.name != "bus_stations");
    }

    // --- places: resolve coordinates, check bounds, build zones
    for (const PlaceSpec& p : cfg.places) {
        ResolvedPlace rp;
        rp.pos = p.centroid ? bounds.centre() : LonLat{*p.lon, *p.lat};
        if (!bounds.contains(rp.pos))
            fail(Errc::out_of_bounds,
                 "place '" + p.name + "' lies outside the network bounding box");
        rp.is_school = p.cls && *p.cls == "school";
        if (p.is_zone) {
            Zone z;
            z.centre = rp.pos;
            if (p.radius_m) {
                z.shape = Zone::Shape::circle;
                z.radius_m = *p.radius_m;
            } else {
                z.shape = Zone::Shape::rectangle;
                z.length_lon_m = *p.length_lon_m;
                z.length_lat_m = *p.length_lat_m;
            }
            rp.zone = z;
        }
        out.places.push_back(std::move(rp));
    }

    // --- parameters: reference checks and fill rules
    bool has_school = false;
    for (const ResolvedPlace& rp : out.places) has_school |= rp.is_school;
    for (const ParameterSpec& p : cfg.parameters) {
        if (p.type == ParamType::array_locations || p.type == ParamType::array_zones) {
            for (const std::string& ref : p.name_values) {
                const PlaceSpec* place = find_place(cfg, ref);
                if (!place)
                    fail(Errc::unresolved_reference,
                         "parameter '" + p.name + "' references unknown place '" + ref + "'");
                const bool want_zone = p.type == ParamType::array_zones;
                if (place->is_zone != want_zone)
                    fail(Errc::type_mismatch, "parameter '" + p.name + "' expects " +
                                                  (want_zone ? "zones" : "locations") +
                                                  " but '" + ref + "' is not one");
            }
            const std::size_t given = p.name_values.size();
            if (p.size && static_cast<std::size_t>(*p.size) < given)
                fail(Errc::out_of_bounds,
                     "parameter '" + p.name + "' size is smaller than its value list");
            const bool needs_fill = p.size && static_cast<std::size_t>(*p.size) > given;
            if (needs_fill && p.type == ParamType::array_zones)
                fail(Errc::type_mismatch,
                     "parameter '" + p.name + "' cannot grow a zone array randomly");
            if (needs_fill && p.locs && *p.locs == "schools" && !has_school)
                fail(Errc::unresolved_reference,
                     "parameter '" + p.name + "' wants school locations but none are declared");
            if (!p.size && given == 0)
                fail(Errc::missing_field,
                     "parameter '" + p.name + "' has neither values nor a size");
        } else if (p.locs || (p.size && p.type != ParamType::array_primitives)) {
            fail(Errc::type_mismatch,
                 "parameter '" + p.name + "' carries array-only sub-items");
        } else if (p.type == ParamType::array_primitives && p.size &&
                   static_cast<std::size_t>(*p.size) != p.prim_values.size()) {
            fail(Errc::length_mismatch,
                 "parameter '" + p.name + "' size differs from its value list");
        }
    }

    // --- attributes: value sources, subsets, weights, reserved roles
    for (const AttributeSpec& a : cfg.attributes) {
        const int sources = int(a.pdf.has_value()) + int(a.expression.has_value()) +
                            int(a.subset_primitives.has_value()) +
                            int(a.subset_locations.has_value()) + int(a.subset_zones.has_value());
        if (a.dynamism) {
            if (a.name != "time_stamp")
                fail(Errc::type_mismatch,
                     "attribute '" + a.name + "': dynamism is only valid on time_stamp");
            if (a.expression)
                fail(Errc::type_mismatch,
                     "time_stamp cannot have both an expression and a dynamism target");
        }
        if (a.static_probability && a.name != "time_stamp")
            fail(Errc::type_mismatch,
                 "attribute '" + a.name + "': static_probability is only valid on time_stamp");
        if (sources > 1)
            fail(Errc::type_mismatch,
                 "attribute '" + a.name + "' declares more than one value source");
        // Bare location attributes fall back to a uniform node choice, so
        // only non-location attributes must name a value source.
        if (sources == 0 && a.type != AttrType::location && !a.dynamism)
            fail(Errc::missing_field,
                 "attribute '" + a.name + "' has no pdf, expression, or subset");
        if (a.pdf && a.type != AttrType::integer && a.type != AttrType::real)
            fail(Errc::type_mismatch,
                 "attribute '" + a.name + "': a pdf needs an integer or real type");
        if ((a.subset_locations || a.subset_zones) && a.type != AttrType::location)
            fail(Errc::type_mismatch,
                 "attribute '" + a.name + "': location subsets need type location");
        if (a.subset_primitives && a.type == AttrType::location)
            fail(Errc::type_mismatch,
                 "attribute '" + a.name + "': subset_primitives cannot yield locations");
        const bool poi_driven =
            cfg.method_pois && (cfg.method_pois->locations[0] == a.name ||
                                cfg.method_pois->locations[1] == a.name);
        if (poi_driven && sources > 0)
            fail(Errc::type_mismatch, "attribute '" + a.name +
                                          "' is placed by method_pois and cannot have its own "
                                          "value source");
        if (!a.weights.empty()) {
            const std::string subset = a.subset_primitives ? *a.subset_primitives
                                       : a.subset_locations ? *a.subset_locations
                                       : a.subset_zones     ? *a.subset_zones
                                                            : "";
            if (subset.empty())
                fail(Errc::type_mismatch,
                     "attribute '" + a.name + "': weights need a subset declaration");
            for (double w : a.weights)
                if (!(w >= 0.0))
                    fail(Errc::out_of_bounds,
                         "attribute '" + a.name + "': weights must be non-negative");
        }
        // Subset references must point at parameters of the matching type.
        const auto check_subset = [&](const std::optional<std::string>& ref, ParamType want) {
            if (!ref) return;
            const ParameterSpec* p = find_parameter(cfg, *ref);
            if (!p)
                fail(Errc::unresolved_reference,
                     "attribute '" + a.name + "' references unknown parameter '" + *ref + "'");
            if (p->type != want)
                fail(Errc::type_mismatch, "attribute '" + a.name + "': parameter '" + *ref +
                                              "' is not " + param_type_name(want));
            if (!a.weights.empty() && a.weights.size() != subset_length(*p))
                fail(Errc::length_mismatch,
                     "attribute '" + a.name + "': weights length differs from '" + *ref + "'");
        };
        check_subset(a.subset_primitives, ParamType::array_primitives);
        check_subset(a.subset_locations, ParamType::array_locations);
        check_subset(a.subset_zones, ParamType::array_zones);
    }

    // --- method_pois: two distinct, source-free location attributes
    if (cfg.method_pois) {
        const auto& locs = cfg.method_pois->locations;
        if (locs[0] == locs[1])
            fail(Errc::type_mismatch, "method_pois must name two distinct attributes");
        for (const std::string& name : locs) {
            const AttributeSpec* a = find_attribute(cfg, name);
            if (!a)
                fail(Errc::unresolved_reference,
                     "method_pois references unknown attribute '" + name + "'");
            if (a->type != AttrType::location)
                fail(Errc::type_mismatch,
                     "method_pois attribute '" + name + "' must have type location");
        }
    }

    // --- instance_filename: single-primitive items only
    for (const std::string& item : cfg.instance_filename) {
        static const std::set<std::string> kGeneralItems = {
            "network", "seed", "problem", "fixed_lines", "max_speed_factor", "replicas",
            "requests"};
        if (kGeneralItems.count(item)) continue;
        const ParameterSpec* p = find_parameter(cfg, item);
        if (!p)
            fail(Errc::unresolved_reference,
                 "instance_filename references unknown item '" + item + "'");
        if (p->type != ParamType::string_ && p->type != ParamType::integer &&
            p->type != ParamType::real)
            fail(Errc::type_mismatch,
                 "instance_filename item '" + item + "' is not a single primitive");
    }

    // --- travel_time_matrix: bus_stations, location attributes, or location
    //     array parameters
    for (const std::string& name : cfg.travel_time_matrix) {
        if (name == "bus_stations") continue;
        if (const AttributeSpec* a = find_attribute(cfg, name)) {
            if (a->type != AttrType::location)
                fail(Errc::type_mismatch,
                     "travel_time_matrix entry '" + name + "' is not a location attribute");
            continue;
        }
        if (const ParameterSpec* p = find_parameter(cfg, name)) {
            if (p->type != ParamType::array_locations)
                fail(Errc::type_mismatch,
                     "travel_time_matrix entry '" + name + "' is not a location array");
            continue;
        }
        fail(Errc::unresolved_reference,
             "travel_time_matrix references unknown name '" + name + "'");
    }

    // --- expressions & constraints: parse, resolve identifiers, collect deps
    std::set<std::string> attr_names, param_names;
    for (const AttributeSpec& a : cfg.attributes) attr_names.insert(a.name);
    for (const ParameterSpec& p : cfg.parameters) param_names.insert(p.name);
    for (std::size_t i = 0; i < cfg.attributes.size(); ++i) {
        const AttributeSpec& a = cfg.attributes[i];
        ValidatedAttribute va;
        std::set<std::string> idents;
        if (a.expression) {
            va.expression = parse_expression(*a.expression);
            const auto deps = dependencies(va.expression);
            idents.insert(deps.begin(), deps.end());
            va.uses_stops |= calls_function(va.expression, "stops");
        }
        for (const std::string& c : a.constraints) {
            ExprPtr e = parse_expression(c);
            const auto deps = dependencies(e);
            idents.insert(deps.begin(), deps.end());
            va.uses_stops |= calls_function(e, "stops");
            va.constraints.push_back(std::move(e));
        }
        for (const std::string& ident : idents) {
            if (ident == a.name) continue;  // self-reference in a constraint
            if (attr_names.count(ident)) {
                va.attr_deps.insert(ident);
            } else if (!param_names.count(ident)) {
                fail(Errc::unresolved_reference, "attribute '" + a.name +
                                                     "' references undeclared identifier '" +
                                                     ident + "'");
            }
        }
        // stops() reads the walking budget through the environment, so a
        // per-request max_walking / walk_speed attribute must be evaluated
        // first even though the expression never names it; a parameter of
        // the same name is always bound already.
        if (va.uses_stops) {
            for (const char* walk_name : {"max_walking", "walk_speed"}) {
                if (attr_names.count(walk_name)) {
                    if (walk_name != a.name) va.attr_deps.insert(walk_name);
                } else if (!param_names.count(walk_name)) {
                    fail(Errc::unresolved_reference,
                         "attribute '" + a.name + "' calls stops() but '" + walk_name +
                             "' is declared neither as an attribute nor as a parameter");
                }
            }
        }
        out.attributes.push_back(std::move(va));
    }

    // --- topological evaluation order (Kahn), declaration order breaks ties
    {
        const std::size_t n = cfg.attributes.size();
        std::map<std::string, std::size_t> index_of;
        for (std::size_t i = 0; i < n; ++i) index_of[cfg.attributes[i].name] = i;
        std::vector<std::set<std::size_t>> blockers(n);  // i waits for these
        std::vector<std::vector<std::size_t>> dependents(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (const std::string& dep : out.attributes[i].attr_deps) {
                const std::size_t j = index_of.at(dep);
                if (j == i) continue;
                if (blockers[i].insert(j).second) dependents[j].push_back(i);
            }
        }
        std::set<std::size_t> ready;  // ordered: smallest declaration index first
        for (std::size_t i = 0; i < n; ++i)
            if (blockers[i].empty()) ready.insert(i);
        while (!ready.empty()) {
            const std::size_t i = *ready.begin();
            ready.erase(ready.begin());
            out.attribute_order.push_back(i);
            for (std::size_t k : dependents[i]) {
                blockers[k].erase(i);
                if (blockers[k].empty()) ready.insert(k);
            }
        }
        if (out.attribute_order.size() != n) {
            std::string cycle;
            for (std::size_t i = 0; i < n; ++i) {
                if (!blockers[i].empty()) {
                    if (!cycle.empty()) cycle += ", ";
                    cycle += cfg.attributes[i].name;
                }
            }
            fail(Errc::cyclic_dependency, "attributes form a dependency cycle: " + cycle);
        }
    }

    // --- planning period from the conventional parameter pair
    const auto param_seconds = [&](const char* name) -> std::optional<double> {
        const ParameterSpec* p = find_parameter(cfg, name);
        if (!p) return std::nullopt;
        if (p->int_value) return static_cast<double>(*p->int_value);
        if (p->real_value) return *p->real_value;
        return std::nullopt;
    };
    out.ts_min = param_seconds("min_planning_period");
    out.ts_max = param_seconds("max_planning_period");
    if (out.ts_min && out.ts_max && !(*out.ts_min < *out.ts_max))
        fail(Errc::out_of_bounds, "min_planning_period must be before max_planning_period");

    for (std::size_t i = 0; i < cfg.attributes.size(); ++i)
        if (cfg.attributes[i].name == "time_stamp") out.time_stamp_index = i;
    if (out.time_stamp_index) {
        const AttributeSpec& ts = cfg.attributes[*out.time_stamp_index];
        if (ts.dynamism && (!out.ts_min || !out.ts_max))
            fail(Errc::missing_field,
                 "a dynamism target needs min_planning_period and max_planning_period");
    }

    return out;
}

}  // namespace reqgen
