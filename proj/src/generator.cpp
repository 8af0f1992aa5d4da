#include "reqgen/generator.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "reqgen/csv.hpp"
#include "reqgen/errors.hpp"
#include "reqgen/graphml.hpp"
#include "reqgen/metrics.hpp"

namespace reqgen {

namespace {

constexpr int kAttributeRetries = 50;
constexpr int kRecordRetries = 10000;
constexpr double kPi = 3.141592653589793238462643383279502884;

std::int64_t round_half_up(double x) { return static_cast<std::int64_t>(std::floor(x + 0.5)); }

double env_number(const Env& env, const char* name) {
    const auto it = env.find(name);
    if (it == env.end())
        fail(Errc::missing_attribute, std::string("stops() needs attribute '") + name + "'");
    if (const auto* i = std::get_if<std::int64_t>(&it->second))
        return static_cast<double>(*i);
    if (const auto* d = std::get_if<double>(&it->second)) return *d;
    fail(Errc::missing_attribute, std::string("attribute '") + name + "' must be numeric");
}

Value coerce_value(Value v, AttrType type, const std::string& attr) {
    switch (type) {
        case AttrType::integer:
            if (std::holds_alternative<std::int64_t>(v)) return v;
            if (const auto* d = std::get_if<double>(&v)) return round_half_up(*d);
            break;
        case AttrType::real:
            if (const auto* i = std::get_if<std::int64_t>(&v))
                return static_cast<double>(*i);
            if (std::holds_alternative<double>(v)) return v;
            break;
        case AttrType::string_:
            if (std::holds_alternative<std::string>(v)) return v;
            break;
        case AttrType::location:
            if (std::holds_alternative<ExprLocation>(v)) return v;
            break;
        case AttrType::array_primitives:
            if (std::holds_alternative<ValueArray>(v)) return v;
            if (const auto* s = std::get_if<ValueSet>(&v)) return ValueArray{s->items};
            break;
    }
    fail(Errc::type_error, "attribute '" + attr + "' produced a value of the wrong type (" +
                               value_to_string(v) + " is not " + attr_type_name(type) + ")");
}

}  // namespace

const Value* RequestRecord::find(const std::string& name) const {
    for (const auto& [key, value] : values)
        if (key == name) return &value;
    return nullptr;
}

std::vector<double> assign_time_stamps(std::size_t n, double ts_min, double ts_max,
                                       double target_rho, bool integer_values, Rng& rng,
                                       bool* reached) {
    if (n < 2) fail(Errc::too_few_requests, "a dynamism target needs at least two requests");
    if (!(ts_min < ts_max))
        fail(Errc::out_of_bounds, "planning period must have positive length");
    if (target_rho < 0.0 || target_rho > 1.0)
        fail(Errc::invalid_params, "dynamism target must lie in [0, 1]");

    std::vector<double> stamps(n);
    if (target_rho == 0.0) {
        // Everything announced at one instant strictly inside the period.
        const double instant = ts_min + rng.next_open() * (ts_max - ts_min);
        std::fill(stamps.begin(), stamps.end(), instant);
    } else {
        const double theta = (ts_max - ts_min) / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i)
            stamps[i] = ts_min + static_cast<double>(i + 1) * theta;
        if (target_rho < 1.0) {
            const auto rho_of = [&](const std::vector<double>& v) {
                return measure_dynamism(v, ts_min, ts_max).rho;
            };
            double best = std::abs(rho_of(stamps) - target_rho);
            const std::size_t max_moves = 10 * n;
            for (std::size_t move = 0; move < max_moves && best > 0.02; ++move) {
                std::size_t j = 1 + static_cast<std::size_t>(
                                        rng.next_double() * static_cast<double>(n - 1));
                if (j > n - 1) j = n - 1;
                const double fraction = rng.next_double();
                const double old = stamps[j];
                stamps[j] -= fraction * (stamps[j] - stamps[j - 1]);
                const double diff = std::abs(rho_of(stamps) - target_rho);
                if (diff < best)
                    best = diff;
                else
                    stamps[j] = old;
            }
        }
    }
    if (integer_values) {
        for (double& t : stamps) {
            t = std::floor(t + 0.5);
            // Rounding must not turn a dynamic request static or push it
            // past the period end.
            if (t <= ts_min) t = std::floor(ts_min) + 1.0;
            if (t > ts_max) t = std::floor(ts_max);
        }
    }
    std::sort(stamps.begin(), stamps.end());
    if (reached) {
        const double final_rho = measure_dynamism(stamps, ts_min, ts_max).rho;
        *reached = std::abs(final_rho - target_rho) <= 0.02 + 1e-12;
    }
    return stamps;
}

PoiPlacement apply_poi_method(const PdfSpec& distance_pdf, const PoiIndex& pois,
                              const RoadNetwork& net, Rng& rng) {
    if (pois.cells.empty() || pois.total() <= 0)
        fail(Errc::degenerate_poi_index, "POI grid holds no points");

    PoiPlacement out;
    // Which attribute of the configured pair lands inside the chosen cell.
    out.zone_is_first = rng.next_double() < 0.5;

    std::vector<double> weights;
    weights.reserve(pois.cells.size());
    for (const PoiCell& cell : pois.cells) weights.push_back(static_cast<double>(cell.count));
    const PoiCell& cell = pois.cells[weighted_choice(pois.cells.size(), weights, rng)];
    Zone zone;
    zone.shape = Zone::Shape::rectangle;
    zone.centre = cell.centre;
    zone.length_lon_m = 2.0 * cell.half_lon_m;
    zone.length_lat_m = 2.0 * cell.half_lat_m;
    const LonLat raw = random_point_in_zone(zone, rng);
    const NodeId first_node = net.nearest_node(raw);
    out.in_zone = ExprLocation{first_node, net.coord(first_node)};

    const Bounds bounds = net.bounds();
    int redraws = 0;
    const auto draw_distance = [&]() {
        double d = sample_pdf(distance_pdf, rng);
        while (d < 0.0) {  // trip distances are truncated below at zero
            if (++redraws >= 200)
                fail(Errc::placement_failure, "no in-bounds partner location after 200 redraws");
            d = sample_pdf(distance_pdf, rng);
        }
        return d;
    };
    double distance = draw_distance();
    int bearing_tries = 0;
    while (true) {
        const double bearing = rng.next_double() * 2.0 * kPi;
        const LonLat candidate = destination_point(out.in_zone.pos, distance, bearing);
        if (bounds.contains(candidate)) {
            const NodeId second_node = net.nearest_node(candidate);
            out.offset = ExprLocation{second_node, net.coord(second_node)};
            return out;
        }
        if (++redraws >= 200)
            fail(Errc::placement_failure, "no in-bounds partner location after 200 redraws");
        if (++bearing_tries >= 20) {  // this distance cannot stay in bounds; try another
            distance = draw_distance();
            bearing_tries = 0;
        }
    }
}

Generator::Generator(ValidatedConfig vcfg, const NetworkBundle& bundle)
    : vcfg_(std::move(vcfg)) {
    if (!bundle.drive || bundle.drive->empty())
        fail(Errc::empty_network, "generation needs a drive network in the bundle");
    drive_ = *bundle.drive;
    compute_arc_travel_times(drive_, vcfg_.cfg.max_speed_factor);
    walk_ = bundle.walk;
    stations_ = bundle.stations;
    pois_ = bundle.pois;

    if (vcfg_.cfg.method_pois) {
        if (!pois_ || pois_->total() <= 0)
            fail(Errc::degenerate_poi_index,
                 "configuration uses method_pois but the bundle has no POI grid");
        for (std::size_t i = 0; i < vcfg_.cfg.attributes.size(); ++i) {
            const std::string& name = vcfg_.cfg.attributes[i].name;
            if (name == vcfg_.cfg.method_pois->locations[0])
                poi_first_ = static_cast<std::ptrdiff_t>(i);
            if (name == vcfg_.cfg.method_pois->locations[1])
                poi_second_ = static_cast<std::ptrdiff_t>(i);
        }
    }
    bool uses_stops = false;
    for (const ValidatedAttribute& va : vcfg_.attributes) uses_stops |= va.uses_stops;
    if (uses_stops && stations_.empty())
        fail(Errc::empty_network, "stops() needs stations in the bundle");
}

const std::vector<double>& Generator::travel_row(std::size_t source_index) {
    const auto it = row_cache_.find(source_index);
    if (it != row_cache_.end()) return it->second;
    return row_cache_.emplace(source_index, shortest_travel_times_from(drive_, source_index))
        .first->second;
}

double Generator::direct_travel_time(const ExprLocation& a, const ExprLocation& b) {
    const std::size_t from = a.node >= 0 && drive_.has_node(a.node)
                                 ? drive_.index_of(a.node)
                                 : drive_.index_of(drive_.nearest_node(a.pos));
    const std::size_t to = b.node >= 0 && drive_.has_node(b.node)
                               ? drive_.index_of(b.node)
                               : drive_.index_of(drive_.nearest_node(b.pos));
    return travel_row(from)[to];  // kUnreachable when disconnected
}

ValueSet Generator::stations_near(const ExprLocation& loc, const Env& env) {
    const double max_walk = env_number(env, "max_walking");
    const double speed = env_number(env, "walk_speed");
    const std::vector<NodeId> ids = stations_within_walk(
        loc.pos, stations_, walk_ ? &*walk_ : nullptr, max_walk, speed);
    std::vector<Primitive> items;
    items.reserve(ids.size());
    for (NodeId id : ids) items.emplace_back(static_cast<std::int64_t>(id));
    return make_set(std::move(items));
}

ExprLocation Generator::snap(LonLat p) const {
    const NodeId id = drive_.nearest_node(p);
    return {id, drive_.coord(id)};
}

ExprLocation Generator::uniform_node(Rng& rng) const {
    const std::size_t idx = weighted_choice(drive_.node_count(), {}, rng);
    return {drive_.id_at(idx), drive_.coord_at(idx)};
}

Generator::ReplicaSetup Generator::resolve_parameters(Rng& rng) {
    ReplicaSetup setup;
    std::vector<LonLat> schools;
    for (std::size_t i = 0; i < vcfg_.cfg.places.size(); ++i)
        if (vcfg_.places[i].is_school) schools.push_back(vcfg_.places[i].pos);
    const auto place_position = [&](const std::string& name) {
        for (std::size_t i = 0; i < vcfg_.cfg.places.size(); ++i)
            if (vcfg_.cfg.places[i].name == name) return vcfg_.places[i];
        fail(Errc::unresolved_reference, "unknown place '" + name + "'");
    };

    for (const ParameterSpec& p : vcfg_.cfg.parameters) {
        switch (p.type) {
            case ParamType::string_:
                setup.base_env[p.name] = *p.string_value;
                break;
            case ParamType::integer:
                if (p.int_value)
                    setup.base_env[p.name] = *p.int_value;
                else
                    setup.base_env[p.name] = *p.real_value;
                break;
            case ParamType::real:
                setup.base_env[p.name] = *p.real_value;
                break;
            case ParamType::array_primitives:
                setup.base_env[p.name] = ValueArray{p.prim_values};
                break;
            case ParamType::array_locations: {
                std::vector<ExprLocation> locs;
                for (const std::string& ref : p.name_values)
                    locs.push_back(snap(place_position(ref).pos));
                const std::size_t want =
                    p.size ? std::max<std::size_t>(static_cast<std::size_t>(*p.size),
                                                   locs.size())
                           : locs.size();
                const bool from_schools = p.locs && *p.locs == "schools";
                while (locs.size() < want) {
                    if (from_schools) {
                        const std::size_t k = weighted_choice(schools.size(), {}, rng);
                        locs.push_back(snap(schools[k]));
                    } else {
                        locs.push_back(uniform_node(rng));
                    }
                }
                setup.location_params[p.name] = std::move(locs);
                break;
            }
            case ParamType::array_zones: {
                std::vector<Zone> zones;
                for (const std::string& ref : p.name_values) {
                    const ResolvedPlace place = place_position(ref);
                    zones.push_back(*place.zone);
                }
                setup.zone_params[p.name] = std::move(zones);
                break;
            }
        }
    }

    if (vcfg_.time_stamp_index) {
        const AttributeSpec& ts = vcfg_.cfg.attributes[*vcfg_.time_stamp_index];
        if (ts.dynamism) {
            setup.time_stamp_schedule = assign_time_stamps(
                static_cast<std::size_t>(vcfg_.cfg.requests), *vcfg_.ts_min, *vcfg_.ts_max,
                *ts.dynamism, ts.type == AttrType::integer, rng, &setup.schedule_reached);
        }
    }
    return setup;
}

Value Generator::sample_attribute(std::size_t attr_index, const ReplicaSetup& setup,
                                  const Env& env, std::size_t request_index, Rng& rng,
                                  std::optional<PoiPlacement>& poi) {
    const AttributeSpec& attr = vcfg_.cfg.attributes[attr_index];
    const ValidatedAttribute& va = vcfg_.attributes[attr_index];

    if (vcfg_.time_stamp_index && attr_index == *vcfg_.time_stamp_index &&
        !setup.time_stamp_schedule.empty())
        return setup.time_stamp_schedule[request_index];

    const auto idx = static_cast<std::ptrdiff_t>(attr_index);
    if (idx == poi_first_ || idx == poi_second_) {
        if (!poi) poi = apply_poi_method(vcfg_.cfg.method_pois->pdf, *pois_, drive_, rng);
        const bool is_pair_first = idx == poi_first_;
        return poi->zone_is_first == is_pair_first ? poi->in_zone : poi->offset;
    }

    if (attr.pdf) return sample_pdf(*attr.pdf, rng);

    if (va.expression) {
        EvalContext ctx;
        ctx.dtt = [this](const ExprLocation& a, const ExprLocation& b) {
            return direct_travel_time(a, b);
        };
        ctx.stops = [this](const ExprLocation& loc, const Env& e) {
            return stations_near(loc, e);
        };
        return evaluate(va.expression, env, ctx);
    }

    if (attr.subset_primitives) {
        const ParameterSpec* p = nullptr;
        for (const ParameterSpec& cand : vcfg_.cfg.parameters)
            if (cand.name == *attr.subset_primitives) p = &cand;
        const std::size_t k = weighted_choice(p->prim_values.size(), attr.weights, rng);
        return std::visit([](const auto& prim) -> Value { return prim; }, p->prim_values[k]);
    }
    if (attr.subset_locations) {
        const auto& locs = setup.location_params.at(*attr.subset_locations);
        return locs[weighted_choice(locs.size(), attr.weights, rng)];
    }
    if (attr.subset_zones) {
        const auto& zones = setup.zone_params.at(*attr.subset_zones);
        const Zone& zone = zones[weighted_choice(zones.size(), attr.weights, rng)];
        return snap(random_point_in_zone(zone, rng));
    }
    if (attr.type == AttrType::location) return uniform_node(rng);

    fail(Errc::missing_attribute, "attribute '" + attr.name + "' has no value source");
}

RequestRecord Generator::generate_request(const ReplicaSetup& setup, std::size_t request_index,
                                          Rng& rng) {
    EvalContext ctx;
    ctx.dtt = [this](const ExprLocation& a, const ExprLocation& b) {
        return direct_travel_time(a, b);
    };
    ctx.stops = [this](const ExprLocation& loc, const Env& e) { return stations_near(loc, e); };

    for (int attempt = 0; attempt < kRecordRetries; ++attempt) {
        Env env = setup.base_env;
        std::optional<PoiPlacement> poi;
        bool record_ok = true;

        for (const std::size_t ai : vcfg_.attribute_order) {
            const AttributeSpec& attr = vcfg_.cfg.attributes[ai];
            const ValidatedAttribute& va = vcfg_.attributes[ai];
            const auto idx = static_cast<std::ptrdiff_t>(ai);
            const bool is_poi = idx == poi_first_ || idx == poi_second_;
            // This attribute performs the pair placement if none exists yet;
            // its retries re-place the pair.
            const bool triggers_poi = is_poi && !poi.has_value();
            const bool scheduled =
                vcfg_.time_stamp_index && ai == *vcfg_.time_stamp_index &&
                !setup.time_stamp_schedule.empty();
            // Deterministic sources reproduce the same value, so re-sampling
            // cannot help: restart the record instead.
            const bool deterministic =
                static_cast<bool>(va.expression) || scheduled || (is_poi && !triggers_poi);
            const int tries = deterministic ? 1 : kAttributeRetries;

            bool attr_ok = false;
            for (int t = 0; t < tries; ++t) {
                if (triggers_poi) poi.reset();
                Value value = coerce_value(
                    sample_attribute(ai, setup, env, request_index, rng, poi), attr.type,
                    attr.name);
                env[attr.name] = std::move(value);
                bool satisfied = true;
                for (const ExprPtr& c : va.constraints) {
                    if (!truthy(evaluate(c, env, ctx))) {
                        satisfied = false;
                        break;
                    }
                }
                if (satisfied) {
                    attr_ok = true;
                    break;
                }
            }
            if (!attr_ok) {
                record_ok = false;
                break;
            }
        }
        if (!record_ok) continue;

        // A static request is known before the planning period starts.
        if (vcfg_.time_stamp_index) {
            const AttributeSpec& ts = vcfg_.cfg.attributes[*vcfg_.time_stamp_index];
            if (ts.static_probability && rng.next_double() < *ts.static_probability)
                env[ts.name] = ts.type == AttrType::integer ? Value(std::int64_t{0})
                                                            : Value(0.0);
        }

        RequestRecord record;
        for (const AttributeSpec& attr : vcfg_.cfg.attributes)
            record.values.emplace_back(attr.name, env.at(attr.name));
        return record;
    }
    fail(Errc::infeasible_config,
         "no request satisfying all constraints after " + std::to_string(kRecordRetries) +
             " restarts");
}

void Generator::collect_matrix(Instance& out, const ReplicaSetup& setup) {
    if (vcfg_.cfg.travel_time_matrix.empty()) return;
    std::set<std::string> seen;
    std::vector<std::size_t> sources;
    const auto add = [&](const std::string& id, LonLat pos, std::size_t node_index) {
        if (!seen.insert(id).second) return;  // first occurrence wins
        out.matrix_ids.push_back(id);
        out.matrix_coords.push_back(pos);
        sources.push_back(node_index);
    };
    for (const std::string& name : vcfg_.cfg.travel_time_matrix) {
        if (name == "bus_stations") {
            for (const Station& s : stations_)
                add(std::to_string(s.id), s.pos, drive_.index_of(s.drive_node));
        } else if (const auto it = setup.location_params.find(name);
                   it != setup.location_params.end()) {
            for (const ExprLocation& loc : it->second)
                add(std::to_string(loc.node), loc.pos, drive_.index_of(loc.node));
        } else {
            for (const RequestRecord& r : out.requests) {
                const Value* v = r.find(name);
                const ExprLocation& loc = std::get<ExprLocation>(*v);
                add(std::to_string(loc.node), loc.pos, drive_.index_of(loc.node));
            }
        }
    }
    out.matrix.resize(out.matrix_ids.size());
    for (std::size_t i = 0; i < sources.size(); ++i) {
        const std::vector<double>& row = travel_row(sources[i]);
        out.matrix[i].resize(sources.size());
        for (std::size_t j = 0; j < sources.size(); ++j) out.matrix[i][j] = row[sources[j]];
    }
}

Instance Generator::generate_replica(std::int64_t replica_index) {
    Rng rng = Rng::derive(vcfg_.cfg.seed, static_cast<std::uint64_t>(replica_index));
    ReplicaSetup setup = resolve_parameters(rng);

    Instance out;
    out.name = instance_filename_stem(vcfg_.cfg, replica_index);
    out.seed = vcfg_.cfg.seed;
    out.replica = replica_index;
    out.problem = vcfg_.cfg.problem;
    out.max_speed_factor = vcfg_.cfg.max_speed_factor;
    out.ts_min = vcfg_.ts_min;
    out.ts_max = vcfg_.ts_max;
    out.dynamism_target_reached = setup.schedule_reached;
    for (const AttributeSpec& attr : vcfg_.cfg.attributes)
        if (attr.output_csv) out.csv_columns.push_back(attr.name);

    const auto n = static_cast<std::size_t>(vcfg_.cfg.requests);
    out.requests.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.requests.push_back(generate_request(setup, i, rng));

    collect_matrix(out, setup);
    return out;
}

std::vector<Instance> Generator::generate_all() {
    std::vector<Instance> out;
    for (std::int64_t k = 1; k <= vcfg_.cfg.replicas; ++k) out.push_back(generate_replica(k));
    return out;
}

namespace {

std::string strip_whitespace(std::string s) {
    s.erase(std::remove_if(s.begin(), s.end(),
                           [](unsigned char c) { return std::isspace(c) != 0; }),
            s.end());
    return s;
}

std::string filename_item_value(const InstanceConfig& cfg, const std::string& item) {
    if (item == "network") return cfg.network;
    if (item == "seed") return std::to_string(cfg.seed);
    if (item == "problem") return cfg.problem;
    if (item == "fixed_lines") return cfg.fixed_lines ? "true" : "false";
    if (item == "max_speed_factor") return csv::format_double(cfg.max_speed_factor);
    if (item == "replicas") return std::to_string(cfg.replicas);
    if (item == "requests") return std::to_string(cfg.requests);
    for (const ParameterSpec& p : cfg.parameters) {
        if (p.name != item) continue;
        if (p.int_value) return std::to_string(*p.int_value);
        if (p.real_value) return csv::format_double(*p.real_value);
        if (p.string_value) return *p.string_value;
    }
    fail(Errc::unresolved_reference, "instance_filename item '" + item + "' has no value");
}

}  // namespace

std::string instance_filename_stem(const InstanceConfig& cfg, std::int64_t replica) {
    std::string stem;
    for (const std::string& item : cfg.instance_filename) {
        if (!stem.empty()) stem += "_";
        stem += strip_whitespace(filename_item_value(cfg, item));
    }
    if (stem.empty()) stem = "instance";
    return stem + "_" + std::to_string(replica);
}

void write_instance(const Instance& instance, const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) fail(Errc::io_error, "cannot create directory '" + out_dir + "'");
    const std::string base = out_dir + "/" + instance.name;

    std::vector<csv::Row> rows;
    rows.push_back(instance.csv_columns);
    for (const RequestRecord& r : instance.requests) {
        csv::Row row;
        row.reserve(instance.csv_columns.size());
        for (const std::string& col : instance.csv_columns)
            row.push_back(value_to_string(*r.find(col)));
        rows.push_back(std::move(row));
    }
    csv::write_file(base + ".csv", rows);

    if (!instance.matrix_ids.empty()) {
        std::vector<csv::Row> matrix_rows;
        csv::Row header;
        header.push_back("");
        for (const std::string& id : instance.matrix_ids) header.push_back(id);
        matrix_rows.push_back(std::move(header));
        for (std::size_t i = 0; i < instance.matrix_ids.size(); ++i) {
            csv::Row row;
            row.push_back(instance.matrix_ids[i]);
            for (double tt : instance.matrix[i])
                row.push_back(tt == kUnreachable ? "" : csv::format_double(tt));
            matrix_rows.push_back(std::move(row));
        }
        csv::write_file(base + "_tt_matrix.csv", matrix_rows);

        std::vector<LocationNode> nodes;
        nodes.reserve(instance.matrix_ids.size());
        for (std::size_t i = 0; i < instance.matrix_ids.size(); ++i)
            nodes.push_back({instance.matrix_ids[i], instance.matrix_coords[i]});
        std::vector<std::tuple<std::size_t, std::size_t, double>> arcs;
        for (std::size_t i = 0; i < instance.matrix.size(); ++i)
            for (std::size_t j = 0; j < instance.matrix[i].size(); ++j)
                if (i != j && instance.matrix[i][j] != kUnreachable)
                    arcs.emplace_back(i, j, instance.matrix[i][j]);
        write_locations_graphml(base + "_locations.graphml", nodes, arcs);
    }

    nlohmann::json meta;
    meta["seed"] = instance.seed;
    meta["replica"] = instance.replica;
    meta["problem"] = instance.problem;
    meta["requests"] = instance.requests.size();
    meta["max_speed_factor"] = instance.max_speed_factor;
    if (instance.ts_min) meta["ts_min"] = *instance.ts_min;
    if (instance.ts_max) meta["ts_max"] = *instance.ts_max;
    meta["dynamism_target_reached"] = instance.dynamism_target_reached;
    std::ofstream out(base + "_meta.json", std::ios::binary);
    if (!out) fail(Errc::io_error, "cannot write '" + base + "_meta.json'");
    out << meta.dump(2) << "\n";
}

}  // namespace reqgen
