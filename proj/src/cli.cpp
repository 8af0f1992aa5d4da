#include "reqgen/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "reqgen/config.hpp"
#include "reqgen/csv.hpp"
#include "reqgen/errors.hpp"
#include "reqgen/generator.hpp"
#include "reqgen/graphml.hpp"
#include "reqgen/metrics.hpp"
#include "reqgen/network.hpp"
#include "reqgen/similarity.hpp"

namespace reqgen {

namespace {

namespace fs = std::filesystem;

NetworkKind parse_kind(const std::string& s) {
    if (s == "drive") return NetworkKind::drive;
    if (s == "walk") return NetworkKind::walk;
    fail(Errc::invalid_params, "network kind must be 'drive' or 'walk', got '" + s + "'");
}

NetworkBundle load_or_new_bundle(const std::string& dir) {
    if (fs::exists(fs::path(dir) / "meta.json")) return load_bundle(dir);
    return NetworkBundle{};
}

std::string ends_with_lower(const std::string& path) {
    const std::string ext = fs::path(path).extension().string();
    std::string out;
    for (char c : ext) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

// ---------------------------------------------------------------------------
// Travel-time sources shared by measure / similarity: either a bundle's
// drive network (shortest paths, memoized per source node) or a previously
// written travel-time matrix. Location keys are the strings found in
// instance CSV cells; stations resolve through the bundle's station list or
// the matrix ids.

struct TravelSource {
    std::function<std::size_t(const std::string& key, bool station)> resolve;
    TravelFn travel;
};

TravelSource make_bundle_source(std::shared_ptr<NetworkBundle> bundle, double alpha) {
    if (!bundle->drive) fail(Errc::empty_network, "bundle has no drive network");
    compute_arc_travel_times(*bundle->drive, alpha);
    auto locs = std::make_shared<std::vector<ExprLocation>>();
    auto index = std::make_shared<std::map<std::pair<bool, std::string>, std::size_t>>();
    auto rows = std::make_shared<std::unordered_map<std::size_t, std::vector<double>>>();

    TravelSource src;
    src.resolve = [bundle, locs, index](const std::string& key, bool station) {
        const auto k = std::make_pair(station, key);
        if (const auto it = index->find(k); it != index->end()) return it->second;
        ExprLocation loc;
        if (station) {
            const NodeId id = csv::parse_int(key, "station id");
            const Station* found = nullptr;
            for (const Station& s : bundle->stations)
                if (s.id == id) {
                    found = &s;
                    break;
                }
            if (!found) fail(Errc::unknown_node, "station '" + key + "' is not in the bundle");
            loc = {found->drive_node, found->pos};
        } else {
            const NodeId id = csv::parse_int(key, "location id");
            loc = {id, bundle->drive->coord(id)};
        }
        const std::size_t i = locs->size();
        locs->push_back(loc);
        index->emplace(k, i);
        return i;
    };
    src.travel = [bundle, locs, rows](std::size_t a, std::size_t b) {
        const RoadNetwork& net = *bundle->drive;
        const std::size_t sa = net.index_of((*locs)[a].node);
        auto it = rows->find(sa);
        if (it == rows->end()) it = rows->emplace(sa, shortest_travel_times_from(net, sa)).first;
        return it->second[net.index_of((*locs)[b].node)];
    };
    return src;
}

TravelSource make_matrix_source(const std::string& path) {
    const std::vector<csv::Row> rows = csv::read_file(path);
    if (rows.size() < 2) fail(Errc::parse_error, "travel-time matrix '" + path + "' is empty");
    const csv::Row& header = rows.front();
    const std::size_t n = header.size() - 1;
    if (rows.size() - 1 != n)
        fail(Errc::length_mismatch, "travel-time matrix '" + path + "' is not square");
    auto ids = std::make_shared<std::map<std::string, std::size_t>>();
    for (std::size_t j = 1; j < header.size(); ++j)
        if (!ids->emplace(header[j], j - 1).second)
            fail(Errc::duplicate_name, "duplicate travel-time matrix id '" + header[j] + "'");
    auto matrix = std::make_shared<std::vector<std::vector<double>>>();
    matrix->reserve(n);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const csv::Row& row = rows[i];
        if (row.size() != n + 1)
            fail(Errc::length_mismatch, "travel-time matrix row " + std::to_string(i) +
                                            " has " + std::to_string(row.size() - 1) +
                                            " cells, expected " + std::to_string(n));
        if (row[0] != header[i])
            fail(Errc::parse_error, "travel-time matrix row label '" + row[0] +
                                        "' does not match column '" + header[i] + "'");
        std::vector<double> vals(n);
        for (std::size_t j = 1; j <= n; ++j)
            vals[j - 1] = row[j].empty() ? kUnreachable : csv::parse_double(row[j], "travel time");
        matrix->push_back(std::move(vals));
    }
    TravelSource src;
    src.resolve = [ids, path](const std::string& key, bool) {
        const auto it = ids->find(key);
        if (it == ids->end())
            fail(Errc::unknown_node, "location '" + key + "' is not in '" + path + "'");
        return it->second;
    };
    src.travel = [matrix](std::size_t a, std::size_t b) { return (*matrix)[a][b]; };
    return src;
}

// ---------------------------------------------------------------------------
// Instance CSV access

struct InstanceTable {
    std::map<std::string, std::size_t> columns;
    std::vector<csv::Row> rows;  // data rows only

    bool has(const std::string& name) const { return columns.count(name) > 0; }
    const std::string& cell(std::size_t r, const std::string& name) const {
        return rows[r][columns.at(name)];
    }
    std::vector<double> numbers(const std::string& name) const {
        std::vector<double> out;
        out.reserve(rows.size());
        for (std::size_t r = 0; r < rows.size(); ++r)
            out.push_back(csv::parse_double(cell(r, name), "column '" + name + "'"));
        return out;
    }
};

InstanceTable read_instance_table(const std::string& path) {
    const std::vector<csv::Row> raw = csv::read_file(path);
    if (raw.size() < 2) fail(Errc::empty_instance, "'" + path + "' has no requests");
    InstanceTable t;
    for (std::size_t j = 0; j < raw[0].size(); ++j)
        if (!t.columns.emplace(raw[0][j], j).second)
            fail(Errc::duplicate_name, "duplicate column '" + raw[0][j] + "' in '" + path + "'");
    for (std::size_t i = 1; i < raw.size(); ++i) {
        if (raw[i].size() != raw[0].size())
            fail(Errc::length_mismatch, "row " + std::to_string(i) + " of '" + path + "' has " +
                                            std::to_string(raw[i].size()) + " cells, expected " +
                                            std::to_string(raw[0].size()));
        t.rows.push_back(raw[i]);
    }
    return t;
}

std::vector<std::string> split_semicolons(const std::string& cell) {
    std::vector<std::string> out;
    std::string part;
    std::istringstream in(cell);
    while (std::getline(in, part, ';'))
        if (!part.empty()) out.push_back(part);
    return out;
}

// Sidecar defaults written next to each generated instance.
struct MetaDefaults {
    std::optional<double> ts_min, ts_max, alpha;
};

MetaDefaults read_meta_sidecar(const std::string& instance_path) {
    MetaDefaults out;
    fs::path p(instance_path);
    p.replace_extension();
    p += "_meta.json";
    std::ifstream in(p, std::ios::binary);
    if (!in) return out;
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception&) {
        return out;  // unreadable sidecar is ignored, flags still work
    }
    if (j.contains("ts_min") && j["ts_min"].is_number()) out.ts_min = j["ts_min"].get<double>();
    if (j.contains("ts_max") && j["ts_max"].is_number()) out.ts_max = j["ts_max"].get<double>();
    if (j.contains("max_speed_factor") && j["max_speed_factor"].is_number())
        out.alpha = j["max_speed_factor"].get<double>();
    return out;
}

// ---------------------------------------------------------------------------
// net subcommands

struct NetIngestOpts {
    std::string path, edges, kind = "drive", bundle;
};

int cmd_net_ingest(const NetIngestOpts& o) {
    const NetworkKind kind = parse_kind(o.kind);
    RoadNetwork net;
    if (ends_with_lower(o.path) == ".graphml") {
        net = load_network_graphml(o.path, kind);
    } else {
        if (o.edges.empty())
            fail(Errc::missing_field, "CSV ingestion needs --edges next to the nodes file");
        net = load_network_csv(o.path, o.edges, kind);
    }
    std::size_t defaulted = 0;
    for (const Arc& a : net.arcs())
        if (a.maxspeed_mps == default_maxspeed_mps(kind)) ++defaulted;
    if (defaulted > 0)
        std::cerr << "warning: " << defaulted << " arc(s) use the default "
                  << csv::format_double(default_maxspeed_mps(kind)) << " m/s maxspeed\n";
    NetworkBundle bundle = load_or_new_bundle(o.bundle);
    (kind == NetworkKind::drive ? bundle.drive : bundle.walk) = std::move(net);
    save_bundle(o.bundle, bundle);
    const RoadNetwork& stored = kind == NetworkKind::drive ? *bundle.drive : *bundle.walk;
    std::cout << "ingested " << o.kind << " network: " << stored.node_count() << " nodes, "
              << stored.arc_count() << " arcs -> " << o.bundle << "\n";
    return 0;
}

struct NetSynthOpts {
    int rows = 0, cols = 0;
    double spacing = 0.0;
    double maxspeed = -1.0;  // < 0: kind default
    std::string kind = "drive", bundle;
};

int cmd_net_synth(const NetSynthOpts& o) {
    const NetworkKind kind = parse_kind(o.kind);
    const double speed = o.maxspeed < 0.0 ? default_maxspeed_mps(kind) : o.maxspeed;
    RoadNetwork net = synth_grid_network(o.rows, o.cols, o.spacing, speed, kind);
    NetworkBundle bundle = load_or_new_bundle(o.bundle);
    (kind == NetworkKind::drive ? bundle.drive : bundle.walk) = std::move(net);
    save_bundle(o.bundle, bundle);
    std::cout << "synthesized " << o.rows << "x" << o.cols << " " << o.kind << " grid ("
              << o.rows * o.cols << " nodes) -> " << o.bundle << "\n";
    return 0;
}

struct NetStationsOpts {
    std::string path, bundle;
};

int cmd_net_stations(const NetStationsOpts& o) {
    NetworkBundle bundle = load_or_new_bundle(o.bundle);
    if (!bundle.drive)
        fail(Errc::empty_network, "bundle has no drive network; ingest or synth one first");
    const std::vector<Station> raw = load_stations_csv(o.path);
    bundle.stations =
        dedupe_stations(raw, *bundle.drive, bundle.walk ? &*bundle.walk : nullptr);
    save_bundle(o.bundle, bundle);
    std::cout << "kept " << bundle.stations.size() << " of " << raw.size() << " stations -> "
              << o.bundle << "\n";
    return 0;
}

struct NetPoisOpts {
    std::string path, bundle;
    double cell_size = 0.0;
};

int cmd_net_pois(const NetPoisOpts& o) {
    NetworkBundle bundle = load_or_new_bundle(o.bundle);
    if (!bundle.drive)
        fail(Errc::empty_network, "bundle has no drive network; ingest or synth one first");
    const std::vector<LonLat> points = load_pois_csv(o.path);
    std::size_t skipped = 0;
    bundle.pois = build_poi_index(points, bundle.drive->bounds(), o.cell_size, &skipped);
    save_bundle(o.bundle, bundle);
    std::cout << "indexed " << bundle.pois->total() << " points in " << bundle.pois->cells.size()
              << " cells";
    if (skipped > 0) std::cout << " (" << skipped << " outside the network bounds)";
    std::cout << " -> " << o.bundle << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// generate

std::optional<double> value_number(const Value* v) {
    if (!v) return std::nullopt;
    if (const auto* i = std::get_if<std::int64_t>(v)) return static_cast<double>(*i);
    if (const auto* d = std::get_if<double>(v)) return *d;
    return std::nullopt;
}

std::optional<std::vector<double>> column_numbers(const Instance& inst, const std::string& name) {
    std::vector<double> out;
    out.reserve(inst.requests.size());
    for (const RequestRecord& r : inst.requests) {
        const std::optional<double> v = value_number(r.find(name));
        if (!v) return std::nullopt;
        out.push_back(*v);
    }
    return out;
}

// Per-replica one-liner with the measured instance properties; metrics whose
// inputs are absent (or degenerate) are simply omitted.
std::string instance_summary(const Instance& inst, Generator& gen,
                             const std::vector<Station>& stations) {
    std::string line = inst.name + ": requests=" + std::to_string(inst.requests.size());
    const double ts_min =
        inst.ts_min ? *inst.ts_min : -std::numeric_limits<double>::infinity();

    const std::optional<std::vector<double>> ts = column_numbers(inst, "time_stamp");
    if (ts && inst.ts_min && inst.ts_max) {
        std::vector<double> sorted = *ts;
        std::sort(sorted.begin(), sorted.end());
        try {
            line += " rho=" + display_2dp(measure_dynamism(sorted, *inst.ts_min, *inst.ts_max).rho);
        } catch (const Error&) {
        }
    }
    if (ts) {
        if (const auto lu = column_numbers(inst, "latest_departure")) {
            try {
                const UrgencyReport u = measure_urgency(*ts, *lu, ts_min);
                line += " urgency=" + display_2dp(u.mean) + "/" + display_2dp(u.std_dev);
            } catch (const Error&) {
            }
        }
    }

    const auto eu = column_numbers(inst, "earliest_departure");
    const auto la = column_numbers(inst, "latest_arrival");
    if (eu && la) {
        std::map<NodeId, std::size_t> station_index;
        std::vector<ExprLocation> locs;
        std::vector<DispersionRequest> reqs;
        bool complete = true;
        for (std::size_t r = 0; r < inst.requests.size() && complete; ++r) {
            const Value* o = inst.requests[r].find("origin");
            const Value* d = inst.requests[r].find("destination");
            if (!o || !d || !std::holds_alternative<ExprLocation>(*o) ||
                !std::holds_alternative<ExprLocation>(*d)) {
                complete = false;
                break;
            }
            DispersionRequest dr;
            dr.origin = locs.size();
            locs.push_back(std::get<ExprLocation>(*o));
            dr.destination = locs.size();
            locs.push_back(std::get<ExprLocation>(*d));
            dr.earliest_departure = (*eu)[r];
            dr.latest_arrival = (*la)[r];
            const auto add_stations = [&](const std::string& name,
                                          std::vector<std::size_t>& out) {
                const Value* v = inst.requests[r].find(name);
                if (!v) return;
                // Station sets are stored as primitive arrays once coerced to
                // the attribute's declared type.
                const std::vector<Primitive>* items = nullptr;
                if (const auto* set = std::get_if<ValueSet>(v)) items = &set->items;
                if (const auto* arr = std::get_if<ValueArray>(v)) items = &arr->items;
                if (!items) return;
                for (const Primitive& p : *items) {
                    const auto* id = std::get_if<std::int64_t>(&p);
                    if (!id) continue;
                    auto [it, fresh] = station_index.try_emplace(*id, 0);
                    if (fresh) {
                        for (const Station& s : stations)
                            if (s.id == *id) {
                                it->second = locs.size();
                                locs.push_back({s.drive_node, s.pos});
                                break;
                            }
                    }
                    out.push_back(it->second);
                }
            };
            add_stations("stops_orgn", dr.pickup_stations);
            add_stations("stops_dest", dr.dropoff_stations);
            reqs.push_back(std::move(dr));
        }
        if (complete && !reqs.empty()) {
            const TravelFn travel = [&gen, &locs](std::size_t a, std::size_t b) {
                return gen.direct_travel_time(locs[a], locs[b]);
            };
            try {
                line += " gd=" + display_2dp(geographic_dispersion(reqs, travel, 600.0, 2).gd);
            } catch (const Error&) {
            }
        }
    }
    if (!inst.dynamism_target_reached) line += " [dynamism target missed]";
    return line;
}

struct GenerateOpts {
    std::string config, bundle, out = ".";
};

int cmd_generate(const GenerateOpts& o) {
    const InstanceConfig cfg = parse_config_file(o.config);
    for (const std::string& w : cfg.warnings) std::cerr << "warning: " << w << "\n";
    const NetworkBundle bundle = load_bundle(o.bundle);
    if (!bundle.drive) fail(Errc::empty_network, "bundle has no drive network");
    const ValidatedConfig vcfg = validate_config(cfg, *bundle.drive);
    Generator gen(vcfg, bundle);
    for (std::int64_t k = 1; k <= cfg.replicas; ++k) {
        const Instance inst = gen.generate_replica(k);
        write_instance(inst, o.out);
        std::cout << instance_summary(inst, gen, bundle.stations) << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------
// measure

struct ColumnNames {
    std::string ts = "time_stamp";
    std::string lu = "latest_departure";
    std::string origin = "origin";
    std::string dest = "destination";
    std::string eu = "earliest_departure";
    std::string la = "latest_arrival";
    std::string pickup = "stops_orgn";
    std::string dropoff = "stops_dest";
};

void add_column_flags(CLI::App* cmd, ColumnNames& c) {
    cmd->add_option("--ts-col", c.ts, "time stamp column")->capture_default_str();
    cmd->add_option("--lu-col", c.lu, "latest departure column")->capture_default_str();
    cmd->add_option("--origin-col", c.origin, "origin column")->capture_default_str();
    cmd->add_option("--dest-col", c.dest, "destination column")->capture_default_str();
    cmd->add_option("--eu-col", c.eu, "earliest departure column")->capture_default_str();
    cmd->add_option("--la-col", c.la, "latest arrival column")->capture_default_str();
    cmd->add_option("--pickup-col", c.pickup, "pickup station set column")->capture_default_str();
    cmd->add_option("--dropoff-col", c.dropoff, "dropoff station set column")
        ->capture_default_str();
}

struct MeasureOpts {
    std::string instance, bundle, tt_matrix, report_csv;
    ColumnNames cols;
    double th_s = 600.0;
    std::size_t n = 2;
    std::optional<double> ts_min, ts_max, alpha;
};

int cmd_measure(const MeasureOpts& o) {
    const InstanceTable table = read_instance_table(o.instance);
    const MetaDefaults meta = read_meta_sidecar(o.instance);
    const std::optional<double> ts_min = o.ts_min ? o.ts_min : meta.ts_min;
    const std::optional<double> ts_max = o.ts_max ? o.ts_max : meta.ts_max;
    const double alpha = o.alpha ? *o.alpha : meta.alpha.value_or(1.0);

    std::optional<TravelSource> source;
    if (!o.tt_matrix.empty())
        source = make_matrix_source(o.tt_matrix);
    else if (!o.bundle.empty())
        source = make_bundle_source(std::make_shared<NetworkBundle>(load_bundle(o.bundle)), alpha);

    InstanceReport report;
    report.size = table.rows.size();

    if (table.has(o.cols.ts)) {
        if (ts_min && ts_max) {
            std::vector<double> ts = table.numbers(o.cols.ts);
            std::sort(ts.begin(), ts.end());
            try {
                report.dynamism = measure_dynamism(ts, *ts_min, *ts_max);
            } catch (const Error& e) {
                std::cerr << "note: dynamism skipped (" << e.what() << ")\n";
            }
        } else {
            std::cerr << "note: dynamism skipped (planning period unknown; pass"
                         " --ts-min/--ts-max or keep the _meta.json sidecar)\n";
        }
    }
    if (table.has(o.cols.ts) && table.has(o.cols.lu)) {
        try {
            report.urgency =
                measure_urgency(table.numbers(o.cols.ts), table.numbers(o.cols.lu),
                                ts_min.value_or(-std::numeric_limits<double>::infinity()));
        } catch (const Error& e) {
            std::cerr << "note: urgency skipped (" << e.what() << ")\n";
        }
    }
    if (table.has(o.cols.origin) && table.has(o.cols.dest) && table.has(o.cols.eu) &&
        table.has(o.cols.la)) {
        if (!source) {
            std::cerr << "note: dispersion skipped (pass --bundle or --tt-matrix)\n";
        } else {
            const std::vector<double> eu = table.numbers(o.cols.eu);
            const std::vector<double> la = table.numbers(o.cols.la);
            std::vector<DispersionRequest> reqs(table.rows.size());
            const bool with_stations = table.has(o.cols.pickup) && table.has(o.cols.dropoff);
            for (std::size_t r = 0; r < table.rows.size(); ++r) {
                DispersionRequest& dr = reqs[r];
                dr.origin = source->resolve(table.cell(r, o.cols.origin), false);
                dr.destination = source->resolve(table.cell(r, o.cols.dest), false);
                dr.earliest_departure = eu[r];
                dr.latest_arrival = la[r];
                if (with_stations) {
                    for (const std::string& key : split_semicolons(table.cell(r, o.cols.pickup)))
                        dr.pickup_stations.push_back(source->resolve(key, true));
                    for (const std::string& key : split_semicolons(table.cell(r, o.cols.dropoff)))
                        dr.dropoff_stations.push_back(source->resolve(key, true));
                }
            }
            report.dispersion = geographic_dispersion(reqs, source->travel, o.th_s, o.n);
        }
    }

    std::cout << report_text(report);
    if (!o.report_csv.empty()) {
        std::ofstream out(o.report_csv, std::ios::binary);
        if (!out) fail(Errc::io_error, "cannot write '" + o.report_csv + "'");
        out << report_csv(report);
    }
    return 0;
}

// ---------------------------------------------------------------------------
// similarity

struct SimilarityOpts {
    std::string first, second, bundle, tt_matrix, matching_out;
    ColumnNames cols;
    SimilarityThresholds th;
    std::optional<double> alpha;
};

std::vector<SimilarityRequest> similarity_requests(const InstanceTable& table,
                                                   const ColumnNames& cols, TravelSource& source,
                                                   const std::string& path) {
    for (const std::string* name : {&cols.origin, &cols.dest, &cols.ts, &cols.eu})
        if (!table.has(*name))
            fail(Errc::missing_field, "'" + path + "' has no '" + *name + "' column");
    const std::vector<double> ts = table.numbers(cols.ts);
    const std::vector<double> eu = table.numbers(cols.eu);
    std::vector<SimilarityRequest> out(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        out[r].origin = source.resolve(table.cell(r, cols.origin), false);
        out[r].destination = source.resolve(table.cell(r, cols.dest), false);
        out[r].time_stamp = ts[r];
        out[r].earliest_departure = eu[r];
    }
    return out;
}

int cmd_similarity(const SimilarityOpts& o) {
    TravelSource source = [&] {
        if (!o.tt_matrix.empty()) return make_matrix_source(o.tt_matrix);
        if (!o.bundle.empty()) {
            const double alpha =
                o.alpha ? *o.alpha : read_meta_sidecar(o.first).alpha.value_or(1.0);
            return make_bundle_source(std::make_shared<NetworkBundle>(load_bundle(o.bundle)),
                                      alpha);
        }
        fail(Errc::missing_field, "similarity needs --bundle or --tt-matrix");
    }();

    const InstanceTable table_a = read_instance_table(o.first);
    const InstanceTable table_b = read_instance_table(o.second);
    const auto a = similarity_requests(table_a, o.cols, source, o.first);
    const auto b = similarity_requests(table_b, o.cols, source, o.second);
    const SimilarityResult result = instance_similarity(a, b, o.th, source.travel);

    std::cout << "omega: " << display_2dp(result.omega) << "\n";
    std::vector<csv::Row> rows;
    rows.push_back({"first", "second", "xi"});
    for (std::size_t i = 0; i < result.matching.size(); ++i) {
        const std::size_t j = result.matching[i];
        rows.push_back({csv::format_int(static_cast<std::int64_t>(i)),
                        csv::format_int(static_cast<std::int64_t>(j)),
                        csv::format_double(result.xi[i][j])});
    }
    if (!o.matching_out.empty()) {
        csv::write_file(o.matching_out, rows);
    } else {
        for (const csv::Row& row : rows) std::cout << csv::join_row(row) << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------
// benchmark

struct GdItem {
    bool inject = false;
    std::optional<std::pair<double, double>> interval;  // empty: unlimited
};

struct BenchmarkOpts {
    std::string config, bundle, out = ".";
    std::string sizes, rhos, means, stds, gds;
};

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::string part;
    std::istringstream in(s);
    while (std::getline(in, part, ','))
        if (!part.empty()) out.push_back(part);
    return out;
}

std::vector<double> parse_double_list(const std::string& s, const std::string& what) {
    std::vector<double> out;
    for (const std::string& part : split_commas(s)) out.push_back(csv::parse_double(part, what));
    if (out.empty()) fail(Errc::invalid_params, what + " list is empty");
    return out;
}

std::vector<GdItem> parse_gd_list(const std::string& s) {
    std::vector<GdItem> out;
    for (const std::string& part : split_commas(s)) {
        GdItem item;
        item.inject = true;
        if (part != "none" && part != "any") {
            const std::size_t colon = part.find(':');
            if (colon == std::string::npos)
                fail(Errc::invalid_params,
                     "direct-travel-time interval must be 'lo:hi' or 'none', got '" + part + "'");
            const double lo = csv::parse_double(part.substr(0, colon), "interval bound");
            const double hi = csv::parse_double(part.substr(colon + 1), "interval bound");
            if (lo > hi)
                fail(Errc::invalid_params, "interval '" + part + "' has lo > hi");
            item.interval = {lo, hi};
        }
        out.push_back(item);
    }
    if (out.empty()) fail(Errc::invalid_params, "interval list is empty");
    return out;
}

AttributeSpec& find_attribute(InstanceConfig& cfg, const std::string& name,
                              const std::string& knob) {
    for (AttributeSpec& a : cfg.attributes)
        if (a.name == name) return a;
    fail(Errc::missing_attribute,
         "the " + knob + " grid needs a '" + name + "' attribute in the template");
}

std::string strip_whitespace(std::string s) {
    s.erase(std::remove_if(s.begin(), s.end(),
                           [](unsigned char c) { return std::isspace(c) != 0; }),
            s.end());
    return s;
}

std::string fmt_num(double v) {
    if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 1e15)
        return csv::format_int(static_cast<std::int64_t>(v));
    return csv::format_double(v);
}

int cmd_benchmark(const BenchmarkOpts& o) {
    const InstanceConfig tmpl = parse_config_file(o.config);
    for (const std::string& w : tmpl.warnings) std::cerr << "warning: " << w << "\n";
    if (o.sizes.empty() && o.rhos.empty() && o.means.empty() && o.stds.empty() && o.gds.empty()) {
        std::cout << "nothing to generate (no grid flags given)\n";
        return 0;
    }
    const NetworkBundle bundle = load_bundle(o.bundle);
    if (!bundle.drive) fail(Errc::empty_network, "bundle has no drive network");

    // One entry per grid dimension; std::nullopt keeps the template's value.
    std::vector<std::optional<std::int64_t>> sizes{std::nullopt};
    if (!o.sizes.empty()) {
        sizes.clear();
        for (const std::string& part : split_commas(o.sizes))
            sizes.emplace_back(csv::parse_int(part, "size"));
    }
    std::vector<std::optional<double>> rhos{std::nullopt};
    if (!o.rhos.empty()) {
        rhos.clear();
        for (double v : parse_double_list(o.rhos, "dynamism target")) {
            if (v < 0.0 || v > 1.0)
                fail(Errc::out_of_bounds, "dynamism target must lie in [0, 1]");
            rhos.emplace_back(v);
        }
    }
    std::vector<std::optional<double>> means{std::nullopt};
    if (!o.means.empty()) {
        means.clear();
        for (double v : parse_double_list(o.means, "urgency mean")) means.emplace_back(v);
    }
    std::vector<std::optional<double>> stds{std::nullopt};
    if (!o.stds.empty()) {
        stds.clear();
        for (double v : parse_double_list(o.stds, "urgency std")) {
            if (v < 0.0) fail(Errc::out_of_bounds, "urgency std must be non-negative");
            stds.emplace_back(v);
        }
    }
    std::vector<GdItem> gds{GdItem{}};
    if (!o.gds.empty()) gds = parse_gd_list(o.gds);

    std::size_t groups = 0, instances = 0;
    for (const auto& size : sizes)
        for (const auto& rho : rhos)
            for (const auto& mean : means)
                for (const auto& stdv : stds)
                    for (const GdItem& gd : gds) {
                        InstanceConfig cfg = tmpl;
                        if (size) cfg.requests = *size;
                        if (rho) {
                            AttributeSpec& a = find_attribute(cfg, "time_stamp", "dynamism");
                            a.pdf.reset();
                            a.expression.reset();
                            a.constraints.clear();
                            a.dynamism = *rho;
                        }
                        if (mean || stdv) {
                            AttributeSpec& a = find_attribute(cfg, "reaction_time", "urgency");
                            PdfSpec pdf;
                            pdf.family = PdfFamily::normal;
                            if (mean)
                                pdf.loc = *mean;
                            else if (a.pdf)
                                pdf.loc = a.pdf->loc;
                            else
                                fail(Errc::missing_field,
                                     "--urgency-stds without --urgency-means needs a"
                                     " reaction_time pdf in the template");
                            if (stdv)
                                pdf.scale = *stdv;
                            else if (a.pdf)
                                pdf.scale = a.pdf->scale;
                            else
                                fail(Errc::missing_field,
                                     "--urgency-means without --urgency-stds needs a"
                                     " reaction_time pdf in the template");
                            a.pdf = pdf;
                            a.expression.reset();
                        }
                        if (gd.inject) {
                            AttributeSpec& a =
                                find_attribute(cfg, "direct_travel_time", "direct-travel-time");
                            a.constraints.clear();
                            if (gd.interval) {
                                a.constraints.push_back("direct_travel_time >= " +
                                                        csv::format_double(gd.interval->first));
                                a.constraints.push_back("direct_travel_time <= " +
                                                        csv::format_double(gd.interval->second));
                            }
                        }

                        const ValidatedConfig vcfg = validate_config(cfg, *bundle.drive);
                        Generator gen(vcfg, bundle);

                        std::string d_label = "na";
                        if (rho) {
                            d_label = fmt_num(*rho);
                        } else {
                            for (const AttributeSpec& a : cfg.attributes)
                                if (a.name == "time_stamp" && a.dynamism)
                                    d_label = fmt_num(*a.dynamism);
                        }
                        std::string m_label = "na", t_label = "na";
                        for (const AttributeSpec& a : cfg.attributes)
                            if (a.name == "reaction_time" && a.pdf) {
                                m_label = fmt_num(a.pdf->loc);
                                t_label = fmt_num(a.pdf->scale);
                            }
                        std::string g_label = "any";
                        if (gd.inject && gd.interval)
                            g_label =
                                fmt_num(gd.interval->first) + "-" + fmt_num(gd.interval->second);
                        else if (!gd.inject) {
                            for (const AttributeSpec& a : cfg.attributes)
                                if (a.name == "direct_travel_time" && !a.constraints.empty())
                                    g_label = "custom";
                        }
                        const std::string stem =
                            strip_whitespace(cfg.network) + "_" + strip_whitespace(cfg.problem) +
                            "_" + std::to_string(cfg.requests) + "_" +
                            (vcfg.ts_min ? fmt_num(*vcfg.ts_min) : "na") + "_" +
                            (vcfg.ts_max ? fmt_num(*vcfg.ts_max) : "na") + "_" + d_label + "_" +
                            m_label + "_" + t_label + "_" + g_label;

                        for (std::int64_t k = 1; k <= cfg.replicas; ++k) {
                            Instance inst = gen.generate_replica(k);
                            inst.name = stem + "_" + std::to_string(k);
                            write_instance(inst, o.out);
                            ++instances;
                        }
                        ++groups;
                        std::cout << stem << ": " << cfg.replicas << " replica(s)\n";
                    }
    std::cout << "wrote " << groups << " group(s), " << instances << " instance(s) -> " << o.out
              << "\n";
    return 0;
}

}  // namespace

int run_command(std::vector<std::string> args) {
    CLI::App app{"generator and analyzer of on-demand transportation request instances",
                 "reqgen"};
    app.require_subcommand(1);

    const auto add_bundle = [](CLI::App* cmd, std::string& var, bool required) {
        CLI::Option* opt = cmd->add_option("--bundle", var, "network bundle directory")
                               ->envname("REQGEN_BUNDLE");
        if (required) opt->required();
        return opt;
    };

    CLI::App* net = app.add_subcommand("net", "build or extend a network bundle");
    net->require_subcommand(1);

    NetIngestOpts ni;
    CLI::App* net_ingest = net->add_subcommand("ingest", "load a road network");
    net_ingest->add_option("path", ni.path, "GraphML file or nodes CSV")->required();
    net_ingest->add_option("--edges", ni.edges, "edges CSV (for a nodes CSV input)");
    net_ingest->add_option("--kind", ni.kind, "network kind")
        ->check(CLI::IsMember({"drive", "walk"}))
        ->capture_default_str();
    add_bundle(net_ingest, ni.bundle, true);

    NetSynthOpts ns;
    CLI::App* net_synth = net->add_subcommand("synth", "synthesize a grid network");
    net_synth->add_option("--rows", ns.rows, "grid rows")->required();
    net_synth->add_option("--cols", ns.cols, "grid columns")->required();
    net_synth->add_option("--spacing", ns.spacing, "node spacing in metres")->required();
    net_synth->add_option("--maxspeed", ns.maxspeed, "arc maxspeed in m/s (default per kind)");
    net_synth->add_option("--kind", ns.kind, "network kind")
        ->check(CLI::IsMember({"drive", "walk"}))
        ->capture_default_str();
    add_bundle(net_synth, ns.bundle, true);

    NetStationsOpts nst;
    CLI::App* net_stations = net->add_subcommand("stations", "load and dedupe bus stations");
    net_stations->add_option("path", nst.path, "stations CSV (station_id,lon,lat)")->required();
    add_bundle(net_stations, nst.bundle, true);

    NetPoisOpts np;
    CLI::App* net_pois = net->add_subcommand("pois", "index points of interest");
    net_pois->add_option("path", np.path, "points CSV (lon,lat)")->required();
    net_pois->add_option("--cell-size", np.cell_size, "index cell size in metres")->required();
    add_bundle(net_pois, np.bundle, true);

    GenerateOpts g;
    CLI::App* generate = app.add_subcommand("generate", "generate instances from a config");
    generate->add_option("config", g.config, "instance configuration JSON")->required();
    add_bundle(generate, g.bundle, true);
    generate->add_option("--out", g.out, "output directory")->capture_default_str();

    MeasureOpts m;
    CLI::App* measure = app.add_subcommand("measure", "measure instance properties");
    measure->add_option("instance", m.instance, "instance CSV")->required();
    CLI::Option* m_bundle = add_bundle(measure, m.bundle, false);
    CLI::Option* m_matrix =
        measure->add_option("--tt-matrix", m.tt_matrix, "travel-time matrix CSV");
    m_bundle->excludes(m_matrix);
    m_matrix->excludes(m_bundle);
    measure->add_option("--th-s", m.th_s, "time-window proximity threshold, seconds")
        ->capture_default_str();
    measure->add_option("--n", m.n, "nearest-neighbor subset size")->capture_default_str();
    measure->add_option("--ts-min", m.ts_min, "planning period start, seconds");
    measure->add_option("--ts-max", m.ts_max, "planning period end, seconds");
    measure->add_option("--alpha", m.alpha, "maximum speed factor for bundle travel times");
    measure->add_option("--report-csv", m.report_csv, "also write the report as key,value CSV");
    add_column_flags(measure, m.cols);

    SimilarityOpts s;
    CLI::App* similarity = app.add_subcommand("similarity", "compare two instances");
    similarity->add_option("first", s.first, "first instance CSV")->required();
    similarity->add_option("second", s.second, "second instance CSV")->required();
    CLI::Option* s_bundle = add_bundle(similarity, s.bundle, false);
    CLI::Option* s_matrix =
        similarity->add_option("--tt-matrix", s.tt_matrix, "travel-time matrix CSV");
    s_bundle->excludes(s_matrix);
    s_matrix->excludes(s_bundle);
    similarity->add_option("--th-tt", s.th.th_tt, "travel-time proximity threshold, seconds")
        ->capture_default_str();
    similarity->add_option("--th-ts", s.th.th_ts, "time-stamp proximity threshold, seconds")
        ->capture_default_str();
    similarity->add_option("--th-e", s.th.th_e, "earliest-departure proximity threshold, seconds")
        ->capture_default_str();
    similarity->add_option("--alpha", s.alpha, "maximum speed factor for bundle travel times");
    similarity->add_option("--matching-out", s.matching_out, "write the matching CSV here");
    add_column_flags(similarity, s.cols);

    BenchmarkOpts b;
    CLI::App* benchmark =
        app.add_subcommand("benchmark", "expand a property grid into instance groups");
    benchmark->add_option("config", b.config, "template configuration JSON")->required();
    add_bundle(benchmark, b.bundle, true);
    benchmark->add_option("--out", b.out, "output directory")->capture_default_str();
    benchmark->add_option("--sizes", b.sizes, "comma-separated request counts");
    benchmark->add_option("--rhos", b.rhos, "comma-separated dynamism targets in [0,1]");
    benchmark->add_option("--urgency-means", b.means, "comma-separated reaction-time means, s");
    benchmark->add_option("--urgency-stds", b.stds, "comma-separated reaction-time stds, s");
    benchmark->add_option("--gd-intervals", b.gds,
                          "comma-separated direct-travel-time intervals 'lo:hi' or 'none'");

    try {
        std::reverse(args.begin(), args.end());
        app.parse(std::move(args));
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (net_ingest->parsed()) return cmd_net_ingest(ni);
        if (net_synth->parsed()) return cmd_net_synth(ns);
        if (net_stations->parsed()) return cmd_net_stations(nst);
        if (net_pois->parsed()) return cmd_net_pois(np);
        if (generate->parsed()) return cmd_generate(g);
        if (measure->parsed()) return cmd_measure(m);
        if (similarity->parsed()) return cmd_similarity(s);
        if (benchmark->parsed()) return cmd_benchmark(b);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace reqgen
