#include "reqgen/network.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <queue>
#include <sstream>

#include <json.hpp>

#include "reqgen/csv.hpp"
#include "reqgen/errors.hpp"

namespace reqgen {

double default_maxspeed_mps(NetworkKind kind) {
    return kind == NetworkKind::drive ? 13.9 : 1.4;
}

void RoadNetwork::add_node(NodeId id, LonLat pos) {
    if (!index_.emplace(id, ids_.size()).second)
        fail(Errc::duplicate_name, "node " + std::to_string(id) + " already exists");
    ids_.push_back(id);
    coords_.push_back(pos);
    out_.emplace_back();
}

void RoadNetwork::add_arc(NodeId u, NodeId v, double length_m, double maxspeed_mps) {
    auto iu = index_.find(u);
    auto iv = index_.find(v);
    if (iu == index_.end() || iv == index_.end())
        fail(Errc::parse_error,
             "arc " + std::to_string(u) + "->" + std::to_string(v) + " references unknown node");
    if (!(length_m >= 0.0) || !std::isfinite(length_m))
        fail(Errc::parse_error, "arc length must be a finite non-negative number");
    Arc a;
    a.u = u;
    a.v = v;
    a.length_m = length_m;
    a.maxspeed_mps = (std::isfinite(maxspeed_mps) && maxspeed_mps > 0.0)
                         ? maxspeed_mps
                         : default_maxspeed_mps(kind);
    out_[iu->second].push_back(static_cast<std::uint32_t>(arcs_.size()));
    arcs_.push_back(a);
}

std::size_t RoadNetwork::index_of(NodeId id) const {
    auto it = index_.find(id);
    if (it == index_.end()) fail(Errc::unknown_node, "no node " + std::to_string(id));
    return it->second;
}

Bounds RoadNetwork::bounds() const {
    if (ids_.empty()) fail(Errc::empty_network, "network has no nodes");
    Bounds b;
    b.min_lon = b.max_lon = coords_[0].lon;
    b.min_lat = b.max_lat = coords_[0].lat;
    for (const LonLat& p : coords_) {
        b.min_lon = std::min(b.min_lon, p.lon);
        b.max_lon = std::max(b.max_lon, p.lon);
        b.min_lat = std::min(b.min_lat, p.lat);
        b.max_lat = std::max(b.max_lat, p.lat);
    }
    return b;
}

NodeId RoadNetwork::nearest_node(LonLat p) const {
    if (ids_.empty()) fail(Errc::empty_network, "network has no nodes");
    double best = std::numeric_limits<double>::infinity();
    NodeId best_id = ids_[0];
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        const double d = haversine_m(p, coords_[i]);
        if (d < best || (d == best && ids_[i] < best_id)) {
            best = d;
            best_id = ids_[i];
        }
    }
    return best_id;
}

void compute_arc_travel_times(RoadNetwork& net, double alpha,
                              std::optional<double> speed_override_mps) {
    if (!(alpha > 0.0) || alpha > 1.0) fail(Errc::invalid_params, "alpha must be in (0, 1]");
    if (speed_override_mps && !(*speed_override_mps > 0.0))
        fail(Errc::invalid_params, "speed override must be positive");
    for (Arc& a : net.mutable_arcs()) {
        const double ms = speed_override_mps ? *speed_override_mps : a.maxspeed_mps;
        a.tt_s = alpha * a.length_m / ms;
    }
}

std::vector<double> shortest_travel_times_from(const RoadNetwork& net, std::size_t source_index) {
    const std::size_t n = net.node_count();
    std::vector<double> dist(n, kUnreachable);
    if (source_index >= n) fail(Errc::unknown_node, "source index out of range");
    using Entry = std::pair<double, std::size_t>;  // (distance, node index)
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    dist[source_index] = 0.0;
    heap.emplace(0.0, source_index);
    const auto& arcs = net.arcs();
    while (!heap.empty()) {
        auto [d, i] = heap.top();
        heap.pop();
        if (d > dist[i]) continue;
        for (std::uint32_t ai : net.out_arcs(i)) {
            const Arc& a = arcs[ai];
            const std::size_t j = net.index_of(a.v);
            const double nd = d + a.tt_s;
            if (nd < dist[j]) {
                dist[j] = nd;
                heap.emplace(nd, j);
            }
        }
    }
    return dist;
}

double shortest_travel_time(const RoadNetwork& net, NodeId from, NodeId to) {
    const auto dist = shortest_travel_times_from(net, net.index_of(from));
    const double d = dist[net.index_of(to)];
    if (d == kUnreachable)
        fail(Errc::unreachable,
             "no path from " + std::to_string(from) + " to " + std::to_string(to));
    return d;
}

std::vector<std::vector<double>> travel_time_matrix(const RoadNetwork& net,
                                                    const std::vector<NodeId>& locations) {
    std::vector<std::vector<double>> out(locations.size());
    for (std::size_t r = 0; r < locations.size(); ++r) {
        const auto dist = shortest_travel_times_from(net, net.index_of(locations[r]));
        auto& row = out[r];
        row.resize(locations.size());
        for (std::size_t c = 0; c < locations.size(); ++c)
            row[c] = r == c ? 0.0 : dist[net.index_of(locations[c])];
    }
    return out;
}

RoadNetwork synth_grid_network(int rows, int cols, double spacing_m, double maxspeed_mps,
                               NetworkKind kind) {
    if (rows < 2 || cols < 2) fail(Errc::invalid_dimension, "grid needs at least 2x2 nodes");
    if (!(spacing_m > 0.0) || !(maxspeed_mps > 0.0))
        fail(Errc::invalid_params, "grid spacing and maxspeed must be positive");
    RoadNetwork net;
    net.kind = kind;
    // Lay the lattice out near (0, 0) so metre/degree conversion is uniform.
    const double dlat = spacing_m / metres_per_deg_lat();
    const double dlon = spacing_m / metres_per_deg_lon(0.0);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            net.add_node(static_cast<NodeId>(r) * cols + c, {c * dlon, r * dlat});
    auto id = [cols](int r, int c) { return static_cast<NodeId>(r) * cols + c; };
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            if (c + 1 < cols) {
                net.add_arc(id(r, c), id(r, c + 1), spacing_m, maxspeed_mps);
                net.add_arc(id(r, c + 1), id(r, c), spacing_m, maxspeed_mps);
            }
            if (r + 1 < rows) {
                net.add_arc(id(r, c), id(r + 1, c), spacing_m, maxspeed_mps);
                net.add_arc(id(r + 1, c), id(r, c), spacing_m, maxspeed_mps);
            }
        }
    }
    compute_arc_travel_times(net, 1.0);
    return net;
}

// ---------------------------------------------------------------------------
// Zones

bool zone_contains(const Zone& z, LonLat p) {
    if (z.shape == Zone::Shape::circle) return haversine_m(z.centre, p) <= z.radius_m;
    const double dx = std::fabs(p.lon - z.centre.lon) * metres_per_deg_lon(z.centre.lat);
    const double dy = std::fabs(p.lat - z.centre.lat) * metres_per_deg_lat();
    return dx <= z.length_lon_m / 2.0 && dy <= z.length_lat_m / 2.0;
}

LonLat random_point_in_zone(const Zone& z, Rng& rng) {
    if (z.shape == Zone::Shape::rectangle) {
        const double half_lon = z.length_lon_m / 2.0 / metres_per_deg_lon(z.centre.lat);
        const double half_lat = z.length_lat_m / 2.0 / metres_per_deg_lat();
        const double u = rng.next_double();
        const double v = rng.next_double();
        return {z.centre.lon + (2.0 * u - 1.0) * half_lon,
                z.centre.lat + (2.0 * v - 1.0) * half_lat};
    }
    // Area-uniform draw in the disc; resample the rare boundary case where
    // floating error pushes the point just outside.
    for (int attempt = 0; attempt < 64; ++attempt) {
        const double r = z.radius_m * std::sqrt(rng.next_double());
        const double theta = 2.0 * M_PI * rng.next_double();
        const LonLat p = destination_point(z.centre, r, theta);
        if (zone_contains(z, p)) return p;
    }
    return z.centre;
}

// ---------------------------------------------------------------------------
// Stations

std::vector<Station> dedupe_stations(const std::vector<Station>& raw, const RoadNetwork& drive,
                                     const RoadNetwork* walk) {
    // Pass 1: drop exact coordinate duplicates, first occurrence wins.
    std::vector<Station> kept;
    for (const Station& s : raw) {
        const bool dup = std::any_of(kept.begin(), kept.end(), [&](const Station& k) {
            return k.pos.lon == s.pos.lon && k.pos.lat == s.pos.lat;
        });
        if (!dup) kept.push_back(s);
    }
    for (Station& s : kept) {
        s.drive_node = drive.nearest_node(s.pos);
        s.walk_node = walk && !walk->empty() ? walk->nearest_node(s.pos) : -1;
    }
    // Pass 2: reachability. Sample up to 32 evenly spaced nodes and require
    // each station's drive node to be reachable from at least half of them.
    const std::size_t n = drive.node_count();
    const std::size_t sample_count = std::min<std::size_t>(32, n);
    std::vector<std::vector<double>> dists;
    dists.reserve(sample_count);
    for (std::size_t k = 0; k < sample_count; ++k) {
        const std::size_t idx = k * n / sample_count;
        dists.push_back(shortest_travel_times_from(drive, idx));
    }
    std::vector<Station> out;
    for (const Station& s : kept) {
        const std::size_t target = drive.index_of(s.drive_node);
        std::size_t reachable = 0;
        for (const auto& d : dists)
            if (d[target] != kUnreachable) ++reachable;
        if (reachable * 2 >= sample_count) out.push_back(s);
    }
    return out;
}

std::vector<NodeId> stations_within_walk(LonLat from, const std::vector<Station>& stations,
                                         const RoadNetwork* walk, double max_walk_s,
                                         double walk_speed_mps) {
    if (!(walk_speed_mps > 0.0)) fail(Errc::invalid_params, "walk speed must be positive");
    std::vector<NodeId> out;
    if (walk && !walk->empty()) {
        const NodeId src = walk->nearest_node(from);
        // Arc travel times on the walk network are length / walk_speed, so the
        // shortest time is the shortest path length divided by the speed.
        std::vector<double> len_dist;
        {
            const std::size_t n = walk->node_count();
            len_dist.assign(n, kUnreachable);
            using Entry = std::pair<double, std::size_t>;
            std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
            const std::size_t s0 = walk->index_of(src);
            len_dist[s0] = 0.0;
            heap.emplace(0.0, s0);
            const auto& arcs = walk->arcs();
            while (!heap.empty()) {
                auto [d, i] = heap.top();
                heap.pop();
                if (d > len_dist[i]) continue;
                for (std::uint32_t ai : walk->out_arcs(i)) {
                    const Arc& a = arcs[ai];
                    const std::size_t j = walk->index_of(a.v);
                    const double nd = d + a.length_m;
                    if (nd < len_dist[j]) {
                        len_dist[j] = nd;
                        heap.emplace(nd, j);
                    }
                }
            }
        }
        for (const Station& s : stations) {
            if (s.walk_node < 0) continue;
            const double d = len_dist[walk->index_of(s.walk_node)];
            if (d != kUnreachable && d / walk_speed_mps < max_walk_s) out.push_back(s.id);
        }
    } else {
        for (const Station& s : stations)
            if (haversine_m(from, s.pos) / walk_speed_mps < max_walk_s) out.push_back(s.id);
    }
    std::sort(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------------------
// Points of interest

std::int64_t PoiIndex::total() const {
    std::int64_t t = 0;
    for (const PoiCell& c : cells) t += c.count;
    return t;
}

PoiIndex build_poi_index(const std::vector<LonLat>& points, const Bounds& bounds,
                         double cell_size_m, std::size_t* skipped) {
    if (!(cell_size_m > 0.0)) fail(Errc::degenerate_poi_index, "cell size must be positive");
    const double width_m = (bounds.max_lon - bounds.min_lon) * metres_per_deg_lon(bounds.centre().lat);
    const double height_m = (bounds.max_lat - bounds.min_lat) * metres_per_deg_lat();
    const int nx = std::max(1, static_cast<int>(std::ceil(width_m / cell_size_m)));
    const int ny = std::max(1, static_cast<int>(std::ceil(height_m / cell_size_m)));
    const double cell_lon = (bounds.max_lon - bounds.min_lon) / nx;
    const double cell_lat = (bounds.max_lat - bounds.min_lat) / ny;

    PoiIndex index;
    index.cell_size_m = cell_size_m;
    index.cells.resize(static_cast<std::size_t>(nx) * ny);
    for (int y = 0; y < ny; ++y) {
        for (int x = 0; x < nx; ++x) {
            PoiCell& c = index.cells[static_cast<std::size_t>(y) * nx + x];
            c.centre = {bounds.min_lon + (x + 0.5) * cell_lon, bounds.min_lat + (y + 0.5) * cell_lat};
            c.half_lon_m = cell_lon / 2.0 * metres_per_deg_lon(c.centre.lat);
            c.half_lat_m = cell_lat / 2.0 * metres_per_deg_lat();
        }
    }
    std::size_t outside = 0;
    for (const LonLat& p : points) {
        if (!bounds.contains(p)) {
            ++outside;
            continue;
        }
        int x = cell_lon > 0.0 ? static_cast<int>((p.lon - bounds.min_lon) / cell_lon) : 0;
        int y = cell_lat > 0.0 ? static_cast<int>((p.lat - bounds.min_lat) / cell_lat) : 0;
        x = std::min(x, nx - 1);
        y = std::min(y, ny - 1);
        ++index.cells[static_cast<std::size_t>(y) * nx + x].count;
    }
    if (skipped) *skipped = outside;
    if (index.total() == 0)
        fail(Errc::degenerate_poi_index, "no points of interest inside the network bounds");
    return index;
}

// ---------------------------------------------------------------------------
// Bundle I/O

namespace {

namespace fs = std::filesystem;

void save_network_csv(const fs::path& nodes_path, const fs::path& edges_path,
                      const RoadNetwork& net) {
    std::vector<csv::Row> nodes{{"node_id", "lon", "lat"}};
    for (std::size_t i = 0; i < net.node_count(); ++i) {
        const LonLat p = net.coord_at(i);
        nodes.push_back({csv::format_int(net.id_at(i)), csv::format_double(p.lon),
                         csv::format_double(p.lat)});
    }
    csv::write_file(nodes_path.string(), nodes);
    std::vector<csv::Row> edges{{"u", "v", "length", "maxspeed"}};
    for (const Arc& a : net.arcs())
        edges.push_back({csv::format_int(a.u), csv::format_int(a.v),
                         csv::format_double(a.length_m), csv::format_double(a.maxspeed_mps)});
    csv::write_file(edges_path.string(), edges);
}

void require_header(const std::vector<csv::Row>& rows, const csv::Row& expected,
                    const std::string& path) {
    if (rows.empty() || rows[0] != expected) {
        std::string want;
        for (std::size_t i = 0; i < expected.size(); ++i) {
            if (i) want += ',';
            want += expected[i];
        }
        fail(Errc::parse_error, path + ": expected header '" + want + "'");
    }
}

}  // namespace

RoadNetwork load_network_csv(const std::string& nodes_path, const std::string& edges_path,
                             NetworkKind kind) {
    RoadNetwork net;
    net.kind = kind;
    const auto nodes = csv::read_file(nodes_path);
    require_header(nodes, {"node_id", "lon", "lat"}, nodes_path);
    for (std::size_t i = 1; i < nodes.size(); ++i) {
        const auto& row = nodes[i];
        if (row.size() != 3)
            fail(Errc::parse_error, nodes_path + ": row " + std::to_string(i + 1) +
                                        " needs 3 cells, has " + std::to_string(row.size()));
        net.add_node(csv::parse_int(row[0], "node_id"), {csv::parse_double(row[1], "lon"),
                                                         csv::parse_double(row[2], "lat")});
    }
    const auto edges = csv::read_file(edges_path);
    require_header(edges, {"u", "v", "length", "maxspeed"}, edges_path);
    for (std::size_t i = 1; i < edges.size(); ++i) {
        const auto& row = edges[i];
        if (row.size() != 4)
            fail(Errc::parse_error, edges_path + ": row " + std::to_string(i + 1) +
                                        " needs 4 cells, has " + std::to_string(row.size()));
        // Empty maxspeed cell means "unknown": fall back to the kind default.
        const double ms = row[3].empty() ? 0.0 : csv::parse_double(row[3], "maxspeed");
        net.add_arc(csv::parse_int(row[0], "u"), csv::parse_int(row[1], "v"),
                    csv::parse_double(row[2], "length"), ms);
    }
    if (net.empty()) fail(Errc::empty_network, nodes_path + ": no nodes");
    return net;
}

std::vector<Station> load_stations_csv(const std::string& path) {
    const auto rows = csv::read_file(path);
    require_header(rows, {"station_id", "lon", "lat"}, path);
    std::vector<Station> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.size() != 3)
            fail(Errc::parse_error, path + ": row " + std::to_string(i + 1) + " needs 3 cells");
        Station s;
        s.id = csv::parse_int(row[0], "station_id");
        s.pos = {csv::parse_double(row[1], "lon"), csv::parse_double(row[2], "lat")};
        out.push_back(s);
    }
    return out;
}

std::vector<LonLat> load_pois_csv(const std::string& path) {
    const auto rows = csv::read_file(path);
    require_header(rows, {"lon", "lat"}, path);
    std::vector<LonLat> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.size() != 2)
            fail(Errc::parse_error, path + ": row " + std::to_string(i + 1) + " needs 2 cells");
        out.push_back({csv::parse_double(row[0], "lon"), csv::parse_double(row[1], "lat")});
    }
    return out;
}

void save_bundle(const std::string& dir, const NetworkBundle& bundle) {
    fs::create_directories(dir);
    const fs::path base(dir);
    nlohmann::json meta;
    meta["format"] = 1;
    meta["has_drive"] = bundle.drive.has_value();
    meta["has_walk"] = bundle.walk.has_value();
    meta["station_count"] = bundle.stations.size();
    meta["has_pois"] = bundle.pois.has_value();
    if (bundle.drive) save_network_csv(base / "drive_nodes.csv", base / "drive_edges.csv",
                                       *bundle.drive);
    if (bundle.walk) save_network_csv(base / "walk_nodes.csv", base / "walk_edges.csv",
                                      *bundle.walk);
    if (!bundle.stations.empty()) {
        std::vector<csv::Row> rows{{"station_id", "lon", "lat", "drive_node", "walk_node"}};
        for (const Station& s : bundle.stations)
            rows.push_back({csv::format_int(s.id), csv::format_double(s.pos.lon),
                            csv::format_double(s.pos.lat), csv::format_int(s.drive_node),
                            csv::format_int(s.walk_node)});
        csv::write_file((base / "stations.csv").string(), rows);
    }
    if (bundle.pois) {
        meta["poi_cell_size_m"] = bundle.pois->cell_size_m;
        std::vector<csv::Row> rows{{"lon", "lat", "half_lon_m", "half_lat_m", "count"}};
        for (const PoiCell& c : bundle.pois->cells)
            rows.push_back({csv::format_double(c.centre.lon), csv::format_double(c.centre.lat),
                            csv::format_double(c.half_lon_m), csv::format_double(c.half_lat_m),
                            csv::format_int(c.count)});
        csv::write_file((base / "poi_grid.csv").string(), rows);
    }
    std::ofstream out(base / "meta.json");
    if (!out) fail(Errc::io_error, "cannot write bundle meta in '" + dir + "'");
    out << meta.dump(2) << '\n';
}

NetworkBundle load_bundle(const std::string& dir) {
    const fs::path base(dir);
    std::ifstream in(base / "meta.json");
    if (!in) fail(Errc::io_error, "no bundle at '" + dir + "' (missing meta.json)");
    nlohmann::json meta;
    try {
        in >> meta;
    } catch (const nlohmann::json::exception& e) {
        fail(Errc::parse_error, std::string("bundle meta.json: ") + e.what());
    }
    NetworkBundle bundle;
    if (meta.value("has_drive", false))
        bundle.drive = load_network_csv((base / "drive_nodes.csv").string(),
                                        (base / "drive_edges.csv").string(), NetworkKind::drive);
    if (meta.value("has_walk", false))
        bundle.walk = load_network_csv((base / "walk_nodes.csv").string(),
                                       (base / "walk_edges.csv").string(), NetworkKind::walk);
    if (fs::exists(base / "stations.csv")) {
        const auto rows = csv::read_file((base / "stations.csv").string());
        require_header(rows, {"station_id", "lon", "lat", "drive_node", "walk_node"},
                       (base / "stations.csv").string());
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const auto& row = rows[i];
            Station s;
            s.id = csv::parse_int(row[0], "station_id");
            s.pos = {csv::parse_double(row[1], "lon"), csv::parse_double(row[2], "lat")};
            s.drive_node = csv::parse_int(row[3], "drive_node");
            s.walk_node = csv::parse_int(row[4], "walk_node");
            bundle.stations.push_back(s);
        }
    }
    if (meta.value("has_pois", false)) {
        PoiIndex index;
        index.cell_size_m = meta.value("poi_cell_size_m", 0.0);
        const auto rows = csv::read_file((base / "poi_grid.csv").string());
        require_header(rows, {"lon", "lat", "half_lon_m", "half_lat_m", "count"},
                       (base / "poi_grid.csv").string());
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const auto& row = rows[i];
            PoiCell c;
            c.centre = {csv::parse_double(row[0], "lon"), csv::parse_double(row[1], "lat")};
            c.half_lon_m = csv::parse_double(row[2], "half_lon_m");
            c.half_lat_m = csv::parse_double(row[3], "half_lat_m");
            c.count = csv::parse_int(row[4], "count");
            index.cells.push_back(c);
        }
        bundle.pois = std::move(index);
    }
    return bundle;
}

}  // namespace reqgen
