#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "reqgen/geodesy.hpp"
#include "reqgen/sampling.hpp"

namespace reqgen {

using NodeId = std::int64_t;

enum class NetworkKind { drive, walk };

// Default speed when an arc has no usable maxspeed, per network kind.
double default_maxspeed_mps(NetworkKind kind);

struct Arc {
    NodeId u = 0;
    NodeId v = 0;
    double length_m = 0.0;
    double maxspeed_mps = 0.0;
    double tt_s = 0.0;  // filled by compute_arc_travel_times
};

struct Bounds {
    double min_lon = 0.0, max_lon = 0.0, min_lat = 0.0, max_lat = 0.0;
    bool contains(LonLat p) const {
        return p.lon >= min_lon && p.lon <= max_lon && p.lat >= min_lat && p.lat <= max_lat;
    }
    LonLat centre() const { return {(min_lon + max_lon) / 2.0, (min_lat + max_lat) / 2.0}; }
};

// Directed multigraph: parallel arcs and self-loops are legal. Nodes are kept
// in insertion order; `index_of` maps external ids to dense indices.
class RoadNetwork {
  public:
    NetworkKind kind = NetworkKind::drive;

    std::size_t node_count() const { return ids_.size(); }
    std::size_t arc_count() const { return arcs_.size(); }
    bool empty() const { return ids_.empty(); }

    // Throws Errc::duplicate_name if the id already exists.
    void add_node(NodeId id, LonLat pos);
    // Throws Errc::parse_error if an endpoint is unknown. maxspeed <= 0 or
    // NaN falls back to the kind default.
    void add_arc(NodeId u, NodeId v, double length_m, double maxspeed_mps);

    bool has_node(NodeId id) const { return index_.count(id) > 0; }
    std::size_t index_of(NodeId id) const;  // throws Errc::unknown_node
    NodeId id_at(std::size_t i) const { return ids_[i]; }
    LonLat coord(NodeId id) const { return coords_[index_of(id)]; }
    LonLat coord_at(std::size_t i) const { return coords_[i]; }
    const std::vector<NodeId>& ids() const { return ids_; }
    const std::vector<Arc>& arcs() const { return arcs_; }
    std::vector<Arc>& mutable_arcs() { return arcs_; }
    const std::vector<std::uint32_t>& out_arcs(std::size_t i) const { return out_[i]; }

    Bounds bounds() const;  // throws Errc::empty_network

    // Node whose coordinates minimise haversine distance to p; ties go to the
    // smaller node id.
    NodeId nearest_node(LonLat p) const;  // throws Errc::empty_network

  private:
    std::vector<NodeId> ids_;
    std::vector<LonLat> coords_;
    std::vector<Arc> arcs_;
    std::vector<std::vector<std::uint32_t>> out_;
    std::unordered_map<NodeId, std::size_t> index_;
};

// Fills every arc's tt_s = alpha * length / maxspeed. `speed_override_mps`,
// when given, replaces each arc's own maxspeed (a network-wide uniform speed).
// alpha must be in (0, 1].
void compute_arc_travel_times(RoadNetwork& net, double alpha,
                              std::optional<double> speed_override_mps = std::nullopt);

inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

// Single-source shortest travel times over arc tt_s, by dense node index;
// unreachable entries are kUnreachable (infinity).
std::vector<double> shortest_travel_times_from(const RoadNetwork& net, std::size_t source_index);

// Point-to-point convenience. Throws Errc::unknown_node / Errc::unreachable.
double shortest_travel_time(const RoadNetwork& net, NodeId from, NodeId to);

// Dense |L| x |L| matrix in the input order of `locations` (node ids);
// diagonal is 0, unreachable pairs are kUnreachable.
std::vector<std::vector<double>> travel_time_matrix(const RoadNetwork& net,
                                                    const std::vector<NodeId>& locations);

// Synthetic rows x cols lattice: nodes on a geographic grid `spacing_m`
// apart, arcs in both directions between lattice neighbours with the given
// maxspeed and length exactly spacing_m. Node id = row * cols + col. Both
// dimensions must be >= 2.
RoadNetwork synth_grid_network(int rows, int cols, double spacing_m, double maxspeed_mps,
                               NetworkKind kind = NetworkKind::drive);

// ---------------------------------------------------------------------------
// Zones

struct Zone {
    enum class Shape { rectangle, circle };
    Shape shape = Shape::circle;
    LonLat centre;
    double radius_m = 0.0;      // circle
    double length_lon_m = 0.0;  // rectangle, full side along longitude
    double length_lat_m = 0.0;  // rectangle, full side along latitude
};

// Rectangle membership is measured in metres from the centre along each axis
// (equirectangular at the centre latitude); circles use haversine distance.
bool zone_contains(const Zone& z, LonLat p);

// Uniform point inside the zone (area-uniform for circles via sqrt radius).
LonLat random_point_in_zone(const Zone& z, Rng& rng);

// ---------------------------------------------------------------------------
// Stations

struct Station {
    NodeId id = 0;
    LonLat pos;
    NodeId drive_node = -1;  // nearest drive-network node
    NodeId walk_node = -1;   // nearest walk-network node, -1 if no walk net
};

// Drops exact coordinate duplicates (first occurrence wins) and stations
// whose nearest drive node cannot be reached from at least half of a
// deterministic sample of network nodes. Returns the kept stations with
// drive_node resolved; walk_node is resolved when a walk network is given.
std::vector<Station> dedupe_stations(const std::vector<Station>& raw, const RoadNetwork& drive,
                                     const RoadNetwork* walk = nullptr);

// Station ids whose walking time from `from` is strictly below max_walk_s.
// With a walk network: shortest path length from the nearest walk node of
// `from` to the station's walk node, divided by walk_speed. Without one:
// haversine distance / walk_speed. Result is sorted ascending.
std::vector<NodeId> stations_within_walk(LonLat from, const std::vector<Station>& stations,
                                         const RoadNetwork* walk, double max_walk_s,
                                         double walk_speed_mps);

// ---------------------------------------------------------------------------
// Points of interest

struct PoiCell {
    LonLat centre;
    double half_lon_m = 0.0;
    double half_lat_m = 0.0;
    std::int64_t count = 0;
};

struct PoiIndex {
    double cell_size_m = 0.0;
    std::vector<PoiCell> cells;  // row-major over the covering grid

    std::int64_t total() const;
};

// Partitions `bounds` into square-ish cells of `cell_size_m` and counts the
// points per cell. Points outside the bounds are ignored (and reported via
// `skipped`, when non-null). Throws Errc::degenerate_poi_index when no point
// lands inside or cell_size_m <= 0.
PoiIndex build_poi_index(const std::vector<LonLat>& points, const Bounds& bounds,
                         double cell_size_m, std::size_t* skipped = nullptr);

// ---------------------------------------------------------------------------
// Offline bundle: everything the generator needs, stored as a directory of
// CSV files plus meta.json.

struct NetworkBundle {
    std::optional<RoadNetwork> drive;
    std::optional<RoadNetwork> walk;
    std::vector<Station> stations;
    std::optional<PoiIndex> pois;
};

void save_bundle(const std::string& dir, const NetworkBundle& bundle);
NetworkBundle load_bundle(const std::string& dir);

// CSV pair loader (headers: node_id,lon,lat and u,v,length,maxspeed).
RoadNetwork load_network_csv(const std::string& nodes_path, const std::string& edges_path,
                             NetworkKind kind);

// Stations CSV loader (header: station_id,lon,lat), raw (no dedupe).
std::vector<Station> load_stations_csv(const std::string& path);

// POI CSV loader (header: lon,lat).
std::vector<LonLat> load_pois_csv(const std::string& path);

}  // namespace reqgen
