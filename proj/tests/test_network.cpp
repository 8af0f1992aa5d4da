#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <vector>

#include "reqgen/errors.hpp"
#include "reqgen/geodesy.hpp"
#include "reqgen/network.hpp"
#include "reqgen/sampling.hpp"

using namespace reqgen;

namespace {

std::string fresh_dir(const std::string& name) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / ("reqgen_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

// Random digraph for oracle comparisons: up to 8 nodes on a small coordinate
// patch, arc travel times already computed.
RoadNetwork random_network(Rng& rng, std::size_t max_nodes = 8) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.next_double() * (max_nodes - 1));
    RoadNetwork net;
    for (std::size_t i = 0; i < n; ++i)
        net.add_node(static_cast<NodeId>(i),
                     {rng.next_double() * 0.01, rng.next_double() * 0.01});
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = 0; v < n; ++v) {
            if (u == v) continue;
            if (rng.next_double() < 0.35)
                net.add_arc(static_cast<NodeId>(u), static_cast<NodeId>(v),
                            10.0 + rng.next_double() * 500.0, 1.0 + rng.next_double() * 20.0);
        }
    compute_arc_travel_times(net, 1.0);
    return net;
}

// Exhaustive simple-path minimum as an independent shortest-path oracle.
void enumerate_paths(const RoadNetwork& net, std::size_t at, std::size_t goal, double cost,
                     std::vector<bool>& visited, double& best) {
    if (at == goal) {
        best = std::min(best, cost);
        return;
    }
    for (std::uint32_t ai : net.out_arcs(at)) {
        const Arc& a = net.arcs()[ai];
        const std::size_t j = net.index_of(a.v);
        if (visited[j]) continue;
        visited[j] = true;
        enumerate_paths(net, j, goal, cost + a.tt_s, visited, best);
        visited[j] = false;
    }
}

double brute_force_tt(const RoadNetwork& net, std::size_t from, std::size_t to) {
    if (from == to) return 0.0;
    std::vector<bool> visited(net.node_count(), false);
    visited[from] = true;
    double best = kUnreachable;
    enumerate_paths(net, from, to, 0.0, visited, best);
    return best;
}

}  // namespace

TEST_CASE("grid network has lattice arcs with exact travel times") {
    RoadNetwork net = synth_grid_network(3, 3, 100.0, 10.0);
    CHECK(net.node_count() == 9);
    CHECK(net.arc_count() == 24);  // 12 undirected lattice edges, both directions
    compute_arc_travel_times(net, 1.0);
    for (const Arc& a : net.arcs()) {
        CHECK(a.length_m == 100.0);
        CHECK(a.tt_s == doctest::Approx(10.0).epsilon(1e-12));
    }
    // Corner to corner: four hops.
    CHECK(shortest_travel_time(net, 0, 8) == doctest::Approx(40.0).epsilon(1e-12));

    compute_arc_travel_times(net, 0.5);
    CHECK(shortest_travel_time(net, 0, 8) == doctest::Approx(20.0).epsilon(1e-12));
}

TEST_CASE("grid spacing is honored geographically") {
    RoadNetwork net = synth_grid_network(2, 2, 250.0, 10.0);
    CHECK(haversine_m(net.coord(0), net.coord(1)) == doctest::Approx(250.0).epsilon(1e-6));
    CHECK(haversine_m(net.coord(0), net.coord(2)) == doctest::Approx(250.0).epsilon(1e-3));
    CHECK_THROWS_AS(synth_grid_network(1, 5, 100.0, 10.0), Error);
}

TEST_CASE("node and arc bookkeeping") {
    RoadNetwork net;
    net.add_node(10, {0.0, 0.0});
    net.add_node(20, {0.001, 0.0});
    CHECK_THROWS_AS(net.add_node(10, {0.5, 0.5}), Error);
    CHECK_THROWS_AS(net.add_arc(10, 99, 5.0, 1.0), Error);
    net.add_arc(10, 20, 5.0, 1.0);
    net.add_arc(10, 20, 7.0, 1.0);  // parallel arcs are legal
    net.add_arc(10, 10, 1.0, 1.0);  // self loop too
    CHECK(net.arc_count() == 3);
    CHECK(net.index_of(20) == 1);
    CHECK_THROWS_AS(net.index_of(99), Error);
}

TEST_CASE("non-positive maxspeed falls back to the kind default") {
    RoadNetwork net;
    net.kind = NetworkKind::walk;
    net.add_node(0, {0.0, 0.0});
    net.add_node(1, {0.001, 0.0});
    net.add_arc(0, 1, 10.0, 0.0);
    net.add_arc(0, 1, 10.0, -3.0);
    for (const Arc& a : net.arcs()) CHECK(a.maxspeed_mps == default_maxspeed_mps(NetworkKind::walk));
}

TEST_CASE("travel time formula applies the speed factor") {
    RoadNetwork net;
    net.add_node(0, {0.0, 0.0});
    net.add_node(1, {0.001, 0.0});
    net.add_arc(0, 1, 100.0, 10.0);
    compute_arc_travel_times(net, 0.5);
    CHECK(net.arcs()[0].tt_s == doctest::Approx(5.0).epsilon(1e-15));
    compute_arc_travel_times(net, 1.0, 25.0);  // network-wide speed override
    CHECK(net.arcs()[0].tt_s == doctest::Approx(4.0).epsilon(1e-15));
    CHECK_THROWS_AS(compute_arc_travel_times(net, 0.0), Error);
    CHECK_THROWS_AS(compute_arc_travel_times(net, 1.5), Error);
}

TEST_CASE("dijkstra agrees with exhaustive path enumeration on 1000 random networks") {
    Rng rng(1234);
    for (int trial = 0; trial < 1000; ++trial) {
        const RoadNetwork net = random_network(rng);
        const std::size_t n = net.node_count();
        const std::size_t src = static_cast<std::size_t>(rng.next_double() * n);
        const std::vector<double> dist = shortest_travel_times_from(net, src);
        for (std::size_t v = 0; v < n; ++v) {
            const double expect = brute_force_tt(net, src, v);
            if (expect == kUnreachable)
                CHECK(dist[v] == kUnreachable);
            else
                CHECK(dist[v] == doctest::Approx(expect).epsilon(1e-12));
        }
    }
}

TEST_CASE("unreachable pairs throw from the point query") {
    RoadNetwork net;
    net.add_node(0, {0.0, 0.0});
    net.add_node(1, {0.001, 0.0});
    net.add_arc(0, 1, 10.0, 1.0);
    compute_arc_travel_times(net, 1.0);
    CHECK_THROWS_AS(shortest_travel_time(net, 1, 0), Error);
    const auto matrix = travel_time_matrix(net, {0, 1});
    CHECK(matrix[0][0] == 0.0);
    CHECK(matrix[1][1] == 0.0);
    CHECK(matrix[0][1] > 0.0);
    CHECK(matrix[1][0] == kUnreachable);
}

TEST_CASE("nearest node breaks ties toward the smaller id") {
    RoadNetwork net;
    net.add_node(5, {0.0, 0.001});
    net.add_node(2, {0.0, -0.001});
    net.add_node(9, {1.0, 1.0});
    CHECK(net.nearest_node({0.0, 0.0}) == 2);
    CHECK(net.nearest_node({0.9, 0.9}) == 9);
}

TEST_CASE("zone membership and sampling") {
    Zone circle;
    circle.shape = Zone::Shape::circle;
    circle.centre = {10.0, 45.0};
    circle.radius_m = 500.0;
    CHECK(zone_contains(circle, {10.0, 45.0}));
    CHECK_FALSE(zone_contains(circle, {10.1, 45.0}));

    Zone rect;
    rect.shape = Zone::Shape::rectangle;
    rect.centre = {10.0, 45.0};
    rect.length_lon_m = 1000.0;  // full side: 500 m each way
    rect.length_lat_m = 400.0;

    Rng rng(31);
    for (int i = 0; i < 2000; ++i) {
        const LonLat p = random_point_in_zone(circle, rng);
        CHECK(haversine_m(p, circle.centre) <= 500.0 + 1e-6);
        const LonLat q = random_point_in_zone(rect, rng);
        CHECK(zone_contains(rect, q));
    }
}

TEST_CASE("station dedupe keeps the first of identical coordinates") {
    RoadNetwork drive = synth_grid_network(3, 3, 100.0, 10.0);
    compute_arc_travel_times(drive, 1.0);
    const LonLat a = drive.coord(0), b = drive.coord(8);
    std::vector<Station> raw = {{1, a, -1, -1}, {2, b, -1, -1}, {3, a, -1, -1}};
    const auto kept = dedupe_stations(raw, drive);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].id == 1);
    CHECK(kept[1].id == 2);
    CHECK(kept[0].drive_node == 0);
    CHECK(kept[1].drive_node == 8);
}

TEST_CASE("station dedupe drops stations the network cannot reach") {
    // Node 2 is isolated: no arcs touch it.
    RoadNetwork drive;
    drive.add_node(0, {0.0, 0.0});
    drive.add_node(1, {0.001, 0.0});
    drive.add_node(2, {0.5, 0.5});
    drive.add_arc(0, 1, 10.0, 1.0);
    drive.add_arc(1, 0, 10.0, 1.0);
    compute_arc_travel_times(drive, 1.0);
    std::vector<Station> raw = {{7, {0.0005, 0.0}, -1, -1}, {8, {0.5, 0.5}, -1, -1}};
    const auto kept = dedupe_stations(raw, drive);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].id == 7);
}

TEST_CASE("walking reach is strict and sorted") {
    // Stations at 100 m and 200 m from the query point, no walk network:
    // haversine distance / speed against the strict threshold.
    const LonLat origin{0.0, 0.0};
    const double deg100 = 100.0 / metres_per_deg_lat();
    std::vector<Station> stations = {{42, {0.0, 2.0 * deg100}, -1, -1},
                                     {7, {0.0, deg100}, -1, -1}};
    // Stations sit ~100 m and ~200 m away (up to great-circle rounding), so
    // the thresholds leave a margin; the exact strict boundary is pinned by
    // the walk-network case below where the arithmetic is float-exact.
    CHECK(stations_within_walk(origin, stations, nullptr, 99.0, 1.0).empty());
    const auto near = stations_within_walk(origin, stations, nullptr, 101.0, 1.0);
    REQUIRE(near.size() == 1);
    CHECK(near[0] == 7);
    const auto both = stations_within_walk(origin, stations, nullptr, 201.0, 1.0);
    REQUIRE(both.size() == 2);
    CHECK(both[0] == 7);  // sorted ascending by id
    CHECK(both[1] == 42);
    CHECK_THROWS_AS(stations_within_walk(origin, stations, nullptr, 10.0, 0.0), Error);
}

TEST_CASE("walk network reach uses path length over walking speed") {
    RoadNetwork walk = synth_grid_network(3, 3, 100.0, 1.4, NetworkKind::walk);
    compute_arc_travel_times(walk, 1.0);
    std::vector<Station> stations = {{1, walk.coord(2), -1, 2}};  // two hops from node 0
    // 200 m at 2 m/s = 100 s exactly; strict threshold excludes.
    CHECK(stations_within_walk(walk.coord(0), stations, &walk, 100.0, 2.0).empty());
    CHECK(stations_within_walk(walk.coord(0), stations, &walk, 100.5, 2.0).size() == 1);
}

TEST_CASE("poi index counts points perceil-partitioned cell") {
    RoadNetwork net = synth_grid_network(3, 3, 1000.0, 10.0);
    const Bounds bounds = net.bounds();
    std::vector<LonLat> points;
    for (int i = 0; i < 10; ++i) points.push_back(net.coord(0));  // one corner
    points.push_back(net.coord(8));
    points.push_back({99.0, 99.0});  // far outside
    std::size_t skipped = 0;
    const PoiIndex index = build_poi_index(points, bounds, 1100.0, &skipped);
    CHECK(skipped == 1);
    CHECK(index.total() == 11);
    CHECK(index.cells.size() == 4);  // 2x2 cells over a 2000 m square
    CHECK_THROWS_AS(build_poi_index({{99.0, 99.0}}, bounds, 1100.0, nullptr), Error);
    CHECK_THROWS_AS(build_poi_index(points, bounds, 0.0, nullptr), Error);
}

TEST_CASE("bundle round trip preserves networks, stations, and pois") {
    const std::string dir = fresh_dir("bundle");
    NetworkBundle bundle;
    bundle.drive = synth_grid_network(3, 4, 150.0, 12.5);
    bundle.walk = synth_grid_network(2, 2, 75.0, 1.4, NetworkKind::walk);
    bundle.stations = {{5, bundle.drive->coord(1), 1, 0}, {9, bundle.drive->coord(10), 10, 3}};
    std::vector<LonLat> points = {bundle.drive->coord(0), bundle.drive->coord(0),
                                  bundle.drive->coord(11)};
    bundle.pois = build_poi_index(points, bundle.drive->bounds(), 200.0, nullptr);
    save_bundle(dir, bundle);

    const NetworkBundle loaded = load_bundle(dir);
    REQUIRE(loaded.drive.has_value());
    REQUIRE(loaded.walk.has_value());
    CHECK(loaded.drive->node_count() == 12);
    CHECK(loaded.drive->arc_count() == bundle.drive->arc_count());
    CHECK(loaded.walk->node_count() == 4);
    CHECK(loaded.drive->kind == NetworkKind::drive);
    CHECK(loaded.walk->kind == NetworkKind::walk);
    for (std::size_t i = 0; i < 12; ++i) {
        CHECK(loaded.drive->id_at(i) == bundle.drive->id_at(i));
        CHECK(loaded.drive->coord_at(i).lon ==
              doctest::Approx(bundle.drive->coord_at(i).lon).epsilon(1e-15));
        CHECK(loaded.drive->coord_at(i).lat ==
              doctest::Approx(bundle.drive->coord_at(i).lat).epsilon(1e-15));
    }
    for (std::size_t i = 0; i < bundle.drive->arc_count(); ++i) {
        CHECK(loaded.drive->arcs()[i].u == bundle.drive->arcs()[i].u);
        CHECK(loaded.drive->arcs()[i].v == bundle.drive->arcs()[i].v);
        CHECK(loaded.drive->arcs()[i].length_m == bundle.drive->arcs()[i].length_m);
        CHECK(loaded.drive->arcs()[i].maxspeed_mps == bundle.drive->arcs()[i].maxspeed_mps);
    }
    REQUIRE(loaded.stations.size() == 2);
    CHECK(loaded.stations[0].id == 5);
    CHECK(loaded.stations[0].drive_node == 1);
    CHECK(loaded.stations[0].walk_node == 0);
    REQUIRE(loaded.pois.has_value());
    CHECK(loaded.pois->total() == 3);
    CHECK(loaded.pois->cell_size_m == 200.0);
    CHECK(loaded.pois->cells.size() == bundle.pois->cells.size());

    CHECK_THROWS_AS(load_bundle(dir + "_missing"), Error);
}
