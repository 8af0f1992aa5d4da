#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "reqgen/config.hpp"
#include "reqgen/errors.hpp"
#include "reqgen/expr.hpp"
#include "reqgen/generator.hpp"
#include "reqgen/metrics.hpp"
#include "reqgen/network.hpp"
#include "reqgen/sampling.hpp"

using namespace reqgen;

namespace {

template <typename F>
Errc errc_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return Errc::syntax_error;
}

std::string fresh_dir(const std::string& name) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / ("reqgen_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

// 5x5 grid, 200 m spacing, 10 m/s; stations on two corners and the centre.
const NetworkBundle& bundle() {
    static const NetworkBundle b = [] {
        NetworkBundle nb;
        nb.drive = synth_grid_network(5, 5, 200.0, 10.0);
        for (const NodeId node : {0, 12, 24})
            nb.stations.push_back(
                {100 + node / 12, nb.drive->coord(node), node, NodeId{-1}});
        return nb;
    }();
    return b;
}

Generator make_generator(const std::string& json) {
    const InstanceConfig cfg = parse_config(json);
    return Generator(validate_config(cfg, *bundle().drive), bundle());
}

double number_of(const Value& v) {
    if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
    return std::get<double>(v);
}

const char* kBasic = R"json({
  "network": "Test City",
  "seed": 99,
  "problem": "DARP",
  "replicas": 2,
  "requests": 30,
  "instance_filename": ["network", "problem", "requests"],
  "parameters": [
    {"name": "min_planning_period", "type": "integer", "value": 0},
    {"name": "max_planning_period", "type": "integer", "value": 600}
  ],
  "attributes": [
    {"name": "time_stamp", "type": "real", "dynamism": 0.5},
    {"name": "origin", "type": "location"},
    {"name": "destination", "type": "location"},
    {"name": "latest_departure", "type": "real", "expression": "time_stamp + 120"}
  ],
  "travel_time_matrix": ["origin", "destination"]
})json";

}  // namespace

TEST_CASE("scheduled time stamps stay inside the period and hit the target") {
    for (const double target : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        for (const std::uint64_t seed : {1u, 2u, 3u}) {
            Rng rng(seed);
            bool reached = false;
            const auto ts = assign_time_stamps(100, 0.0, 3600.0, target, false, rng, &reached);
            REQUIRE(ts.size() == 100);
            CHECK(std::is_sorted(ts.begin(), ts.end()));
            for (const double t : ts) {
                CHECK(t > 0.0);
                CHECK(t <= 3600.0);
            }
            CHECK(reached);
            const double rho = measure_dynamism(ts, 0.0, 3600.0).rho;
            CHECK(std::abs(rho - target) <= 0.02 + 1e-9);
        }
    }
}

TEST_CASE("extreme dynamism targets are exact") {
    Rng rng(7);
    // Target 1: perfectly even spacing, the last stamp on the period end.
    const auto even = assign_time_stamps(10, 0.0, 100.0, 1.0, false, rng);
    for (std::size_t i = 0; i < even.size(); ++i)
        CHECK(even[i] == doctest::Approx((i + 1) * 10.0).epsilon(1e-12));
    CHECK(measure_dynamism(even, 0.0, 100.0).rho == 1.0);

    // Target 0: everything lands on one instant strictly inside the period.
    const auto burst = assign_time_stamps(10, 0.0, 100.0, 0.0, false, rng);
    for (const double t : burst) CHECK(t == burst.front());
    CHECK(burst.front() > 0.0);
    CHECK(measure_dynamism(burst, 0.0, 100.0).rho == 0.0);
}

TEST_CASE("integer time stamps are whole seconds inside the period") {
    Rng rng(11);
    const auto ts = assign_time_stamps(50, 0.0, 400.0, 0.3, true, rng);
    for (const double t : ts) {
        CHECK(std::floor(t) == t);
        CHECK(t > 0.0);
        CHECK(t <= 400.0);
    }
    CHECK(std::is_sorted(ts.begin(), ts.end()));
}

TEST_CASE("time stamp scheduling input validation") {
    Rng rng(1);
    CHECK(errc_of([&] { assign_time_stamps(1, 0.0, 10.0, 0.5, false, rng); }) ==
          Errc::too_few_requests);
    CHECK(errc_of([&] { assign_time_stamps(5, 10.0, 10.0, 0.5, false, rng); }) ==
          Errc::out_of_bounds);
    CHECK(errc_of([&] { assign_time_stamps(5, 0.0, 10.0, 1.5, false, rng); }) ==
          Errc::invalid_params);
    CHECK(errc_of([&] { assign_time_stamps(5, 0.0, 10.0, -0.1, false, rng); }) ==
          Errc::invalid_params);
}

TEST_CASE("generation is deterministic and replicas are independent") {
    Generator first = make_generator(kBasic);
    Generator second = make_generator(kBasic);
    const auto a = first.generate_all();
    const auto b = second.generate_all();
    REQUIRE(a.size() == 2);
    REQUIRE(b.size() == 2);

    for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(a[k].name == b[k].name);
        CHECK(a[k].matrix_ids == b[k].matrix_ids);
        CHECK(a[k].matrix == b[k].matrix);
        REQUIRE(a[k].requests.size() == b[k].requests.size());
        for (std::size_t i = 0; i < a[k].requests.size(); ++i) {
            const auto& ra = a[k].requests[i].values;
            const auto& rb = b[k].requests[i].values;
            REQUIRE(ra.size() == rb.size());
            for (std::size_t c = 0; c < ra.size(); ++c) {
                CHECK(ra[c].first == rb[c].first);
                CHECK(value_to_string(ra[c].second) == value_to_string(rb[c].second));
            }
        }
    }

    // Different replicas draw from distinct streams.
    std::vector<std::string> ts1, ts2;
    for (const auto& r : a[0].requests) ts1.push_back(value_to_string(*r.find("origin")));
    for (const auto& r : a[1].requests) ts2.push_back(value_to_string(*r.find("origin")));
    CHECK(ts1 != ts2);
}

TEST_CASE("expression attributes are evaluated exactly") {
    Generator gen = make_generator(kBasic);
    const Instance inst = gen.generate_replica(1);
    CHECK(inst.name == "TestCity_DARP_30_1");
    CHECK(inst.csv_columns == std::vector<std::string>{"time_stamp", "origin", "destination",
                                                       "latest_departure"});
    REQUIRE(inst.ts_min.has_value());
    REQUIRE(inst.ts_max.has_value());
    CHECK(*inst.ts_min == 0.0);
    CHECK(*inst.ts_max == 600.0);

    std::vector<double> stamps;
    for (const RequestRecord& r : inst.requests) {
        const double ts = number_of(*r.find("time_stamp"));
        const double lu = number_of(*r.find("latest_departure"));
        CHECK(lu == ts + 120.0);
        CHECK(ts > 0.0);
        CHECK(ts <= 600.0);
        stamps.push_back(ts);
    }
    // Scheduled stamps are handed out in request order.
    CHECK(std::is_sorted(stamps.begin(), stamps.end()));
}

TEST_CASE("the travel-time matrix covers request endpoints without duplicates") {
    Generator gen = make_generator(kBasic);
    const Instance inst = gen.generate_replica(1);

    REQUIRE_FALSE(inst.matrix_ids.empty());
    CHECK(inst.matrix.size() == inst.matrix_ids.size());
    CHECK(inst.matrix_coords.size() == inst.matrix_ids.size());
    const std::set<std::string> ids(inst.matrix_ids.begin(), inst.matrix_ids.end());
    CHECK(ids.size() == inst.matrix_ids.size());

    for (std::size_t i = 0; i < inst.matrix.size(); ++i) {
        REQUIRE(inst.matrix[i].size() == inst.matrix_ids.size());
        CHECK(inst.matrix[i][i] == 0.0);
        for (const double v : inst.matrix[i]) CHECK(std::isfinite(v));  // grid is connected
    }

    for (const RequestRecord& r : inst.requests) {
        for (const char* col : {"origin", "destination"}) {
            const auto& loc = std::get<ExprLocation>(*r.find(col));
            CHECK(ids.count(std::to_string(loc.node)) == 1);
        }
    }
}

TEST_CASE("bus stations enter the matrix under their own ids") {
    std::string cfg(kBasic);
    const std::string from = R"json("travel_time_matrix": ["origin", "destination"])json";
    const std::string to = R"json("travel_time_matrix": ["bus_stations", "origin"])json";
    cfg.replace(cfg.find(from), from.size(), to);

    Generator gen = make_generator(cfg);
    const Instance inst = gen.generate_replica(1);
    REQUIRE(inst.matrix_ids.size() >= 3);
    CHECK(inst.matrix_ids[0] == "100");
    CHECK(inst.matrix_ids[1] == "101");
    CHECK(inst.matrix_ids[2] == "102");
}

TEST_CASE("written instances round-trip byte for byte") {
    const std::string dir_a = fresh_dir("gen_a");
    const std::string dir_b = fresh_dir("gen_b");
    for (const Instance& inst : make_generator(kBasic).generate_all())
        write_instance(inst, dir_a);
    for (const Instance& inst : make_generator(kBasic).generate_all())
        write_instance(inst, dir_b);

    const char* suffixes[] = {".csv", "_tt_matrix.csv", "_locations.graphml", "_meta.json"};
    for (const char* stem : {"TestCity_DARP_30_1", "TestCity_DARP_30_2"}) {
        for (const char* suffix : suffixes) {
            const std::string name = std::string(stem) + suffix;
            CHECK(slurp(dir_a + "/" + name) == slurp(dir_b + "/" + name));
        }
    }

    // The CSV header row lists the printable attributes.
    const std::string csv = slurp(dir_a + "/TestCity_DARP_30_1.csv");
    CHECK(csv.substr(0, csv.find('\n')) ==
          "time_stamp,origin,destination,latest_departure");
}

TEST_CASE("static probability forces time stamps to zero") {
    const char* tmpl = R"json({
      "requests": 60,
      "seed": 5,
      "parameters": [
        {"name": "min_planning_period", "type": "integer", "value": 0},
        {"name": "max_planning_period", "type": "integer", "value": 600}
      ],
      "attributes": [
        {"name": "time_stamp", "type": "real",
         "pdf": {"type": "uniform", "loc": 1, "scale": 599},
         "static_probability": %s}
      ]
    })json";

    const auto stamps_with = [&](const char* prob) {
        char buf[1024];
        std::snprintf(buf, sizeof(buf), tmpl, prob);
        Generator gen = make_generator(buf);
        std::vector<double> out;
        for (const RequestRecord& r : gen.generate_replica(1).requests)
            out.push_back(number_of(*r.find("time_stamp")));
        return out;
    };

    for (const double t : stamps_with("1.0")) CHECK(t == 0.0);
    for (const double t : stamps_with("0.0")) CHECK(t > 0.0);
    const auto mixed = stamps_with("0.5");
    const auto zeros = std::count(mixed.begin(), mixed.end(), 0.0);
    CHECK(zeros > 10);
    CHECK(zeros < 50);
}

TEST_CASE("constraints filter samples and infeasible ones are reported") {
    const char* tmpl = R"json({
      "requests": 25,
      "seed": 3,
      "attributes": [
        {"name": "load", "type": "real",
         "pdf": {"type": "uniform", "loc": 0, "scale": 10},
         "constraints": ["load >= %s"]}
      ]
    })json";

    char feasible[512];
    std::snprintf(feasible, sizeof(feasible), tmpl, "5");
    Generator gen = make_generator(feasible);
    for (const RequestRecord& r : gen.generate_replica(1).requests)
        CHECK(number_of(*r.find("load")) >= 5.0);

    char impossible[512];
    std::snprintf(impossible, sizeof(impossible), tmpl, "20");
    Generator bad = make_generator(impossible);
    CHECK(errc_of([&] { bad.generate_replica(1); }) == Errc::infeasible_config);
}

TEST_CASE("integer attributes round half up") {
    const char* cfg = R"json({
      "requests": 4,
      "attributes": [
        {"name": "up", "type": "integer", "pdf": {"type": "uniform", "loc": 2.5, "scale": 0}},
        {"name": "down", "type": "integer", "pdf": {"type": "uniform", "loc": -2.5, "scale": 0}}
      ]
    })json";
    Generator gen = make_generator(cfg);
    for (const RequestRecord& r : gen.generate_replica(1).requests) {
        CHECK(std::get<std::int64_t>(*r.find("up")) == 3);
        CHECK(std::get<std::int64_t>(*r.find("down")) == -2);
    }
}

TEST_CASE("subset attributes draw from the declared pool") {
    const char* cfg = R"json({
      "requests": 40,
      "seed": 21,
      "parameters": [
        {"name": "depots", "type": "array_locations", "size": 3, "locs": "random"}
      ],
      "attributes": [
        {"name": "depot", "type": "location", "subset_locations": "depots"}
      ],
      "travel_time_matrix": ["depots"]
    })json";
    Generator gen = make_generator(cfg);
    const Instance inst = gen.generate_replica(1);

    CHECK(inst.matrix_ids.size() <= 3);  // three depots, fewer after dedupe
    std::set<std::string> pool(inst.matrix_ids.begin(), inst.matrix_ids.end());
    std::set<std::string> seen;
    for (const RequestRecord& r : inst.requests) {
        const auto& loc = std::get<ExprLocation>(*r.find("depot"));
        CHECK(pool.count(std::to_string(loc.node)) == 1);
        seen.insert(std::to_string(loc.node));
    }
    CHECK(seen.size() <= 3);
}

TEST_CASE("weighted subsets favour the heavy value") {
    const char* cfg = R"json({
      "requests": 400,
      "seed": 17,
      "parameters": [
        {"name": "sizes", "type": "array_primitives", "value": [1, 7]}
      ],
      "attributes": [
        {"name": "party", "type": "integer", "subset_primitives": "sizes",
         "weights": [9, 1]}
      ]
    })json";
    Generator gen = make_generator(cfg);
    std::int64_t heavy = 0;
    const Instance inst = gen.generate_replica(1);
    for (const RequestRecord& r : inst.requests) {
        const auto v = std::get<std::int64_t>(*r.find("party"));
        CHECK((v == 1 || v == 7));
        if (v == 1) ++heavy;
    }
    CHECK(heavy > 330);  // 9:1 odds over 400 draws
    CHECK(heavy < 390);
}

TEST_CASE("walking stops resolve to declared station ids") {
    const char* cfg = R"json({
      "requests": 30,
      "seed": 8,
      "parameters": [
        {"name": "max_walking", "type": "real", "value": 300, "time_unit": "s"},
        {"name": "walk_speed", "type": "real", "value": 1.4}
      ],
      "attributes": [
        {"name": "origin", "type": "location"},
        {"name": "stops_orgn", "type": "array_primitives", "expression": "stops(origin)"}
      ]
    })json";
    Generator gen = make_generator(cfg);
    bool any_nonempty = false;
    for (const RequestRecord& r : gen.generate_replica(1).requests) {
        const auto& arr = std::get<ValueArray>(*r.find("stops_orgn"));
        for (const Primitive& p : arr.items) {
            const auto id = std::get<std::int64_t>(p);
            CHECK(id >= 100);
            CHECK(id <= 102);
            any_nonempty = true;
        }
    }
    CHECK(any_nonempty);  // centre station covers a large patch of the grid
}

TEST_CASE("poi placements live on network nodes") {
    NetworkBundle nb;
    nb.drive = synth_grid_network(5, 5, 200.0, 10.0);
    // All interest concentrates around the north-east corner.
    std::vector<LonLat> pts(20, nb.drive->coord(24));
    nb.pois = build_poi_index(pts, nb.drive->bounds(), 200.0, nullptr);

    const char* cfg = R"json({
      "requests": 25,
      "seed": 12,
      "attributes": [
        {"name": "origin", "type": "location"},
        {"name": "destination", "type": "location"}
      ],
      "method_pois": {"locations": ["origin", "destination"],
                      "pdf": {"type": "uniform", "loc": 100, "scale": 300}}
    })json";
    const InstanceConfig parsed = parse_config(cfg);
    Generator gen(validate_config(parsed, *nb.drive), nb);
    const Instance inst = gen.generate_replica(1);
    for (const RequestRecord& r : inst.requests) {
        for (const char* col : {"origin", "destination"}) {
            const auto& loc = std::get<ExprLocation>(*r.find(col));
            CHECK(nb.drive->has_node(loc.node));
        }
    }
}

TEST_CASE("filename stems strip whitespace and fall back to a default") {
    InstanceConfig cfg = parse_config(kBasic);
    CHECK(instance_filename_stem(cfg, 1) == "TestCity_DARP_30_1");
    CHECK(instance_filename_stem(cfg, 2) == "TestCity_DARP_30_2");

    cfg.instance_filename.clear();
    CHECK(instance_filename_stem(cfg, 1) == "instance_1");

    cfg.instance_filename = {"unknown_item"};
    CHECK(errc_of([&] { instance_filename_stem(cfg, 1); }) == Errc::unresolved_reference);
}

TEST_CASE("meta sidecar records the planning period and target flag") {
    const std::string dir = fresh_dir("gen_meta");
    Generator gen = make_generator(kBasic);
    write_instance(gen.generate_replica(1), dir);
    const std::string meta = slurp(dir + "/TestCity_DARP_30_1_meta.json");
    CHECK(meta.find("\"seed\": 99") != std::string::npos);
    CHECK(meta.find("\"replica\": 1") != std::string::npos);
    CHECK(meta.find("\"problem\": \"DARP\"") != std::string::npos);
    CHECK(meta.find("\"ts_min\": 0.0") != std::string::npos);
    CHECK(meta.find("\"ts_max\": 600.0") != std::string::npos);
    CHECK(meta.find("\"dynamism_target_reached\": true") != std::string::npos);
    CHECK(meta.back() == '\n');
}
