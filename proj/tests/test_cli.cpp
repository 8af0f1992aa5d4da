#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "reqgen/cli.hpp"
#include "reqgen/network.hpp"

using namespace reqgen;

namespace {

// The bundle directory must always come from the test, never the caller's
// environment.
const bool env_cleared = [] {
    unsetenv("REQGEN_BUNDLE");
    return true;
}();

std::string fresh_dir(const std::string& name) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / ("reqgen_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    REQUIRE(out.good());
    out << content;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

int run_cli(std::vector<std::string> args, std::string* out_text = nullptr,
            std::string* err_text = nullptr) {
    std::ostringstream out, err;
    std::streambuf* old_out = std::cout.rdbuf(out.rdbuf());
    std::streambuf* old_err = std::cerr.rdbuf(err.rdbuf());
    int code = -1;
    try {
        code = run_command(std::move(args));
    } catch (...) {
        std::cout.rdbuf(old_out);
        std::cerr.rdbuf(old_err);
        throw;
    }
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
    if (out_text) *out_text = out.str();
    if (err_text) *err_text = err.str();
    return code;
}

std::string make_grid_bundle(const std::string& name) {
    const std::string dir = fresh_dir(name);
    std::string out;
    const int code = run_cli({"net", "synth", "--rows", "3", "--cols", "3", "--spacing", "200",
                              "--maxspeed", "10", "--bundle", dir},
                             &out);
    REQUIRE(code == 0);
    REQUIRE(out.find("synthesized 3x3 drive grid (9 nodes)") != std::string::npos);
    return dir;
}

const char* kGenerateConfig = R"json({
  "network": "cli grid",
  "seed": 4,
  "problem": "DARP",
  "replicas": 2,
  "requests": 12,
  "instance_filename": ["problem", "requests"],
  "parameters": [
    {"name": "min_planning_period", "type": "integer", "value": 0},
    {"name": "max_planning_period", "type": "integer", "value": 600}
  ],
  "attributes": [
    {"name": "time_stamp", "type": "real", "dynamism": 0.75},
    {"name": "origin", "type": "location"},
    {"name": "destination", "type": "location"},
    {"name": "latest_departure", "type": "real", "expression": "time_stamp + 180"},
    {"name": "earliest_departure", "type": "real", "expression": "time_stamp + 60"},
    {"name": "latest_arrival", "type": "real", "expression": "earliest_departure + 1200"}
  ],
  "travel_time_matrix": ["origin", "destination"]
})json";

}  // namespace

TEST_CASE("net synth writes a loadable bundle") {
    REQUIRE(env_cleared);
    const std::string dir = make_grid_bundle("synth");
    const NetworkBundle bundle = load_bundle(dir);
    REQUIRE(bundle.drive.has_value());
    CHECK(bundle.drive->node_count() == 9);
    CHECK(bundle.drive->arc_count() == 24);
}

TEST_CASE("net ingest reads a graphml and defaults missing maxspeed") {
    const std::string dir2 = fresh_dir("ingest_dst");
    const std::string withspeed = dir2 + "/roads.graphml";
    write_file(withspeed, R"(<?xml version='1.0' encoding='utf-8'?>
<graphml>
  <key id="d0" for="node" attr.name="x" attr.type="double"/>
  <key id="d1" for="node" attr.name="y" attr.type="double"/>
  <key id="d2" for="edge" attr.name="length" attr.type="double"/>
  <key id="d3" for="edge" attr.name="maxspeed" attr.type="double"/>
  <graph edgedefault="directed">
    <node id="0"><data key="d0">0.0</data><data key="d1">0.0</data></node>
    <node id="1"><data key="d0">0.002</data><data key="d1">0.0</data></node>
    <node id="2"><data key="d0">0.004</data><data key="d1">0.0</data></node>
    <edge source="0" target="1"><data key="d2">200.0</data><data key="d3">10.0</data></edge>
    <edge source="1" target="0"><data key="d2">200.0</data><data key="d3">10.0</data></edge>
    <edge source="1" target="2"><data key="d2">200.0</data><data key="d3">10.0</data></edge>
  </graph>
</graphml>
)");
    std::string out, err;
    int code = run_cli({"net", "ingest", withspeed, "--bundle", dir2}, &out, &err);
    CHECK(code == 0);
    CHECK(out.find("ingested drive network: 3 nodes, 3 arcs") != std::string::npos);
    CHECK(err.empty());
    const NetworkBundle loaded = load_bundle(dir2);
    REQUIRE(loaded.drive.has_value());
    CHECK(loaded.drive->node_count() == 3);
    CHECK(loaded.drive->arc_count() == 3);

    // Edges without a maxspeed attribute fall back to the kind default and
    // are reported once on stderr.
    const std::string dir3 = fresh_dir("ingest_bare");
    const std::string bare = dir3 + "/bare.graphml";
    write_file(bare, R"(<?xml version='1.0' encoding='utf-8'?>
<graphml>
  <key id="d0" for="node" attr.name="x" attr.type="double"/>
  <key id="d1" for="node" attr.name="y" attr.type="double"/>
  <key id="d2" for="edge" attr.name="length" attr.type="double"/>
  <graph edgedefault="directed">
    <node id="0"><data key="d0">0.0</data><data key="d1">0.0</data></node>
    <node id="1"><data key="d0">0.002</data><data key="d1">0.0</data></node>
    <edge source="0" target="1"><data key="d2">200.0</data></edge>
    <edge source="1" target="0"><data key="d2">200.0</data></edge>
  </graph>
</graphml>
)");
    code = run_cli({"net", "ingest", bare, "--bundle", dir3}, &out, &err);
    CHECK(code == 0);
    CHECK(out.find("ingested drive network: 2 nodes, 2 arcs") != std::string::npos);
    CHECK(err.find("arc(s) use the default") != std::string::npos);
}

TEST_CASE("net stations and pois extend an existing bundle") {
    const std::string dir = make_grid_bundle("extend");
    // Inputs live next to, not inside, the bundle directory: the bundle
    // itself keeps files under the same station/poi names.
    const std::string inputs = fresh_dir("extend_inputs");
    const NetworkBundle before = load_bundle(dir);
    const LonLat centre = before.drive->coord(4);

    std::ostringstream stations;
    stations.precision(15);
    stations << "station_id,lon,lat\n7," << centre.lon << "," << centre.lat << "\n7,"
             << centre.lon << "," << centre.lat << "\n";
    write_file(inputs + "/stations.csv", stations.str());

    std::string out;
    int code = run_cli({"net", "stations", inputs + "/stations.csv", "--bundle", dir}, &out);
    CHECK(code == 0);
    CHECK(out.find("kept 1 of 2 stations") != std::string::npos);

    std::ostringstream pois;
    pois.precision(15);
    pois << "lon,lat\n";
    for (int i = 0; i < 3; ++i) pois << centre.lon << "," << centre.lat << "\n";
    pois << "99,99\n";  // outside the bounds, skipped
    write_file(inputs + "/pois.csv", pois.str());

    code = run_cli({"net", "pois", inputs + "/pois.csv", "--cell-size", "200", "--bundle", dir},
                   &out);
    CHECK(code == 0);
    CHECK(out.find("indexed 3 points") != std::string::npos);
    CHECK(out.find("(1 outside the network bounds)") != std::string::npos);

    const NetworkBundle after = load_bundle(dir);
    CHECK(after.stations.size() == 1);
    REQUIRE(after.pois.has_value());
    CHECK(after.pois->total() == 3);
}

TEST_CASE("generate writes instance files and reruns are byte-identical") {
    const std::string bundle = make_grid_bundle("generate");
    const std::string cfg = bundle + "/config.json";
    write_file(cfg, kGenerateConfig);

    const std::string out_a = fresh_dir("generate_a");
    const std::string out_b = fresh_dir("generate_b");

    std::string text_a, text_b;
    CHECK(run_cli({"generate", cfg, "--bundle", bundle, "--out", out_a}, &text_a) == 0);
    CHECK(run_cli({"generate", cfg, "--bundle", bundle, "--out", out_b}, &text_b) == 0);
    CHECK(text_a == text_b);

    // Per-replica summary with the measured properties.
    CHECK(text_a.find("DARP_12_1: requests=12") != std::string::npos);
    CHECK(text_a.find(" rho=") != std::string::npos);
    CHECK(text_a.find(" urgency=180.00/0.00") != std::string::npos);
    CHECK(text_a.find(" gd=") != std::string::npos);

    for (const char* stem : {"DARP_12_1", "DARP_12_2"}) {
        for (const char* suffix : {".csv", "_tt_matrix.csv", "_locations.graphml", "_meta.json"}) {
            const std::string name = std::string(stem) + suffix;
            CHECK(slurp(out_a + "/" + name) == slurp(out_b + "/" + name));
        }
    }
}

TEST_CASE("generate rejects a config without requests") {
    const std::string bundle = make_grid_bundle("generate_bad");
    const std::string cfg = bundle + "/zero.json";
    write_file(cfg, R"json({"requests": 0})json");
    std::string out, err;
    CHECK(run_cli({"generate", cfg, "--bundle", bundle}, &out, &err) == 1);
    CHECK(err.find("error:") != std::string::npos);
}

TEST_CASE("measure reports dynamism for a bare timestamp table") {
    const std::string dir = fresh_dir("measure");
    const std::string inst = dir + "/inst.csv";
    write_file(inst, "time_stamp\n1\n2\n5\n8\n9\n");

    std::string out, err;
    const int code =
        run_cli({"measure", inst, "--ts-min", "0", "--ts-max", "10"}, &out, &err);
    CHECK(code == 0);
    CHECK(out.find("size: 5\n") != std::string::npos);
    CHECK(out.find("dynamism (rho): 0.75\n") != std::string::npos);

    // Without a planning period the dynamism block is skipped with a note.
    CHECK(run_cli({"measure", inst}, &out, &err) == 0);
    CHECK(out.find("dynamism") == std::string::npos);
    CHECK(err.find("planning period unknown") != std::string::npos);
}

TEST_CASE("measure writes the CSV report when asked") {
    const std::string dir = fresh_dir("measure_csv");
    const std::string inst = dir + "/inst.csv";
    write_file(inst, "time_stamp,latest_departure\n1,4\n2,5\n5,6\n8,11\n9,10\n");

    std::string out;
    const int code = run_cli({"measure", inst, "--ts-min", "0", "--ts-max", "10",
                              "--report-csv", dir + "/report.csv"},
                             &out);
    CHECK(code == 0);
    const std::string report = slurp(dir + "/report.csv");
    CHECK(report.find("key,value\n") == 0);
    CHECK(report.find("rho,0.75") != std::string::npos);
    CHECK(report.find("urgency_mean,") != std::string::npos);
}

TEST_CASE("measure fails on an instance without rows") {
    const std::string dir = fresh_dir("measure_empty");
    const std::string inst = dir + "/empty.csv";
    write_file(inst, "time_stamp\n");
    std::string out, err;
    CHECK(run_cli({"measure", inst}, &out, &err) == 1);
    CHECK(err.find("error:") != std::string::npos);
}

TEST_CASE("similarity of an instance with itself is perfect") {
    const std::string bundle = make_grid_bundle("similarity");
    const std::string inst = bundle + "/a.csv";
    write_file(inst,
               "time_stamp,origin,destination,earliest_departure\n"
               "10,0,8,100\n"
               "400,2,6,500\n");

    std::string out;
    const int code = run_cli({"similarity", inst, inst, "--bundle", bundle}, &out);
    CHECK(code == 0);
    CHECK(out.find("omega: 1.00\n") == 0);
    CHECK(out.find("first,second,xi\n") != std::string::npos);

    // The bundle can also come from the environment.
    setenv("REQGEN_BUNDLE", bundle.c_str(), 1);
    std::string out_env;
    CHECK(run_cli({"similarity", inst, inst}, &out_env) == 0);
    unsetenv("REQGEN_BUNDLE");
    CHECK(out_env == out);
}

TEST_CASE("similarity rejects instances of different size") {
    const std::string bundle = make_grid_bundle("similarity_bad");
    const std::string a = bundle + "/a.csv";
    const std::string b = bundle + "/b.csv";
    write_file(a,
               "time_stamp,origin,destination,earliest_departure\n"
               "10,0,8,100\n");
    write_file(b,
               "time_stamp,origin,destination,earliest_departure\n"
               "10,0,8,100\n"
               "20,1,7,200\n");
    std::string out, err;
    CHECK(run_cli({"similarity", a, b, "--bundle", bundle}, &out, &err) == 1);
    CHECK(err.find("error:") != std::string::npos);
}

TEST_CASE("benchmark without grid flags generates nothing") {
    const std::string bundle = make_grid_bundle("bench_empty");
    const std::string cfg = bundle + "/config.json";
    write_file(cfg, kGenerateConfig);
    std::string out;
    CHECK(run_cli({"benchmark", cfg, "--bundle", bundle}, &out) == 0);
    CHECK(out == "nothing to generate (no grid flags given)\n");
}

TEST_CASE("benchmark expands the grid and names groups by their properties") {
    const std::string bundle = make_grid_bundle("bench_grid");
    const std::string cfg = bundle + "/config.json";
    write_file(cfg, kGenerateConfig);
    const std::string out_dir = fresh_dir("bench_out");

    std::string out;
    const int code = run_cli({"benchmark", cfg, "--bundle", bundle, "--out", out_dir,
                              "--sizes", "8", "--rhos", "0.5"},
                             &out);
    CHECK(code == 0);
    CHECK(out.find("cligrid_DARP_8_0_600_0.5_na_na_any: 2 replica(s)\n") != std::string::npos);
    CHECK(out.find("wrote 1 group(s), 2 instance(s)") != std::string::npos);
    CHECK(std::filesystem::exists(out_dir + "/cligrid_DARP_8_0_600_0.5_na_na_any_1.csv"));
    CHECK(std::filesystem::exists(out_dir + "/cligrid_DARP_8_0_600_0.5_na_na_any_2_meta.json"));

    // A urgency grid needs a reaction_time attribute in the template.
    std::string err;
    CHECK(run_cli({"benchmark", cfg, "--bundle", bundle, "--out", out_dir,
                   "--urgency-means", "120"},
                  &out, &err) == 1);
    CHECK(err.find("reaction_time") != std::string::npos);
}

TEST_CASE("bad command lines exit nonzero") {
    std::string out, err;
    CHECK(run_cli({"no_such_command"}, &out, &err) != 0);
    CHECK(run_cli({"net", "synth", "--rows", "3"}, &out, &err) != 0);  // missing required
    CHECK(run_cli({}, &out, &err) != 0);                               // subcommand required
}
