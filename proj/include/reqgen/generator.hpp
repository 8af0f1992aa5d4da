#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "reqgen/config.hpp"
#include "reqgen/expr.hpp"
#include "reqgen/network.hpp"
#include "reqgen/sampling.hpp"

namespace reqgen {

struct RequestRecord {
    std::vector<std::pair<std::string, Value>> values;  // attribute declaration order

    const Value* find(const std::string& name) const;
};

struct Instance {
    std::string name;  // filename stem, replica index included
    std::uint64_t seed = 0;
    std::int64_t replica = 1;  // 1-based
    std::string problem;
    double max_speed_factor = 1.0;
    std::optional<double> ts_min, ts_max;  // planning period when declared
    bool dynamism_target_reached = true;

    std::vector<std::string> csv_columns;  // printable attributes, declaration order
    std::vector<RequestRecord> requests;

    // Travel-time matrix over the configured location collections; empty when
    // the configuration declares none.
    std::vector<std::string> matrix_ids;
    std::vector<LonLat> matrix_coords;
    std::vector<std::vector<double>> matrix;  // seconds, kUnreachable if disconnected
};

// Timestamps with a dynamism level near target_rho inside [ts_min, ts_max],
// sorted ascending, all strictly after ts_min. Starts from perfect spacing
// and applies burst moves (pull a random timestamp toward its predecessor)
// while they close the gap to the target; stops within 0.02 or after 10*n
// moves. integer_values rounds to whole seconds. `reached` (optional)
// reports whether the final level lies within 0.02 of the target.
std::vector<double> assign_time_stamps(std::size_t n, double ts_min, double ts_max,
                                       double target_rho, bool integer_values, Rng& rng,
                                       bool* reached = nullptr);

// One probability-of-interest placement: the first location falls uniformly
// inside a cell chosen proportionally to its POI count (snapped to the
// nearest node); the second lies at a pdf-drawn distance along a uniform
// bearing, redrawn while it leaves the network bounds (fresh distance after
// 20 failed bearings, failure after 200 redraws). zone_is_first tells
// whether the in-zone location takes the first attribute of the configured
// pair.
struct PoiPlacement {
    ExprLocation in_zone;
    ExprLocation offset;
    bool zone_is_first = true;
};

PoiPlacement apply_poi_method(const PdfSpec& distance_pdf, const PoiIndex& pois,
                              const RoadNetwork& net, Rng& rng);

class Generator {
  public:
    Generator(ValidatedConfig vcfg, const NetworkBundle& bundle);

    Instance generate_replica(std::int64_t replica_index);  // 1-based
    std::vector<Instance> generate_all();

    // Shortest-path drive travel time (speed factor applied), memoized per
    // source node.
    double direct_travel_time(const ExprLocation& a, const ExprLocation& b);
    // Station ids reachable on foot strictly under max_walking seconds;
    // max_walking and walk_speed come from the record environment.
    ValueSet stations_near(const ExprLocation& loc, const Env& env);

    const RoadNetwork& drive() const { return drive_; }

  private:
    struct ReplicaSetup {
        Env base_env;  // parameters usable inside expressions
        std::map<std::string, std::vector<ExprLocation>> location_params;
        std::map<std::string, std::vector<Zone>> zone_params;
        std::vector<double> time_stamp_schedule;  // with a dynamism target
        bool schedule_reached = true;
    };

    ReplicaSetup resolve_parameters(Rng& rng);
    ExprLocation snap(LonLat p) const;
    ExprLocation uniform_node(Rng& rng) const;
    Value sample_attribute(std::size_t attr_index, const ReplicaSetup& setup, const Env& env,
                           std::size_t request_index, Rng& rng,
                           std::optional<PoiPlacement>& poi);
    RequestRecord generate_request(const ReplicaSetup& setup, std::size_t request_index,
                                   Rng& rng);
    void collect_matrix(Instance& out, const ReplicaSetup& setup);
    const std::vector<double>& travel_row(std::size_t source_index);

    ValidatedConfig vcfg_;
    RoadNetwork drive_;
    std::optional<RoadNetwork> walk_;
    std::vector<Station> stations_;
    std::optional<PoiIndex> pois_;
    std::unordered_map<std::size_t, std::vector<double>> row_cache_;
    // Indices of the attribute pair placed by the mobility method, -1 if none.
    std::ptrdiff_t poi_first_ = -1, poi_second_ = -1;
};

// Joined item values, whitespace stripped, plus the replica index
// ("Chicago,Illinois_DARP_500_1").
std::string instance_filename_stem(const InstanceConfig& cfg, std::int64_t replica);

// Writes <stem>.csv plus, when a matrix is present, <stem>_tt_matrix.csv and
// <stem>_locations.graphml, and always a <stem>_meta.json sidecar.
void write_instance(const Instance& instance, const std::string& out_dir);

}  // namespace reqgen
