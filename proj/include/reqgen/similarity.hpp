#pragma once

#include <cstddef>
#include <vector>

#include "reqgen/metrics.hpp"  // TravelFn

namespace reqgen {

struct SimilarityThresholds {
    double th_tt = 600.0;  // combined origin+destination travel-time proximity
    double th_ts = 600.0;  // time-stamp proximity
    double th_e = 600.0;   // earliest-departure proximity
};

struct SimilarityRequest {
    std::size_t origin = 0;  // location ids fed to the travel callback
    std::size_t destination = 0;
    double time_stamp = 0.0;
    double earliest_departure = 0.0;
};

// Similarity level of one request pair: 1.0 when locations, time stamps and
// earliest departures are all proximate; 0.75 when locations plus exactly
// one of the two time criteria; 0.5 on locations alone; else 0.
double pair_similarity(const SimilarityRequest& a, const SimilarityRequest& b,
                       const SimilarityThresholds& th, const TravelFn& travel);

struct SimilarityResult {
    std::vector<std::vector<double>> xi;  // pairwise levels, xi[i][j]
    std::vector<std::size_t> matching;    // matching[i] = index in the second instance
    double omega = 0.0;                   // average matched level, in [0, 1]
};

// Instances must have equal size; the matching maximizes total level over
// all one-to-one pairings (assignment problem).
SimilarityResult instance_similarity(const std::vector<SimilarityRequest>& first,
                                     const std::vector<SimilarityRequest>& second,
                                     const SimilarityThresholds& th, const TravelFn& travel);

// Minimum-cost assignment on a square matrix; returns row -> column.
std::vector<std::size_t> min_cost_assignment(const std::vector<std::vector<double>>& cost);

// Greedy selection in input order: an instance is kept only if its omega
// against every previously kept instance stays within omega_max.
std::vector<std::size_t> diversity_filter(
    const std::vector<std::vector<SimilarityRequest>>& instances, const SimilarityThresholds& th,
    const TravelFn& travel, double omega_max);

}  // namespace reqgen
