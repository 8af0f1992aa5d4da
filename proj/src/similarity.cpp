#include "reqgen/similarity.hpp"

#include <cmath>
#include <limits>

#include "reqgen/errors.hpp"

namespace reqgen {

namespace {

void check_thresholds(const SimilarityThresholds& th) {
    if (!(th.th_tt > 0.0) || !(th.th_ts > 0.0) || !(th.th_e > 0.0))
        fail(Errc::invalid_params, "similarity thresholds must be positive");
}

}  // namespace

double pair_similarity(const SimilarityRequest& a, const SimilarityRequest& b,
                       const SimilarityThresholds& th, const TravelFn& travel) {
    check_thresholds(th);
    const double phi = travel(a.origin, b.origin) + travel(a.destination, b.destination);
    const double tau = std::abs(a.time_stamp - b.time_stamp);
    const double theta = std::abs(a.earliest_departure - b.earliest_departure);
    if (!(phi < th.th_tt)) return 0.0;
    const bool ts_close = tau < th.th_ts;
    const bool ed_close = theta < th.th_e;
    if (ts_close && ed_close) return 1.0;
    if (ts_close != ed_close) return 0.75;
    return 0.5;
}

std::vector<std::size_t> min_cost_assignment(const std::vector<std::vector<double>>& cost) {
    const std::size_t n = cost.size();
    for (const auto& row : cost)
        if (row.size() != n) fail(Errc::size_mismatch, "assignment matrix must be square");
    if (n == 0) return {};
    constexpr double kInf = std::numeric_limits<double>::infinity();

    // Shortest-augmenting-path assignment with dual potentials, O(n^3).
    // Rows and columns are 1-based internally; p[j] is the row matched to
    // column j, column 0 stages the row being inserted.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, kInf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = p[j0];
            double delta = kInf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> row_to_col(n, 0);
    for (std::size_t j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

SimilarityResult instance_similarity(const std::vector<SimilarityRequest>& first,
                                     const std::vector<SimilarityRequest>& second,
                                     const SimilarityThresholds& th, const TravelFn& travel) {
    check_thresholds(th);
    if (first.size() != second.size())
        fail(Errc::size_mismatch, "instances must have the same number of requests");
    if (first.empty()) fail(Errc::empty_instance, "no requests to compare");

    const std::size_t n = first.size();
    SimilarityResult res;
    res.xi.assign(n, std::vector<double>(n, 0.0));
    std::vector<std::vector<double>> cost(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            res.xi[i][j] = pair_similarity(first[i], second[j], th, travel);
            cost[i][j] = -res.xi[i][j];  // maximize level == minimize its negation
        }
    }
    res.matching = min_cost_assignment(cost);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += res.xi[i][res.matching[i]];
    res.omega = sum / static_cast<double>(n);
    return res;
}

std::vector<std::size_t> diversity_filter(
    const std::vector<std::vector<SimilarityRequest>>& instances, const SimilarityThresholds& th,
    const TravelFn& travel, double omega_max) {
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        bool distinct = true;
        for (std::size_t k : kept) {
            const SimilarityResult res =
                instance_similarity(instances[k], instances[i], th, travel);
            if (res.omega > omega_max) {
                distinct = false;
                break;
            }
        }
        if (distinct) kept.push_back(i);
    }
    return kept;
}

}  // namespace reqgen
