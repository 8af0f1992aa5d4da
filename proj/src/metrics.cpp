#include "reqgen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "reqgen/csv.hpp"
#include "reqgen/errors.hpp"

namespace reqgen {

DynamismReport measure_dynamism(const std::vector<double>& timestamps, double ts_min,
                                double ts_max) {
    if (!(ts_min < ts_max))
        fail(Errc::out_of_bounds, "planning period must have positive length");
    for (std::size_t i = 1; i < timestamps.size(); ++i)
        if (timestamps[i] < timestamps[i - 1])
            fail(Errc::unsorted_input, "timestamps must be sorted non-decreasing");

    DynamismReport rep;
    std::vector<double> dynamic;
    for (double ts : timestamps) {
        if (ts <= ts_min) continue;  // static request
        if (ts > ts_max)
            fail(Errc::out_of_bounds, "timestamp lies after the planning period");
        dynamic.push_back(ts);
    }
    rep.dynamic_count = dynamic.size();
    if (rep.dynamic_count < 2)
        fail(Errc::too_few_requests, "dynamism needs at least two dynamic requests");

    rep.theta = (ts_max - ts_min) / static_cast<double>(rep.dynamic_count);
    for (std::size_t i = 1; i < dynamic.size(); ++i)
        rep.deltas.push_back(dynamic[i] - dynamic[i - 1]);

    double prev_sigma = 0.0;
    for (std::size_t k = 0; k < rep.deltas.size(); ++k) {
        const double delta = rep.deltas[k];
        const bool burst = delta < rep.theta;
        // Bursts are penalized by carrying forward a proportion of the
        // previous deviation.
        const double carry =
            (k > 0 && burst) ? (rep.theta - delta) / rep.theta * prev_sigma : 0.0;
        const double sigma = burst ? (rep.theta - delta) + carry : 0.0;
        rep.sigmas.push_back(sigma);
        rep.sigma_bars.push_back(rep.theta + carry);
        prev_sigma = sigma;
    }
    rep.lambda = std::accumulate(rep.sigmas.begin(), rep.sigmas.end(), 0.0);
    rep.eta = std::accumulate(rep.sigma_bars.begin(), rep.sigma_bars.end(), 0.0);
    rep.rho = rep.eta > 0.0 ? 1.0 - rep.lambda / rep.eta : 1.0;
    rep.rho = std::clamp(rep.rho, 0.0, 1.0);
    return rep;
}

UrgencyReport measure_urgency(const std::vector<double>& reaction_times) {
    if (reaction_times.empty())
        fail(Errc::too_few_requests, "urgency needs at least one dynamic request");
    UrgencyReport rep;
    rep.values = reaction_times;
    for (double f : rep.values)
        if (f < 0.0) fail(Errc::negative_reaction_time, "reaction time below zero");
    rep.mean = std::accumulate(rep.values.begin(), rep.values.end(), 0.0) /
               static_cast<double>(rep.values.size());
    double ss = 0.0;
    for (double f : rep.values) ss += (f - rep.mean) * (f - rep.mean);
    rep.std_dev = std::sqrt(ss / static_cast<double>(rep.values.size()));
    return rep;
}

UrgencyReport measure_urgency(const std::vector<double>& timestamps,
                              const std::vector<double>& latest_departures, double ts_min) {
    if (timestamps.size() != latest_departures.size())
        fail(Errc::length_mismatch, "timestamp and latest-departure counts differ");
    std::vector<double> reactions;
    for (std::size_t i = 0; i < timestamps.size(); ++i) {
        if (timestamps[i] <= ts_min) continue;  // static request
        reactions.push_back(latest_departures[i] - timestamps[i]);
    }
    return measure_urgency(reactions);
}

namespace {

// One endpoint of another request, a candidate neighbor: `window` is the
// time-window side used by the proximity test (earliest departure for
// origins, latest arrival for destinations).
struct Candidate {
    std::size_t loc;
    double window;
};

std::vector<std::size_t> nearest(const std::vector<Candidate>& pool, double own_window,
                                 double th_s, std::size_t from, const TravelFn& travel,
                                 std::size_t n, std::vector<std::size_t>* l_set) {
    std::vector<std::size_t> eligible;
    for (const Candidate& c : pool)
        if (std::abs(own_window - c.window) < th_s) eligible.push_back(c.loc);
    if (l_set) *l_set = eligible;
    // Stable sort keeps declaration order between equally distant locations.
    std::stable_sort(eligible.begin(), eligible.end(),
                     [&](std::size_t a, std::size_t b) { return travel(from, a) < travel(from, b); });
    if (eligible.size() > n) eligible.resize(n);
    return eligible;
}

double mean_travel(std::size_t from, const std::vector<std::size_t>& to, const TravelFn& travel) {
    if (to.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t v : to) sum += travel(from, v);
    return sum / static_cast<double>(to.size());
}

}  // namespace

DispersionReport geographic_dispersion(const std::vector<DispersionRequest>& requests,
                                       const TravelFn& travel, double th_s, std::size_t n) {
    if (requests.empty()) fail(Errc::empty_instance, "no requests to measure");
    DispersionReport rep;
    rep.th_s = th_s;
    rep.n = n;

    double direct_sum = 0.0;
    for (const DispersionRequest& r : requests) {
        if (!r.pickup_stations.empty() && !r.dropoff_stations.empty()) {
            double sum = 0.0;
            for (std::size_t s : r.pickup_stations)
                for (std::size_t t : r.dropoff_stations) sum += travel(s, t);
            direct_sum += sum / static_cast<double>(r.pickup_stations.size() *
                                                    r.dropoff_stations.size());
        } else {
            direct_sum += travel(r.origin, r.destination);
        }
    }
    rep.mu = direct_sum / static_cast<double>(requests.size());

    double tn_sum = 0.0;
    for (std::size_t i = 0; i < requests.size(); ++i) {
        const DispersionRequest& ri = requests[i];
        // Candidates in declaration order: all other origins, then all other
        // destinations.
        std::vector<Candidate> pool;
        for (std::size_t j = 0; j < requests.size(); ++j)
            if (j != i) pool.push_back({requests[j].origin, requests[j].earliest_departure});
        for (std::size_t j = 0; j < requests.size(); ++j)
            if (j != i) pool.push_back({requests[j].destination, requests[j].latest_arrival});

        std::vector<std::size_t> l_o, l_d;
        const auto n_o =
            nearest(pool, ri.earliest_departure, th_s, ri.origin, travel, n, &l_o);
        const auto n_d = nearest(pool, ri.latest_arrival, th_s, ri.destination, travel, n, &l_d);
        const double tn_o = mean_travel(ri.origin, n_o, travel);
        const double tn_d = mean_travel(ri.destination, n_d, travel);
        tn_sum += tn_o + tn_d;
        rep.l_origin.push_back(std::move(l_o));
        rep.l_destination.push_back(std::move(l_d));
        rep.n_origin.push_back(n_o);
        rep.n_destination.push_back(n_d);
        rep.tn_origin.push_back(tn_o);
        rep.tn_destination.push_back(tn_d);
    }
    rep.omega = tn_sum / (2.0 * static_cast<double>(requests.size()));
    rep.gd = rep.mu + rep.omega;
    return rep;
}

std::string display_2dp(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    // Print with enough spare digits that a value mathematically on a
    // hundredth boundary lands on it, then cut after two decimals: this
    // truncates toward zero (1.875 -> 1.87) without the usual binary
    // round-off traps (0.29 stays 0.29).
    char buf[512];
    std::snprintf(buf, sizeof(buf), "%.9f", value);
    const std::string s(buf);
    const std::size_t dot = s.find('.');
    return s.substr(0, dot + 3);
}

namespace {

void put(std::vector<csv::Row>& rows, const std::string& key, double value) {
    rows.push_back({key, csv::format_double(value)});
}

}  // namespace

std::string report_csv(const InstanceReport& report) {
    std::vector<csv::Row> rows;
    rows.push_back({"key", "value"});
    rows.push_back({"size", std::to_string(report.size)});
    if (report.dynamism) {
        const DynamismReport& d = *report.dynamism;
        rows.push_back({"dynamic_count", std::to_string(d.dynamic_count)});
        put(rows, "theta", d.theta);
        put(rows, "lambda", d.lambda);
        put(rows, "eta", d.eta);
        put(rows, "rho", d.rho);
    }
    if (report.urgency) {
        put(rows, "urgency_mean", report.urgency->mean);
        put(rows, "urgency_std", report.urgency->std_dev);
    }
    if (report.dispersion) {
        put(rows, "mu", report.dispersion->mu);
        put(rows, "omega", report.dispersion->omega);
        put(rows, "gd", report.dispersion->gd);
    }
    std::string out;
    for (const csv::Row& row : rows) out += csv::join_row(row) + "\n";
    return out;
}

std::string report_text(const InstanceReport& report) {
    std::ostringstream out;
    out << "size: " << report.size << "\n";
    if (report.dynamism) {
        const DynamismReport& d = *report.dynamism;
        out << "dynamic requests: " << d.dynamic_count << "\n";
        out << "theta: " << display_2dp(d.theta) << "\n";
        out << "lambda: " << display_2dp(d.lambda) << "\n";
        out << "eta: " << display_2dp(d.eta) << "\n";
        out << "dynamism (rho): " << display_2dp(d.rho) << "\n";
    }
    if (report.urgency) {
        out << "urgency mean: " << display_2dp(report.urgency->mean) << "\n";
        out << "urgency std: " << display_2dp(report.urgency->std_dev) << "\n";
    }
    if (report.dispersion) {
        out << "direct travel time mean (mu): " << display_2dp(report.dispersion->mu) << "\n";
        out << "neighbor detour mean (omega): " << display_2dp(report.dispersion->omega) << "\n";
        out << "geographic dispersion (gd): " << display_2dp(report.dispersion->gd) << "\n";
    }
    return out.str();
}

}  // namespace reqgen
