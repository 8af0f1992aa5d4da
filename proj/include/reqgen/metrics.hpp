#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace reqgen {

// --- dynamism -------------------------------------------------------------

struct DynamismReport {
    double theta = 0.0;              // perfect interarrival time T_e / |R_d|
    std::vector<double> deltas;      // interarrival times between dynamic requests
    std::vector<double> sigmas;      // per-interarrival deviation from the even case
    double lambda = 0.0;             // sum of sigmas
    std::vector<double> sigma_bars;  // per-interarrival normalization terms
    double eta = 0.0;                // sum of sigma_bars
    double rho = 0.0;                // 1 - lambda/eta, in [0, 1]
    std::size_t dynamic_count = 0;   // |R_d|
};

// Timestamps must be sorted non-decreasing. Requests with ts <= ts_min are
// static and ignored; at least two dynamic requests are required.
DynamismReport measure_dynamism(const std::vector<double>& timestamps, double ts_min,
                                double ts_max);

// --- urgency ---------------------------------------------------------------

struct UrgencyReport {
    std::vector<double> values;  // reaction times of the dynamic requests
    double mean = 0.0;
    double std_dev = 0.0;  // population standard deviation
};

UrgencyReport measure_urgency(const std::vector<double>& reaction_times);

// Reaction time of a dynamic request is latest_departure - time_stamp;
// requests with ts <= ts_min are static and ignored.
UrgencyReport measure_urgency(const std::vector<double>& timestamps,
                              const std::vector<double>& latest_departures, double ts_min);

// --- geographic dispersion ---------------------------------------------------

struct DispersionRequest {
    std::size_t origin = 0;       // location ids fed to the travel callback
    std::size_t destination = 0;
    double earliest_departure = 0.0;
    double latest_arrival = 0.0;
    // When both station sets are non-empty the direct travel time is the
    // mean over all pickup/dropoff station pairs instead of origin to
    // destination.
    std::vector<std::size_t> pickup_stations;
    std::vector<std::size_t> dropoff_stations;
};

struct DispersionReport {
    double mu = 0.0;     // mean direct travel time
    double omega = 0.0;  // mean nearest-neighbor detour estimate
    double gd = 0.0;     // mu + omega
    double th_s = 0.0;
    std::size_t n = 0;
    // Per request: candidate neighbor locations whose time windows can
    // coincide, the chosen nearest subsets, and their mean travel times.
    std::vector<std::vector<std::size_t>> l_origin;
    std::vector<std::vector<std::size_t>> l_destination;
    std::vector<std::vector<std::size_t>> n_origin;
    std::vector<std::vector<std::size_t>> n_destination;
    std::vector<double> tn_origin;
    std::vector<double> tn_destination;
};

using TravelFn = std::function<double(std::size_t, std::size_t)>;

DispersionReport geographic_dispersion(const std::vector<DispersionRequest>& requests,
                                       const TravelFn& travel, double th_s, std::size_t n);

// --- combined report ----------------------------------------------------------

struct InstanceReport {
    std::size_t size = 0;  // |R|
    std::optional<DynamismReport> dynamism;
    std::optional<UrgencyReport> urgency;
    std::optional<DispersionReport> dispersion;
};

// Fixed-point display with two decimals, truncated toward zero
// (0.39506 -> "0.39", 1.875 -> "1.87").
std::string display_2dp(double value);

// Flat key,value CSV (full precision) and a human-readable summary
// (2-decimal display).
std::string report_csv(const InstanceReport& report);
std::string report_text(const InstanceReport& report);

}  // namespace reqgen
