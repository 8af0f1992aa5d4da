#include "reqgen/geodesy.hpp"

#include <cmath>

namespace reqgen {

namespace {
constexpr double kDeg2Rad = M_PI / 180.0;
constexpr double kRad2Deg = 180.0 / M_PI;
}  // namespace

double haversine_m(LonLat a, LonLat b) {
    const double phi1 = a.lat * kDeg2Rad;
    const double phi2 = b.lat * kDeg2Rad;
    const double dphi = (b.lat - a.lat) * kDeg2Rad;
    const double dlam = (b.lon - a.lon) * kDeg2Rad;
    const double s1 = std::sin(dphi / 2.0);
    const double s2 = std::sin(dlam / 2.0);
    const double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
    return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

LonLat destination_point(LonLat from, double distance_m, double bearing_rad) {
    const double delta = distance_m / kEarthRadiusM;
    const double phi1 = from.lat * kDeg2Rad;
    const double lam1 = from.lon * kDeg2Rad;
    const double sin_phi2 = std::sin(phi1) * std::cos(delta) +
                            std::cos(phi1) * std::sin(delta) * std::cos(bearing_rad);
    const double phi2 = std::asin(std::max(-1.0, std::min(1.0, sin_phi2)));
    const double y = std::sin(bearing_rad) * std::sin(delta) * std::cos(phi1);
    const double x = std::cos(delta) - std::sin(phi1) * sin_phi2;
    const double lam2 = lam1 + std::atan2(y, x);
    LonLat out;
    out.lat = phi2 * kRad2Deg;
    // Normalise longitude to [-180, 180).
    double lon = lam2 * kRad2Deg;
    while (lon >= 180.0) lon -= 360.0;
    while (lon < -180.0) lon += 360.0;
    out.lon = lon;
    return out;
}

double metres_per_deg_lat() { return kEarthRadiusM * kDeg2Rad; }

double metres_per_deg_lon(double lat_deg) {
    return kEarthRadiusM * kDeg2Rad * std::cos(lat_deg * kDeg2Rad);
}

}  // namespace reqgen
