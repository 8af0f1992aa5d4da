#pragma once

namespace reqgen {

// Mean Earth radius in metres, shared by every great-circle computation.
inline constexpr double kEarthRadiusM = 6371000.0;

struct LonLat {
    double lon = 0.0;
    double lat = 0.0;
};

// Great-circle distance in metres (haversine).
double haversine_m(LonLat a, LonLat b);

// Point reached from `from` travelling `distance_m` metres along the initial
// bearing (radians, clockwise from north) on the sphere.
LonLat destination_point(LonLat from, double distance_m, double bearing_rad);

// Metres per degree of longitude/latitude at the given latitude, for
// converting small metric offsets to coordinate offsets.
double metres_per_deg_lon(double lat_deg);
double metres_per_deg_lat();

}  // namespace reqgen
