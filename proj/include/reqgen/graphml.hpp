#pragma once

#include <string>
#include <tuple>
#include <vector>

#include "reqgen/network.hpp"

namespace reqgen {

// Reads a GraphML road graph with the attribute names OSMnx emits: node data
// x (longitude) and y (latitude), edge data length (metres) and maxspeed
// (metres per second; missing or non-numeric falls back to the kind default).
// Parallel edges and self-loops are kept. Throws Errc::parse_error on
// malformed XML and Errc::missing_attribute when a node lacks x/y or an edge
// lacks length.
RoadNetwork load_network_graphml(const std::string& path, NetworkKind kind);

// One output location: an id plus its coordinates.
struct LocationNode {
    std::string id;
    LonLat pos;
};

// Writes a GraphML graph of locations with a travel_time attribute per arc.
// Arcs are (from index, to index, travel time seconds) into `nodes`.
void write_locations_graphml(const std::string& path, const std::vector<LocationNode>& nodes,
                             const std::vector<std::tuple<std::size_t, std::size_t, double>>& arcs);

}  // namespace reqgen
