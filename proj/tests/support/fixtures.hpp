#pragma once

#include "insitu/platform.hpp"
#include "insitu/workflow.hpp"

#include <string>

namespace fixtures {

/// One node, one flat backbone, `cores` cores of speed 1.
insitu::Platform single_node(int cores = 64);

/// `nodes` hosts on a flat 1 GB/s, 10 us backbone.
insitu::Platform flat(int nodes, int cores = 8);

/// Star cluster with 10 Gb/s access links, a 400 Gb/s backbone and 125 GB/s loopbacks.
insitu::Platform cluster(int nodes, int cores = 32);

/// One node whose three declared links are L0 (1 GB/s, 1 us), L1 (500 MB/s, 2 us) and L2 (2 GB/s, 0 s).
insitu::Platform three_links();

/// Mapping that puts `count` entities on each listed node.
insitu::Mapping even(const std::vector<insitu::NodeId>& nodes, int count);

std::string source_path(const std::string& relative);

} // namespace fixtures
