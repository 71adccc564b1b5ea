#pragma once

#include <cstdint>
#include <vector>

#include "spectralcf/ingest.hpp"

namespace spectralcf {

// Planted two-block implicit dataset. The first half of the users and the
// first half of the items form community 0, the rest community 1. Each
// (user, item) pair is liked with probability `within` inside a community and
// `across` between communities. External ids are the decimal
// row / column numbers, so dense ids follow the same order.
struct CommunityDataset {
  InteractionSet data;
  std::vector<int> user_community;
  std::vector<int> item_community;
};

CommunityDataset two_community_dataset(Index n_users, Index n_items, double within, double across,
                                       std::uint64_t seed);

// The seven-edge toy graph with users u1..u3 and items i1..i4:
// u1-i1, u2-i1, u2-i2, u2-i4, u3-i1, u3-i3, u3-i4.
InteractionSet toy_bipartite_graph();

}  // namespace spectralcf
