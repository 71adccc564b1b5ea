#include "spectralcf/synthetic.hpp"

#include <random>
#include <string>

namespace spectralcf {

CommunityDataset two_community_dataset(Index n_users, Index n_items, double within, double across,
                                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  CommunityDataset out;
  std::vector<RawInteraction> raws;
  for (Index u = 0; u < n_users; ++u) {
    const int cu = u < n_users / 2 ? 0 : 1;
    for (Index i = 0; i < n_items; ++i) {
      const int ci = i < n_items / 2 ? 0 : 1;
      if (coin(rng) < (cu == ci ? within : across)) {
        raws.push_back({std::to_string(u), std::to_string(i), std::nullopt, std::nullopt});
      }
    }
  }
  out.data = to_implicit(raws, 1);
  // Recover communities from the surviving ids.
  for (const auto& id : out.data.user_ids()) {
    out.user_community.push_back(std::stoll(id) < n_users / 2 ? 0 : 1);
  }
  for (const auto& id : out.data.item_ids()) {
    out.item_community.push_back(std::stoll(id) < n_items / 2 ? 0 : 1);
  }
  return out;
}

InteractionSet toy_bipartite_graph() {
  const std::vector<std::pair<const char*, const char*>> edges = {
      {"u1", "i1"}, {"u2", "i1"}, {"u2", "i2"}, {"u2", "i4"}, {"u3", "i1"}, {"u3", "i3"}, {"u3", "i4"}};
  std::vector<RawInteraction> raws;
  for (const auto& [u, i] : edges) raws.push_back({u, i, std::nullopt, std::nullopt});
  return to_implicit(raws, 1);
}

}  // namespace spectralcf
