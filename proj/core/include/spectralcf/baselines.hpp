#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "spectralcf/evaluation.hpp"
#include "spectralcf/graph.hpp"
#include "spectralcf/ingest.hpp"
#include "spectralcf/model.hpp"
#include "spectralcf/training.hpp"

namespace spectralcf {

// --- ItemKNN -------------------------------------------------------------------

struct Neighbor {
  Index item = 0;
  double similarity = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Cosine similarity between the items' user-indicator columns. The matrix is
// exactly symmetric with an empty diagonal; `neighbors[i]` holds i's k most
// similar items, most similar first, ties to the lower index.
struct ItemKnnModel {
  SparseMatrix similarity;
  Index k_neighbors = 50;
  std::vector<std::vector<Neighbor>> neighbors;
};

ItemKnnModel fit_itemknn(const InteractionSet& train, Index k_neighbors = 50);

// Rebuilds an ItemKNN model from stored neighbor lists (similarity matrix left empty).
ItemKnnModel itemknn_from_neighbors(Index k_neighbors, std::vector<std::vector<Neighbor>> neighbors);

// Sum over the user's items j of sim(i, j), counting only j in i's neighbor list.
double score_itemknn(const ItemKnnModel& model, const InteractionSet& train, Index user, Index item);

Scorer itemknn_scorer(const ItemKnnModel& model, const InteractionSet& train);

// --- BPR matrix factorization --------------------------------------------------

struct BprMfConfig {
  Index dim = 16;
  std::uint64_t seed = 0;
  double init_mean = 0.01;
  double init_stddev = 0.02;
};

struct BprMfModel {
  Matrix user_factors;
  Matrix item_factors;

  Index dim() const { return user_factors.cols(); }
  FactorTable factors() const { return {user_factors, item_factors}; }

  friend bool operator==(const BprMfModel&, const BprMfModel&) = default;
};

struct BprMfTrainResult {
  BprMfModel model;
  std::vector<double> loss_history;
};

// Same loss, sampler and optimizer as SpectralCF training, applied to the
// factor tables directly.
BprMfTrainResult fit_bpr_mf(const InteractionSet& train, const BprMfConfig& config, const TrainConfig& train_config,
                            const EpochCallback& on_epoch = {});

// --- popularity ----------------------------------------------------------------

// Non-personalized reference: every user gets items by training frequency.
struct PopularityModel {
  std::vector<double> counts;
};

PopularityModel fit_popularity(const InteractionSet& train);
Scorer popularity_scorer(const PopularityModel& model);

}  // namespace spectralcf
