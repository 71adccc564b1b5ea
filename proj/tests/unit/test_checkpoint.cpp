#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "spectralcf/checkpoint.hpp"
#include "spectralcf/synthetic.hpp"

using namespace spectralcf;

namespace {

std::string serialize(const Checkpoint& c) {
  std::ostringstream out;
  write_checkpoint(out, c);
  return out.str();
}

Checkpoint deserialize(const std::string& bytes) {
  std::istringstream in(bytes);
  return read_checkpoint(in);
}

SpectralCfCheckpoint trained_spectral(std::uint64_t seed) {
  const auto data = toy_bipartite_graph();
  ModelConfig mc;
  mc.input_dim = 3;
  mc.filters = 2;
  mc.seed = seed;
  TrainConfig tc;
  tc.batch_size = 8;
  tc.epochs = 20;
  tc.seed = seed;
  const auto result = train(data, closed_form_kernel(build_graph(data)), mc, tc);
  return {mc, {tc.rms_decay, tc.rms_epsilon}, result.params};
}

}  // namespace

TEST(Checkpoint, SpectralRoundTripBitExact) {
  const auto ckpt = trained_spectral(3);
  const auto bytes = serialize(ckpt);
  EXPECT_EQ(bytes.substr(0, 4), "SPCK");
  const auto back = deserialize(bytes);
  ASSERT_EQ(model_type(back), ModelType::spectralcf);
  EXPECT_EQ(std::get<SpectralCfCheckpoint>(back), ckpt);
  EXPECT_EQ(serialize(back), bytes);
  EXPECT_EQ(checkpoint_dimensions(back), (std::pair<Index, Index>{3, 4}));
}

TEST(Checkpoint, SameSeedTrainingGivesIdenticalBytes) {
  EXPECT_EQ(serialize(trained_spectral(5)), serialize(trained_spectral(5)));
  EXPECT_NE(serialize(trained_spectral(5)), serialize(trained_spectral(6)));
}

TEST(Checkpoint, ScoresSurviveRoundTrip) {
  const auto data = toy_bipartite_graph();
  const auto kernel = closed_form_kernel(build_graph(data));
  const auto ckpt = trained_spectral(8);
  const auto back = std::get<SpectralCfCheckpoint>(deserialize(serialize(ckpt)));
  const auto a = forward(ckpt.params, kernel, ckpt.config).factors;
  const auto b = forward(back.params, kernel, back.config).factors;
  for (Index u = 0; u < 3; ++u) {
    for (Index i = 0; i < 4; ++i) EXPECT_EQ(score(a, u, i), score(b, u, i));
  }
}

TEST(Checkpoint, BprAndItemKnnRoundTrip) {
  const auto ds = two_community_dataset(20, 15, 0.3, 0.05, 1);
  BprMfConfig bc;
  bc.dim = 4;
  TrainConfig tc;
  tc.batch_size = 32;
  tc.epochs = 5;
  const BprMfCheckpoint bpr{{tc.rms_decay, tc.rms_epsilon}, fit_bpr_mf(ds.data, bc, tc).model};
  const auto bpr_back = deserialize(serialize(bpr));
  ASSERT_EQ(model_type(bpr_back), ModelType::bpr_mf);
  EXPECT_EQ(std::get<BprMfCheckpoint>(bpr_back), bpr);

  const ItemKnnCheckpoint knn{ds.data.n_users(), ds.data.n_items(), fit_itemknn(ds.data, 5)};
  const auto knn_back = std::get<ItemKnnCheckpoint>(deserialize(serialize(knn)));
  EXPECT_EQ(knn_back.model.neighbors, knn.model.neighbors);
  EXPECT_EQ(knn_back.model.k_neighbors, 5);
  EXPECT_EQ(knn_back.n_users, knn.n_users);
}

TEST(Checkpoint, RejectsCorruption) {
  const auto bytes = serialize(trained_spectral(1));
  EXPECT_THROW(deserialize("XXXX" + bytes.substr(4)), FormatError);
  EXPECT_THROW(deserialize(bytes.substr(0, bytes.size() - 3)), FormatError);
  std::string bad_tag = bytes;
  bad_tag[8] = 9;
  EXPECT_THROW(deserialize(bad_tag), FormatError);
  std::string bad_version = bytes;
  bad_version[4] = 2;
  EXPECT_THROW(deserialize(bad_version), FormatError);
}

TEST(Checkpoint, SaveLeavesNoPartialFile) {
  const auto dir = std::filesystem::temp_directory_path() / "spectralcf_ckpt_test";
  std::filesystem::remove_all(dir);
  const auto path = dir / "model.spck";
  save_checkpoint(path, trained_spectral(2));
  EXPECT_TRUE(std::filesystem::exists(path));
  EXPECT_FALSE(std::filesystem::exists(dir / "model.spck.partial"));
  EXPECT_EQ(std::get<SpectralCfCheckpoint>(load_checkpoint(path)), trained_spectral(2));

  // Parameters inconsistent with the config fail before anything is renamed.
  auto broken = trained_spectral(2);
  broken.params.filters.pop_back();
  const auto other = dir / "broken.spck";
  EXPECT_THROW(save_checkpoint(other, broken), DimensionError);
  EXPECT_FALSE(std::filesystem::exists(other));
  EXPECT_FALSE(std::filesystem::exists(dir / "broken.spck.partial"));
  std::filesystem::remove_all(dir);
}
