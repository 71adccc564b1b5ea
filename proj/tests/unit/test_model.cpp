#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "spectralcf/errors.hpp"
#include "spectralcf/model.hpp"
#include "spectralcf/synthetic.hpp"

using namespace spectralcf;

namespace {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

ModelConfig small_config(Index k, Index c, Index f, std::uint64_t seed = 0) {
  ModelConfig cfg;
  cfg.layers = k;
  cfg.input_dim = c;
  cfg.filters = f;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST(InitParams, Deterministic) {
  const auto cfg = small_config(3, 16, 16, 42);
  EXPECT_EQ(init_params(cfg, 10, 12), init_params(cfg, 10, 12));
  EXPECT_NE(init_params(cfg, 10, 12), init_params(small_config(3, 16, 16, 43), 10, 12));
}

TEST(InitParams, TableOneShapes) {
  const auto params = init_params(small_config(3, 16, 16), 5, 7);
  ASSERT_EQ(params.filters.size(), 3u);
  for (const auto& theta : params.filters) {
    EXPECT_EQ(theta.rows(), 16);
    EXPECT_EQ(theta.cols(), 16);
  }
  EXPECT_EQ(params.user_embedding.rows(), 5);
  EXPECT_EQ(params.item_embedding.rows(), 7);
  EXPECT_EQ(params.user_embedding.cols(), 16);
}

TEST(InitParams, ShapeChainForUnequalWidths) {
  const auto params = init_params(small_config(3, 5, 2), 4, 4);
  EXPECT_EQ(params.filters[0].rows(), 5);
  EXPECT_EQ(params.filters[0].cols(), 2);
  EXPECT_EQ(params.filters[1].rows(), 2);
  EXPECT_EQ(params.filters[2].rows(), 2);
  EXPECT_NO_THROW(params.check_shapes(small_config(3, 5, 2)));
  EXPECT_THROW(params.check_shapes(small_config(3, 4, 2)), DimensionError);
}

TEST(InitParams, SampleMeanAndSpread) {
  // 5000 users x 20 columns = 10^5 embedding draws.
  const auto params = init_params(small_config(1, 20, 1, 7), 5000, 1);
  const auto& x = params.user_embedding;
  const double n = static_cast<double>(x.size());
  const double mean = x.sum() / n;
  EXPECT_NEAR(mean, 0.01, 3.0 * 0.02 / std::sqrt(n));
  const double var = (x.array() - mean).square().sum() / (n - 1);
  EXPECT_NEAR(std::sqrt(var), 0.02, 0.0005);
}

TEST(ModelConfigTest, Validation) {
  EXPECT_THROW(small_config(0, 1, 1).validate(), Error);
  EXPECT_THROW(small_config(1, 0, 1).validate(), Error);
  EXPECT_THROW(small_config(1, 1, 0).validate(), Error);
  EXPECT_EQ(small_config(3, 16, 16).factor_width(), 64);
}

TEST(Sigmoid, ClampsExtremes) {
  EXPECT_EQ(sigmoid(0.0), 0.5);
  EXPECT_EQ(sigmoid(1e6), sigmoid(500.0));
  EXPECT_EQ(sigmoid(-1e6), sigmoid(-500.0));
  EXPECT_GT(sigmoid(-1e6), 0.0);
  EXPECT_DOUBLE_EQ(sigmoid(1.3), logistic(1.3));
}

TEST(Forward, IdentityKernelZeroFilter) {
  const auto cfg = small_config(1, 2, 3);
  auto params = init_params(cfg, 2, 3);
  params.filters[0].setZero();
  const auto kernel = ConvKernel::dense(Matrix::Identity(5, 5));
  const auto out = forward(params, kernel, cfg);
  ASSERT_EQ(out.factors.width(), 5);
  EXPECT_EQ(out.factors.users.leftCols(2), params.user_embedding);
  EXPECT_EQ(out.factors.items.leftCols(2), params.item_embedding);
  EXPECT_TRUE((out.factors.users.rightCols(3).array() == 0.5).all());
  EXPECT_TRUE((out.factors.items.rightCols(3).array() == 0.5).all());
}

TEST(Forward, SingleEdgeHandComputation) {
  const auto cfg = small_config(1, 1, 1);
  const auto g = build_graph(InteractionSet::from_pairs(1, 1, {{0, 0}}));
  ModelParams params;
  const double a = 0.3, b = -0.7, w = 1.5;
  params.user_embedding = Matrix::Constant(1, 1, a);
  params.item_embedding = Matrix::Constant(1, 1, b);
  params.filters = {Matrix::Constant(1, 1, w)};
  const auto out = forward(params, closed_form_kernel(g), cfg);
  EXPECT_NEAR(out.factors.users(0, 1), logistic((2 * a - b) * w), 1e-15);
  EXPECT_NEAR(out.factors.items(0, 1), logistic((2 * b - a) * w), 1e-15);
  EXPECT_EQ(out.factors.users(0, 0), a);
  EXPECT_EQ(out.factors.items(0, 0), b);
}

TEST(Forward, TraceIsConsistent) {
  std::mt19937_64 rng(3);
  const auto data = oracle::random_interactions(6, 8, 0.3, rng);
  const auto cfg = small_config(3, 4, 5, 1);
  const auto params = init_params(cfg, 6, 8);
  const auto kernel = closed_form_kernel(build_graph(data));
  const auto out = forward(params, kernel, cfg);
  ASSERT_EQ(out.trace.activations.size(), 4u);
  ASSERT_EQ(out.trace.pre_activations.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    const Matrix& z = out.trace.pre_activations[k];
    const Matrix& x = out.trace.activations[k + 1];
    for (Index r = 0; r < z.rows(); ++r) {
      for (Index c = 0; c < z.cols(); ++c) {
        EXPECT_EQ(x(r, c), sigmoid(z(r, c)));
        EXPECT_GT(x(r, c), 0.0);
        EXPECT_LT(x(r, c), 1.0);
      }
    }
  }
}

TEST(Forward, WidthIsCPlusKF) {
  std::mt19937_64 rng(4);
  const auto data = oracle::random_interactions(4, 5, 0.4, rng);
  const auto kernel = closed_form_kernel(build_graph(data));
  for (Index k = 1; k <= 3; ++k) {
    for (Index c : {1, 3}) {
      for (Index f : {1, 4}) {
        const auto cfg = small_config(k, c, f);
        const auto out = forward(init_params(cfg, 4, 5), kernel, cfg);
        EXPECT_EQ(out.factors.users.cols(), c + k * f);
        EXPECT_EQ(out.factors.items.cols(), c + k * f);
        EXPECT_EQ(out.factors.users.rows(), 4);
        EXPECT_EQ(out.factors.items.rows(), 5);
      }
    }
  }
}

TEST(Forward, KernelFormsAgree) {
  std::mt19937_64 rng(10);
  std::uniform_int_distribution<Index> side(3, 50);
  for (int trial = 0; trial < 5; ++trial) {
    const auto data = oracle::random_interactions(side(rng), side(rng), 0.15, rng);
    const auto g = build_graph(data);
    const auto dense = conv_kernel(g, eigendecompose(g), KernelForm::dense_eig);
    const auto sparse = closed_form_kernel(g);
    auto cfg = small_config(3, 4, 4, static_cast<std::uint64_t>(trial));
    cfg.init_stddev = 1.0;
    const auto params = init_params(cfg, data.n_users(), data.n_items());
    const auto a = forward(params, dense, cfg).factors;
    const auto b = forward(params, sparse, cfg).factors;
    EXPECT_LT((a.users - b.users).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LT((a.items - b.items).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(Forward, PermutingUsersPermutesFactorRows) {
  std::mt19937_64 rng(5);
  const auto data = oracle::random_interactions(6, 7, 0.35, rng);
  std::vector<Index> perm(6);
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Interaction> permuted;
  for (const auto& [u, i] : data.pairs()) permuted.emplace_back(perm[u], i);
  const auto relabeled = InteractionSet::from_pairs(6, 7, permuted);

  auto cfg = small_config(2, 3, 3, 8);
  cfg.init_stddev = 0.5;
  const auto params = init_params(cfg, 6, 7);
  auto moved = params;
  for (Index u = 0; u < 6; ++u) moved.user_embedding.row(perm[u]) = params.user_embedding.row(u);

  const auto a = forward(params, closed_form_kernel(build_graph(data)), cfg).factors;
  const auto b = forward(moved, closed_form_kernel(build_graph(relabeled)), cfg).factors;
  for (Index u = 0; u < 6; ++u) {
    EXPECT_LT((a.users.row(u) - b.users.row(perm[u])).cwiseAbs().maxCoeff(), 1e-12);
    for (Index i = 0; i < 7; ++i) EXPECT_NEAR(score(a, u, i), score(b, perm[u], i), 1e-12);
  }
  EXPECT_LT((a.items - b.items).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Forward, OverflowNamesLayer) {
  const auto cfg = small_config(1, 1, 1);
  ModelParams params;
  params.user_embedding = Matrix::Constant(1, 1, std::numeric_limits<double>::infinity());
  params.item_embedding = Matrix::Constant(1, 1, 0.0);
  params.filters = {Matrix::Constant(1, 1, 0.0)};
  const auto kernel = closed_form_kernel(build_graph(InteractionSet::from_pairs(1, 1, {{0, 0}})));
  try {
    forward(params, kernel, cfg);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("layer"), std::string::npos);
  }
}

TEST(Forward, KernelSizeMismatch) {
  const auto cfg = small_config(1, 1, 1);
  const auto params = init_params(cfg, 2, 2);
  EXPECT_THROW(forward(params, ConvKernel::dense(Matrix::Identity(3, 3)), cfg), DimensionError);
}

TEST(Score, UnitAndOrthogonal) {
  FactorTable f;
  f.users = Matrix::Zero(1, 3);
  f.items = Matrix::Zero(2, 3);
  f.users(0, 1) = 1.0;
  f.items(0, 1) = 1.0;
  f.items(1, 2) = 1.0;
  EXPECT_EQ(score(f, 0, 0), 1.0);
  EXPECT_EQ(score(f, 0, 1), 0.0);
  EXPECT_THROW(score(f, 1, 0), DimensionError);
  EXPECT_THROW(score(f, 0, 2), DimensionError);
}

TEST(Score, MatchesSummation) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  FactorTable f;
  f.users = Matrix(4, 6);
  f.items = Matrix(5, 6);
  for (Index k = 0; k < f.users.size(); ++k) f.users.data()[k] = g(rng);
  for (Index k = 0; k < f.items.size(); ++k) f.items.data()[k] = g(rng);
  for (Index u = 0; u < 4; ++u) {
    const Vector all = score_all(f, u);
    for (Index i = 0; i < 5; ++i) {
      double s = 0.0;
      for (Index d = 0; d < 6; ++d) s += f.users(u, d) * f.items(i, d);
      EXPECT_NEAR(score(f, u, i), s, 1e-12);
      EXPECT_NEAR(all[i], s, 1e-12);
    }
  }
}

TEST(Ranking, OrderAndTies) {
  const std::vector<double> two{0.9, 0.1};
  EXPECT_EQ(top_m(two, {}, 2), (std::vector<Index>{0, 1}));
  const std::vector<double> flat(5, 0.3);
  EXPECT_EQ(top_m(flat, {}, 3), (std::vector<Index>{0, 1, 2}));
  const std::vector<double> mixed{0.2, 0.8, 0.8, 0.5};
  EXPECT_EQ(top_m(mixed, {}, 4), (std::vector<Index>{1, 2, 3, 0}));
  const std::vector<Index> exclude{1};
  EXPECT_EQ(top_m(mixed, exclude, 10), (std::vector<Index>{2, 3, 0}));
}

TEST(Ranking, ExcludedItemsNeverAppear) {
  std::mt19937_64 rng(7);
  const auto data = oracle::random_interactions(8, 15, 0.3, rng);
  const auto cfg = small_config(2, 4, 4, 3);
  const auto factors = forward(init_params(cfg, 8, 15), closed_form_kernel(build_graph(data)), cfg).factors;
  for (Index u = 0; u < 8; ++u) {
    const auto ranked = rank_items(factors, u, data.items_of(u), 15);
    EXPECT_EQ(ranked.size(), 15u - data.items_of(u).size());
    for (Index i : ranked) EXPECT_FALSE(data.contains(u, i));
  }
}
