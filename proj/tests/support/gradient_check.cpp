#include "gradient_check.hpp"

#include <algorithm>

namespace spectralcf::oracle {

GradientInstance random_gradient_instance(std::mt19937_64& rng, double reg) {
  std::uniform_int_distribution<Index> users(2, 6), items(3, 8), width(1, 4), layers(1, 3), batch(1, 8);
  GradientInstance inst;
  const Index nu = users(rng);
  const Index ni = items(rng);
  // Every user keeps at least one negative so the sampler has something to draw.
  do {
    inst.train = random_interactions(nu, ni, 0.4, rng);
  } while (std::any_of(inst.train.user_items().begin(), inst.train.user_items().end(),
                       [ni](const auto& row) { return static_cast<Index>(row.size()) == ni; }));
  inst.config.layers = layers(rng);
  inst.config.input_dim = width(rng);
  inst.config.filters = width(rng);
  inst.config.seed = rng();
  inst.config.init_mean = 0.0;
  inst.config.init_stddev = 0.5;
  inst.params = init_params(inst.config, nu, ni);
  inst.batch = sample_batch(inst.train, batch(rng), rng);
  inst.reg = reg;
  return inst;
}

GradientComparison check_spectral_gradients(const GradientInstance& inst, KernelForm form) {
  const auto graph = build_graph(inst.train);
  const auto kernel = form == KernelForm::closed_sparse ? closed_form_kernel(graph)
                                                        : conv_kernel(graph, eigendecompose(graph), form);
  const Regularizer reg{inst.reg, RegScope::full_tables, false};
  const auto pass = forward(inst.params, kernel, inst.config);
  const auto grads = backward(inst.params, kernel, inst.config, pass, inst.batch, reg);

  ModelParams probe = inst.params;
  const auto loss = [&] { return bpr_loss(forward(probe, kernel, inst.config).factors, inst.batch, reg); };

  GradientComparison total;
  const auto merge = [&total](const GradientComparison& c) {
    total.max_relative_error = std::max(total.max_relative_error, c.max_relative_error);
    total.entries += c.entries;
  };
  merge(compare_gradients(grads.params.user_embedding, finite_difference(probe.user_embedding, loss)));
  merge(compare_gradients(grads.params.item_embedding, finite_difference(probe.item_embedding, loss)));
  for (std::size_t k = 0; k < probe.filters.size(); ++k) {
    merge(compare_gradients(grads.params.filters[k], finite_difference(probe.filters[k], loss)));
  }
  return total;
}

}  // namespace spectralcf::oracle
