// Build a supervised relation graph, compute the closed-form VICReg and
// SimCLR optima and probe them on the class labels.

#include <sslspec/sslspec.hpp>

#include <iostream>

int main() {
  using namespace sslspec;

  const SyntheticTask task = make_synthetic_task(256, 8, 16, /*seed=*/1);
  const RelationGraph g = build_supervised_graph(task.labels);

  LossConfig cfg;
  cfg.gamma = 0.01;
  cfg.variance_mode = VarianceMode::squared;

  const VicregOptimum vic = vicreg_optimal(g, cfg.alpha, cfg.gamma, 32);
  std::cout << "VICReg min loss " << vic.min_loss << ", evaluated " << vicreg_loss(vic.z_star, g, cfg)
            << ", rank " << matrix_rank(vic.z_star) << ", probe accuracy " << probe_accuracy(vic.z_star, task.y)
            << "\n";

  const SimclrOptimum sim = simclr_optimal(g, 32);
  std::cout << "SimCLR optimum rank " << matrix_rank(sim.z_star, 1e-6) << " (relation rank " << relation_rank(g)
            << "), probe accuracy " << probe_accuracy(sim.z_star, task.y) << "\n";

  const MatrixXd w = vicreg_linear_weights(task.x, g, cfg.alpha, cfg.gamma, 8);
  std::cout << "linear VICReg loss at W* " << vicreg_loss(task.x * w, g, cfg) << ", predicted "
            << vicreg_linear_min_loss(task.x, g, cfg.alpha, cfg.gamma, 8) << "\n";
  return 0;
}
