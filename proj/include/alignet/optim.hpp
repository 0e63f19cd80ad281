#pragma once

#include <cstddef>
#include <vector>

namespace alignet {

enum class OptimizerKind { sgd, adam };

struct OptimConfig {
    OptimizerKind kind = OptimizerKind::adam;
    double learning_rate = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Flat-vector optimizer; state is owned here and mutated sequentially.
class Optimizer {
  public:
    Optimizer(OptimConfig cfg, std::size_t n_params)
        : cfg_(cfg), m_(n_params, 0.0), v_(n_params, 0.0) {}

    void step(std::vector<double>& params, const std::vector<double>& grad);

    const OptimConfig& config() const { return cfg_; }

  private:
    OptimConfig cfg_;
    std::vector<double> m_, v_;
    std::size_t t_ = 0;
};

} // namespace alignet
