#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "alignet/optim.hpp"
#include "alignet/types.hpp"

// Gaussian object-embedding model producing Monte-Carlo triplet
// probability estimates from discrete choices via the reparameterization
// trick. Deliberately minimal: plain Gaussian posteriors with L2
// regularization; externally produced probability files are equally
// accepted by the pipeline.
namespace alignet {

struct GaussianEmbedding {
    std::size_t items = 0;
    std::size_t dim = 0;
    std::vector<double> mu;         // items * dim
    std::vector<double> log_sigma;  // items * dim

    GaussianEmbedding() = default;
    GaussianEmbedding(std::size_t m, std::size_t d, double log_sigma_init)
        : items(m), dim(d), mu(m * d, 0.0), log_sigma(m * d, log_sigma_init) {}
};

struct McConfig {
    std::size_t samples = 50;
    std::uint64_t seed = 0;

    void validate() const;
};

// Y = mu + exp(log_sigma) .* eps, eps given row-major (items * dim).
EmbeddingMatrix sample_embedding(const GaussianEmbedding& g, std::span<const double> eps);

std::vector<ProbTriple> mc_triplet_probs(const GaussianEmbedding& g,
                                         std::span<const Triplet> triplets, const McConfig& cfg);

struct GaussianFitConfig {
    std::size_t dim = 64;
    OptimConfig optimizer{OptimizerKind::adam, 1e-2, 0.9, 0.999, 1e-8};
    std::size_t steps = 2000;
    std::size_t batch_size = 256;
    std::uint64_t seed = 0;
    double l2_mu = 1e-4;              // penalty weight on mean magnitudes
    double l2_log_sigma = 1e-3;       // penalty on deviations from the initial log-sigma
    double log_sigma_init = -2.0;
    double mu_init_scale = 0.1;

    void validate() const;
};

struct GaussianFit {
    GaussianEmbedding embedding;
    std::vector<double> epoch_loss;  // training-split loss per epoch
};

GaussianFit fit_gaussian_embeddings(const TripletDataset& ds, std::size_t items,
                                    const GaussianFitConfig& cfg);

} // namespace alignet
