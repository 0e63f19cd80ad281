#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "alignet/optim.hpp"
#include "alignet/triplet.hpp"
#include "alignet/types.hpp"

// Uncertainty-distillation transform: x' = W x + b fitted to soft triplet
// probabilities, regularized toward a scaled identity.
namespace alignet {

struct AffineTransform {
    std::size_t dim = 0;
    std::vector<double> weight;  // dim * dim, row-major
    std::vector<double> bias;    // dim

    static AffineTransform identity(std::size_t p);
    double w(std::size_t r, std::size_t c) const { return weight[r * dim + c]; }
    double& w(std::size_t r, std::size_t c) { return weight[r * dim + c]; }
    void validate() const;
};

struct UdConfig {
    double lambda = 0.1;
    OptimConfig optimizer;            // Adam, lr 3e-4, betas (0.9, 0.999)
    std::size_t steps = 2000;         // total mini-batch steps
    std::size_t batch_size = 1024;
    std::uint64_t seed = 0;
    double tau = 1.0;                 // temperature for q during fitting
    double val_fraction = 0.1;        // 90/10 split by triplet
    std::size_t patience = 5;         // early-stop patience, in epochs
    bool normalize_rows = false;      // optional per-row L2 normalization of inputs
    int threads = 1;

    void validate() const;
};

struct EpochStats {
    std::size_t epoch = 0;
    double objective = 0.0;   // full-data soft loss + lambda * reg
    double soft_loss = 0.0;
    double reg = 0.0;
    double grad_norm_w = 0.0;
    double grad_norm_b = 0.0;
    double val_loss = 0.0;
};

struct FitLog {
    std::uint64_t seed = 0;
    std::vector<EpochStats> epochs;
    void save(const std::string& path) const;  // tab-separated
};

struct UdFit {
    AffineTransform transform;
    FitLog log;
};

EmbeddingMatrix apply_affine(const AffineTransform& t, const EmbeddingMatrix& mat);

// || W - (tr(W)/p) I ||_F^2; zero exactly on scaled identities.
double ud_regularizer(const AffineTransform& t);

double ud_objective(const AffineTransform& t, const EmbeddingMatrix& mat,
                    const TripletDataset& ds, const UdConfig& cfg);

struct UdGradients {
    std::vector<double> d_weight;
    std::vector<double> d_bias;
};

UdGradients ud_gradients(const AffineTransform& t, const EmbeddingMatrix& mat,
                         const TripletDataset& ds, const UdConfig& cfg);

UdFit fit_ud(const EmbeddingMatrix& mat, const TripletDataset& ds, const UdConfig& cfg);

AffineTransform load_affine(const std::string& path);
void save_affine(const AffineTransform& t, const std::string& path);

} // namespace alignet
