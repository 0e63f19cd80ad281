#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "alignet/triplet.hpp"
#include "alignet/types.hpp"

// Alignment and representation-analysis metrics. Odd-one-out evaluation
// uses raw dot-product similarities while RSA uses Pearson-kernel RSMs;
// the two conventions are deliberate and must not be merged.
namespace alignet {

// Fraction of triplets where the model's odd-one-out matches the odd item
// implied by the dataset's hard choice.
double ooo_accuracy(const EmbeddingMatrix& model, const TripletDataset& ds);

struct Rsm {
    std::size_t n = 0;
    std::vector<double> data;  // n * n, symmetric, unit diagonal

    double at(std::size_t i, std::size_t j) const { return data[i * n + j]; }
    double& at(std::size_t i, std::size_t j) { return data[i * n + j]; }
};

// Entry (i,j) = Pearson correlation of rows i and j.
Rsm rsm_pearson(const EmbeddingMatrix& mat);

// Pearson correlation of mean ranks (ties get the mean rank).
double spearman(std::span<const double> x, std::span<const double> y);

// Spearman over the strictly-upper triangulars of the two RSMs.
double rsa_score(const Rsm& model_rsm, const Rsm& human_rsm);

// spearman(model triplet entropy, aggregated log-RT). RTs above the
// cutoff are excluded before aggregation.
double uncertainty_rt_correlation(const EmbeddingMatrix& model, const TripletDataset& ds,
                                  const ResponseTimeTable& rts, Temperature tau,
                                  double rt_cutoff_seconds = 10.0, bool use_median = false);

// Leave-one-out agreement: per response, match against the majority of
// the remaining responses; a remainder tie contributes 1/|tied set| when
// the held-out choice is among the tied majority. Responses are odd-item
// positions (0, 1, 2).
double loo_noise_ceiling(const std::vector<std::vector<std::uint8_t>>& responses);

enum class PairLevel { same_subordinate, same_basic, same_superordinate, different_superordinate };

const char* pair_level_name(PairLevel level);

struct ShiftLevelStats {
    PairLevel level{};
    std::size_t pair_count = 0;
    double mean_dz = 0.0;
    double ci_low = 0.0;   // bootstrap 95% CI (1000 resamples)
    double ci_high = 0.0;
};

struct ShiftReport {
    std::vector<ShiftLevelStats> levels;  // only levels with pairs are reported
    std::size_t sampled_pairs = 0;
    bool exhaustive = false;

    const ShiftLevelStats* find(PairLevel level) const;
    void save(const std::string& path) const;  // tab-separated table
};

// Euclidean distances before/after, z-scored over the sampled pair
// population; dz = z_after - z_before grouped by relationship level.
// Exact enumeration when m <= 2000, else stratified sampling of up to
// pair_sample pairs.
ShiftReport representation_shift(const EmbeddingMatrix& before, const EmbeddingMatrix& after,
                                 const HierarchyLabels& labels, std::size_t pair_sample,
                                 std::uint64_t seed);

// Descending eigenvalue fractions of the centered covariance.
std::vector<double> pca_explained_variance(const EmbeddingMatrix& mat, std::size_t components);

} // namespace alignet
