#pragma once

#include <cstdint>
#include <vector>

#include "alignet/types.hpp"

// k-means over (transformed) representations, elbow-based k selection, and
// the three triplet sampling strategies.
namespace alignet {

struct KMeansResult {
    EmbeddingMatrix centroids;               // k x p
    std::vector<std::uint32_t> assignment;   // length m, values in [0, k)
    double inertia = 0.0;
    std::size_t iterations = 0;
};

KMeansResult kmeans(const EmbeddingMatrix& mat, std::size_t k, std::uint64_t seed,
                    std::size_t max_iter = 100, std::size_t n_init = 4);

struct ElbowResult {
    std::size_t k = 0;
    bool no_knee = false;                 // flat curve; smallest candidate returned
    std::vector<std::size_t> candidates;  // deduplicated, ascending
    std::vector<double> inertias;         // one per candidate
};

// Picks the candidate maximizing the discrete second difference of
// inertia over k. A peak below 5% of the total inertia drop counts as
// "no knee": the smallest candidate is returned with the flag set.
ElbowResult elbow_select(const EmbeddingMatrix& mat, std::vector<std::size_t> k_candidates,
                         std::uint64_t seed, std::size_t max_iter = 100, std::size_t n_init = 4);

enum class SamplingStrategy { random, class_boundary, cluster_boundary };

struct SamplerConfig {
    SamplingStrategy strategy = SamplingStrategy::random;
    std::size_t count = 100000;  // n'; the full-scale setting in the source work is 1e7
    std::uint64_t seed = 0;

    void validate() const;
};

TripletDataset sample_random(std::size_t m, const SamplerConfig& cfg);

enum class LabelLevel { subordinate, basic, superordinate };

// Two items share a class, the third differs. Classes are drawn with
// probability proportional to size among classes with >= 2 members; the
// odd item is uniform over the complement. Items labeled -1 are skipped.
TripletDataset sample_class_boundary(const HierarchyLabels& labels, const SamplerConfig& cfg,
                                     LabelLevel level = LabelLevel::subordinate);

TripletDataset sample_cluster_boundary(const KMeansResult& km, const SamplerConfig& cfg);

} // namespace alignet
