#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "alignet/triplet.hpp"
#include "alignet/types.hpp"

// Synthetic ground truth: hierarchical embedding spaces, simulated triplet
// responses with softmax noise, and simulated response times. The oracle
// substrate for the end-to-end acceptance tests.
namespace alignet {

struct HierarchySpec {
    std::size_t superordinates = 4;
    std::size_t basics_per_super = 4;
    std::size_t subs_per_basic = 2;
    std::size_t items_per_sub = 8;
    // Per-coordinate standard deviation of each level's offset from its parent.
    double disp_super = 0.40;
    double disp_basic = 0.22;
    double disp_sub = 0.12;
    double disp_item = 0.07;
    std::size_t dim = 32;
    std::uint64_t seed = 0;

    std::size_t total_items() const {
        return superordinates * basics_per_super * subs_per_basic * items_per_sub;
    }
    void validate() const;
};

struct Hierarchy {
    EmbeddingMatrix truth;
    HierarchyLabels labels;
};

Hierarchy generate_hierarchy(const HierarchySpec& spec);

// Misaligned-teacher construction: Haar-orthogonal rotation of a random
// coordinate subspace (dim ~ severity * p) followed by additive Gaussian
// noise confined to a random coordinate subset (dim ~ severity * p / 4),
// with per-coordinate sd = severity * noise_strength * rms(X). The noise
// lives in a fixed subspace so an affine transform can suppress it.
EmbeddingMatrix corrupt_teacher(const EmbeddingMatrix& truth, double severity, std::uint64_t seed,
                                double noise_strength = 5.0);

struct SimulatedResponses {
    // responses[t][s] = odd-item position (0,1,2) chosen by subject s on triplet t
    std::vector<std::vector<std::uint8_t>> responses;
    std::vector<ProbTriple> p_star;  // exact choice probabilities at tau_h
};

SimulatedResponses simulate_responses(const EmbeddingMatrix& truth, std::span<const Triplet> triplets,
                                      Temperature tau_h, std::size_t n_subjects, std::uint64_t seed);

// log-RT = alpha + beta * entropy(p*) + N(0, noise_sd^2); RT = exp(log-RT).
ResponseTimeTable simulate_rts(std::span<const ProbTriple> p_star, double noise_sd,
                               std::uint64_t seed, double alpha = 0.7, double beta = 0.5);

// Hard dataset from one simulated subject's responses.
TripletDataset responses_to_hard_dataset(std::span<const Triplet> triplets,
                                         const SimulatedResponses& sim, std::size_t subject);

} // namespace alignet
