#pragma once

#include <cstddef>
#include <span>

#include "alignet/types.hpp"

// Pure triplet kernel: pairwise similarities, the triplet softmax,
// odd-one-out selection, alignment losses, and entropy. All similarities
// are raw dot products; all logs are natural.
namespace alignet {

struct TripletSimilarities {
    double s_ij = 0.0, s_ik = 0.0, s_jk = 0.0;

    double operator[](int pair) const { return pair == 0 ? s_ij : (pair == 1 ? s_ik : s_jk); }
    double& operator[](int pair) { return pair == 0 ? s_ij : (pair == 1 ? s_ik : s_jk); }
};

struct Temperature {
    double value;
    explicit Temperature(double v);
};

TripletSimilarities pairwise_similarity(const EmbeddingMatrix& mat, std::uint32_t i,
                                        std::uint32_t j, std::uint32_t k);

// softmax(s / tau) with max-subtraction; sums to 1 within 1e-12.
ProbTriple triplet_probs(const TripletSimilarities& s, Temperature tau);

// Position (0=i, 1=j, 2=k) of the item outside the most-similar pair.
// Ties break toward the lexicographically smallest pair (i,j) < (i,k) < (j,k).
int odd_one_out(const TripletSimilarities& s);

// -(1/n) sum log q(chosen pair); probabilities clamped at 1e-300 before log.
double hard_align_loss(std::span<const ProbTriple> probs, std::span<const int> chosen_pair);

// (1/n) sum KL(p* || q); terms with p* = 0 contribute 0.
double soft_align_loss(std::span<const ProbTriple> p_star, std::span<const ProbTriple> q);

// -(1/n) sum_pairs p* log q; the KL above minus the (model-independent)
// entropy of p*. Exposed alongside the KL for inspection.
double soft_align_cross_entropy(std::span<const ProbTriple> p_star, std::span<const ProbTriple> q);

// (1/B) sum KL(softmax(teacher/tau_t) || softmax(student/tau_s)).
double alignet_kl_loss(std::span<const TripletSimilarities> teacher_s,
                       std::span<const TripletSimilarities> student_s, Temperature tau_teacher,
                       Temperature tau_student);

// Shannon entropy -sum q log q, natural log, in [0, ln 3].
double triplet_entropy(const ProbTriple& q);

double kl_divergence(const ProbTriple& p, const ProbTriple& q);

} // namespace alignet
