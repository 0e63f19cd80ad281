#include "alignet/triplet.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "alignet/kernels.hpp"

namespace alignet {

namespace {

constexpr double kProbFloor = 1e-300;  // clamp before logs; keeps saturated teachers finite

double safe_log(double p) { return std::log(std::max(p, kProbFloor)); }

} // namespace

Temperature::Temperature(double v) : value(v) {
    if (!(v > 0.0) || !std::isfinite(v))
        fail("InvalidTemperature", "temperature must be positive and finite, got " + std::to_string(v));
}

TripletSimilarities pairwise_similarity(const EmbeddingMatrix& mat, std::uint32_t i,
                                        std::uint32_t j, std::uint32_t k) {
    if (i == j || i == k || j == k)
        fail("DuplicateIndex", "triplet indices must be pairwise distinct");
    for (std::uint32_t idx : {i, j, k}) {
        if (idx >= mat.rows)
            fail("IndexOutOfRange", "index " + std::to_string(idx) + " >= m = " + std::to_string(mat.rows));
    }
    TripletSimilarities s;
    s.s_ij = kern::dot(mat.row(i), mat.row(j), mat.dims);
    s.s_ik = kern::dot(mat.row(i), mat.row(k), mat.dims);
    s.s_jk = kern::dot(mat.row(j), mat.row(k), mat.dims);
    return s;
}

ProbTriple triplet_probs(const TripletSimilarities& s, Temperature tau) {
    const double a = s.s_ij / tau.value;
    const double b = s.s_ik / tau.value;
    const double c = s.s_jk / tau.value;
    const double m = std::max(a, std::max(b, c));
    const double ea = std::exp(a - m);
    const double eb = std::exp(b - m);
    const double ec = std::exp(c - m);
    const double z = ea + eb + ec;
    return ProbTriple{ea / z, eb / z, ec / z};
}

int odd_one_out(const TripletSimilarities& s) {
    int best_pair = 0;
    double best = s.s_ij;
    if (s.s_ik > best) {
        best = s.s_ik;
        best_pair = 1;
    }
    if (s.s_jk > best) best_pair = 2;
    return odd_position_of_pair(best_pair);
}

double hard_align_loss(std::span<const ProbTriple> probs, std::span<const int> chosen_pair) {
    if (probs.empty()) fail("EmptyDataset", "hard_align_loss needs at least one triplet");
    if (probs.size() != chosen_pair.size())
        fail("LengthMismatch", std::to_string(probs.size()) + " probability triples vs " +
                                   std::to_string(chosen_pair.size()) + " choices");
    double total = 0.0;
    for (std::size_t s = 0; s < probs.size(); ++s) {
        total -= safe_log(probs[s][chosen_pair[s]]);
    }
    return total / static_cast<double>(probs.size());
}

double kl_divergence(const ProbTriple& p, const ProbTriple& q) {
    double kl = 0.0;
    for (int pair = 0; pair < 3; ++pair) {
        if (p[pair] > 0.0) kl += p[pair] * (safe_log(p[pair]) - safe_log(q[pair]));
    }
    return kl;
}

double soft_align_loss(std::span<const ProbTriple> p_star, std::span<const ProbTriple> q) {
    if (p_star.empty()) fail("EmptyDataset", "soft_align_loss needs at least one triplet");
    if (p_star.size() != q.size())
        fail("LengthMismatch", std::to_string(p_star.size()) + " targets vs " +
                                   std::to_string(q.size()) + " predictions");
    double total = 0.0;
    for (std::size_t s = 0; s < p_star.size(); ++s) total += kl_divergence(p_star[s], q[s]);
    return total / static_cast<double>(p_star.size());
}

double soft_align_cross_entropy(std::span<const ProbTriple> p_star, std::span<const ProbTriple> q) {
    if (p_star.empty()) fail("EmptyDataset", "soft_align_cross_entropy needs at least one triplet");
    if (p_star.size() != q.size())
        fail("LengthMismatch", std::to_string(p_star.size()) + " targets vs " +
                                   std::to_string(q.size()) + " predictions");
    double total = 0.0;
    for (std::size_t s = 0; s < p_star.size(); ++s) {
        for (int pair = 0; pair < 3; ++pair) {
            if (p_star[s][pair] > 0.0) total -= p_star[s][pair] * safe_log(q[s][pair]);
        }
    }
    return total / static_cast<double>(p_star.size());
}

double alignet_kl_loss(std::span<const TripletSimilarities> teacher_s,
                       std::span<const TripletSimilarities> student_s, Temperature tau_teacher,
                       Temperature tau_student) {
    if (teacher_s.empty()) fail("EmptyBatch", "alignet_kl_loss needs a nonempty batch");
    if (teacher_s.size() != student_s.size())
        fail("LengthMismatch", std::to_string(teacher_s.size()) + " teacher vs " +
                                   std::to_string(student_s.size()) + " student triplets");
    double total = 0.0;
    for (std::size_t s = 0; s < teacher_s.size(); ++s) {
        total += kl_divergence(triplet_probs(teacher_s[s], tau_teacher),
                               triplet_probs(student_s[s], tau_student));
    }
    return total / static_cast<double>(teacher_s.size());
}

double triplet_entropy(const ProbTriple& q) {
    double h = 0.0;
    for (int pair = 0; pair < 3; ++pair) {
        if (q[pair] > 0.0) h -= q[pair] * std::log(q[pair]);
    }
    return h;
}

} // namespace alignet
