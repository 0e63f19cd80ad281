#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "alignet/errors.hpp"

namespace alignet {

// m x p row-major matrix of item representations. In-memory arithmetic is
// 64-bit; on-disk storage is 32-bit (see io.hpp).
struct EmbeddingMatrix {
    std::size_t rows = 0;
    std::size_t dims = 0;
    std::vector<double> data;              // rows * dims, row-major
    std::vector<std::string> item_ids;     // empty, or one id per row

    EmbeddingMatrix() = default;
    EmbeddingMatrix(std::size_t m, std::size_t p) : rows(m), dims(p), data(m * p, 0.0) {}

    const double* row(std::size_t r) const { return data.data() + r * dims; }
    double* row(std::size_t r) { return data.data() + r * dims; }
    double& at(std::size_t r, std::size_t c) { return data[r * dims + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * dims + c]; }

    // Throws NonFiniteValue / LengthMismatch / DuplicateId on violation.
    void validate() const;
};

struct Triplet {
    std::uint32_t i = 0, j = 0, k = 0;
};

// The pair of items judged most similar; always a subset of its triplet.
struct HardChoice {
    std::uint32_t a = 0, b = 0;
};

// Probabilities over the three pairs of a triplet in canonical order
// (i,j), (i,k), (j,k).
struct ProbTriple {
    double q_ij = 0.0, q_ik = 0.0, q_jk = 0.0;

    double operator[](int pair) const { return pair == 0 ? q_ij : (pair == 1 ? q_ik : q_jk); }
    double& operator[](int pair) { return pair == 0 ? q_ij : (pair == 1 ? q_ik : q_jk); }
    double sum() const { return q_ij + q_ik + q_jk; }
};

enum class LabelKind { none, hard, soft, both };

struct TripletDataset {
    std::vector<Triplet> triplets;
    std::vector<HardChoice> hard;  // size == triplets.size() iff hard labels present
    std::vector<ProbTriple> soft;  // size == triplets.size() iff soft labels present
    LabelKind kind = LabelKind::none;
    std::string source_tag;

    std::size_t size() const { return triplets.size(); }
    bool has_hard() const { return kind == LabelKind::hard || kind == LabelKind::both; }
    bool has_soft() const { return kind == LabelKind::soft || kind == LabelKind::both; }

    void validate() const;  // structural checks independent of any matrix
};

// Maps the hard choice of triplet t to the canonical pair index 0/1/2.
// Throws ChoiceNotInTriple if {a,b} is not a pair of the triple.
int choice_pair_index(const Triplet& t, const HardChoice& c);

// The odd item position (0=i, 1=j, 2=k) implied by a chosen pair index.
inline int odd_position_of_pair(int pair) { return 2 - pair; }

// Per-item hierarchy identifiers; -1 means unknown/unassigned.
struct HierarchyLabels {
    std::vector<std::int64_t> subordinate;
    std::vector<std::int64_t> basic;
    std::vector<std::int64_t> superordinate;
    std::vector<std::int64_t> cluster;
    std::vector<std::string> item_ids;  // empty, or one per item

    std::size_t size() const { return subordinate.size(); }
    void resize(std::size_t m) {
        subordinate.assign(m, -1);
        basic.assign(m, -1);
        superordinate.assign(m, -1);
        cluster.assign(m, -1);
    }
};

// Raw response times per triplet, seconds. Observations above the cutoff
// are dropped before aggregation; aggregation is over log-RT.
struct ResponseTimeTable {
    std::vector<std::vector<double>> observations;

    std::size_t size() const { return observations.size(); }
    // Mean (or median) of log-RT after exclusion; throws MissingRt if the
    // triplet has no surviving observation.
    double aggregated_log_rt(std::size_t triplet, double cutoff_seconds = 10.0,
                             bool use_median = false) const;
};

} // namespace alignet
