#include "alignet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "alignet/io.hpp"
#include "alignet/kernels.hpp"
#include "alignet/rng.hpp"

namespace alignet {

namespace {

std::vector<double> mean_ranks(std::span<const double> x) {
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
        const double mean_rank = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = mean_rank;
        i = j + 1;
    }
    return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y, const char* constant_what) {
    const std::size_t n = x.size();
    const double mx = kern::sum(x.data(), n) / static_cast<double>(n);
    const double my = kern::sum(y.data(), n) / static_cast<double>(n);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        fail("ConstantInput", std::string(constant_what) + " has zero variance");
    return sxy / std::sqrt(sxx * syy);
}

PairLevel classify_pair(const HierarchyLabels& labels, std::size_t a, std::size_t b, bool& known) {
    known = true;
    if (labels.subordinate[a] >= 0 && labels.subordinate[a] == labels.subordinate[b])
        return PairLevel::same_subordinate;
    if (labels.basic[a] >= 0 && labels.basic[a] == labels.basic[b]) return PairLevel::same_basic;
    if (labels.superordinate[a] >= 0 && labels.superordinate[a] == labels.superordinate[b])
        return PairLevel::same_superordinate;
    if (labels.superordinate[a] >= 0 && labels.superordinate[b] >= 0)
        return PairLevel::different_superordinate;
    known = false;
    return PairLevel::different_superordinate;
}

// Cyclic Jacobi eigenvalues of a symmetric matrix (values only).
std::vector<double> jacobi_eigenvalues(std::vector<double> a, std::size_t n) {
    const std::size_t max_sweeps = 64;
    const auto at = [&](std::size_t r, std::size_t c) -> double& { return a[r * n + c]; };
    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = r + 1; c < n; ++c) off += at(r, c) * at(r, c);
        double diag = 0.0;
        for (std::size_t r = 0; r < n; ++r) diag += at(r, r) * at(r, r);
        if (off <= 1e-26 * (diag + 1e-300)) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = at(p, q);
                if (apq == 0.0) continue;
                const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t r = 0; r < n; ++r) {
                    const double arp = at(r, p);
                    const double arq = at(r, q);
                    at(r, p) = c * arp - s * arq;
                    at(r, q) = s * arp + c * arq;
                }
                for (std::size_t r = 0; r < n; ++r) {
                    const double apr = at(p, r);
                    const double aqr = at(q, r);
                    at(p, r) = c * apr - s * aqr;
                    at(q, r) = s * apr + c * aqr;
                }
            }
        }
    }
    std::vector<double> eig(n);
    for (std::size_t r = 0; r < n; ++r) eig[r] = at(r, r);
    return eig;
}

} // namespace

double ooo_accuracy(const EmbeddingMatrix& model, const TripletDataset& ds) {
    if (ds.size() == 0) fail("EmptyDataset", "no triplets to evaluate");
    if (!ds.has_hard()) fail("LabelKindMismatch", "hard choices required for odd-one-out accuracy");
    validate_pairing(model, ds);
    std::size_t correct = 0;
    for (std::size_t s = 0; s < ds.size(); ++s) {
        const Triplet& t = ds.triplets[s];
        const int model_odd = odd_one_out(pairwise_similarity(model, t.i, t.j, t.k));
        const int label_odd = odd_position_of_pair(choice_pair_index(t, ds.hard[s]));
        if (model_odd == label_odd) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(ds.size());
}

Rsm rsm_pearson(const EmbeddingMatrix& mat) {
    mat.validate();
    if (mat.dims < 2) fail("DimensionMismatch", "Pearson kernel needs p >= 2");
    const std::size_t n = mat.rows;
    const std::size_t p = mat.dims;
    // center and normalize each row once
    EmbeddingMatrix centered(n, p);
    for (std::size_t r = 0; r < n; ++r) {
        const double mean = kern::sum(mat.row(r), p) / static_cast<double>(p);
        double* dst = centered.row(r);
        const double* src = mat.row(r);
        for (std::size_t c = 0; c < p; ++c) dst[c] = src[c] - mean;
        const double norm = std::sqrt(kern::dot(dst, dst, p));
        if (norm == 0.0)
            fail("ZeroVarianceRow", "row " + std::to_string(r) + " has zero variance");
        kern::scale(1.0 / norm, dst, p);
    }
    Rsm rsm;
    rsm.n = n;
    rsm.data.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        rsm.at(i, i) = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            double v = kern::dot(centered.row(i), centered.row(j), p);
            v = std::clamp(v, -1.0, 1.0);
            rsm.at(i, j) = v;
            rsm.at(j, i) = v;
        }
    }
    return rsm;
}

double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        fail("LengthMismatch", std::to_string(x.size()) + " vs " + std::to_string(y.size()));
    if (x.size() < 3) fail("LengthMismatch", "need at least 3 observations");
    const std::vector<double> rx = mean_ranks(x);
    const std::vector<double> ry = mean_ranks(y);
    return pearson(rx, ry, "rank vector");
}

double rsa_score(const Rsm& model_rsm, const Rsm& human_rsm) {
    if (model_rsm.n != human_rsm.n)
        fail("DimensionMismatch", "RSMs are " + std::to_string(model_rsm.n) + " vs " +
                                      std::to_string(human_rsm.n));
    std::vector<double> a, b;
    a.reserve(model_rsm.n * (model_rsm.n - 1) / 2);
    b.reserve(a.capacity());
    for (std::size_t i = 0; i < model_rsm.n; ++i) {
        for (std::size_t j = i + 1; j < model_rsm.n; ++j) {
            a.push_back(model_rsm.at(i, j));
            b.push_back(human_rsm.at(i, j));
        }
    }
    return spearman(a, b);
}

double uncertainty_rt_correlation(const EmbeddingMatrix& model, const TripletDataset& ds,
                                  const ResponseTimeTable& rts, Temperature tau,
                                  double rt_cutoff_seconds, bool use_median) {
    if (ds.size() == 0) fail("EmptyDataset", "no triplets to evaluate");
    validate_pairing(model, ds);
    if (rts.size() < ds.size())
        fail("MissingRt", "response-time table covers " + std::to_string(rts.size()) + " of " +
                              std::to_string(ds.size()) + " triplets");
    std::vector<double> entropies(ds.size());
    std::vector<double> log_rts(ds.size());
    for (std::size_t s = 0; s < ds.size(); ++s) {
        const Triplet& t = ds.triplets[s];
        entropies[s] = triplet_entropy(triplet_probs(pairwise_similarity(model, t.i, t.j, t.k), tau));
        log_rts[s] = rts.aggregated_log_rt(s, rt_cutoff_seconds, use_median);
    }
    return spearman(entropies, log_rts);
}

double loo_noise_ceiling(const std::vector<std::vector<std::uint8_t>>& responses) {
    if (responses.empty()) fail("EmptyDataset", "no triplets with responses");
    double total = 0.0;
    for (std::size_t t = 0; t < responses.size(); ++t) {
        const auto& r = responses[t];
        if (r.size() < 2)
            fail("TooFewResponses", "triplet " + std::to_string(t) + " has " +
                                        std::to_string(r.size()) + " responses; need >= 2");
        double agreement = 0.0;
        for (std::size_t held = 0; held < r.size(); ++held) {
            int counts[3] = {0, 0, 0};
            for (std::size_t o = 0; o < r.size(); ++o) {
                if (o == held) continue;
                if (r[o] > 2)
                    fail("ParseError", "responses must be odd-item positions 0, 1, or 2");
                ++counts[r[o]];
            }
            const int top = std::max(counts[0], std::max(counts[1], counts[2]));
            int tied = 0;
            for (int c : counts)
                if (c == top) ++tied;
            // remainder tie: 1/|tied set| if the held-out choice is among the tied leaders
            if (counts[r[held]] == top) agreement += 1.0 / static_cast<double>(tied);
        }
        total += agreement / static_cast<double>(r.size());
    }
    return total / static_cast<double>(responses.size());
}

const char* pair_level_name(PairLevel level) {
    switch (level) {
    case PairLevel::same_subordinate: return "same_subordinate";
    case PairLevel::same_basic: return "same_basic";
    case PairLevel::same_superordinate: return "same_superordinate";
    case PairLevel::different_superordinate: return "different_superordinate";
    }
    return "unknown";
}

const ShiftLevelStats* ShiftReport::find(PairLevel level) const {
    for (const auto& stats : levels)
        if (stats.level == level) return &stats;
    return nullptr;
}

void ShiftReport::save(const std::string& path) const {
    std::ostringstream out;
    out << "level\tpairs\tmean_dz\tci_low\tci_high\n";
    for (const auto& s : levels) {
        char buf[200];
        std::snprintf(buf, sizeof(buf), "%s\t%zu\t%.17g\t%.17g\t%.17g\n", pair_level_name(s.level),
                      s.pair_count, s.mean_dz, s.ci_low, s.ci_high);
        out << buf;
    }
    std::ofstream f(path, std::ios::trunc);
    if (!f) fail("IoFailure", "cannot write '" + path + "'");
    f << out.str();
}

ShiftReport representation_shift(const EmbeddingMatrix& before, const EmbeddingMatrix& after,
                                 const HierarchyLabels& labels, std::size_t pair_sample,
                                 std::uint64_t seed) {
    if (before.rows != after.rows)
        fail("DimensionMismatch", "matrices have " + std::to_string(before.rows) + " vs " +
                                      std::to_string(after.rows) + " rows");
    if (labels.size() != before.rows)
        fail("DimensionMismatch", "labels cover " + std::to_string(labels.size()) + " of " +
                                      std::to_string(before.rows) + " items");
    const std::size_t m = before.rows;
    if (m < 2) fail("NoPairsInLevel", "need at least two items");

    struct PairEntry {
        std::uint32_t a, b;
        PairLevel level;
    };
    std::vector<PairEntry> pairs;
    ShiftReport report;

    if (m <= 2000) {
        report.exhaustive = true;
        pairs.reserve(m * (m - 1) / 2);
        for (std::uint32_t a = 0; a < m; ++a) {
            for (std::uint32_t b = a + 1; b < m; ++b) {
                bool known = false;
                const PairLevel level = classify_pair(labels, a, b, known);
                if (known) pairs.push_back({a, b, level});
            }
        }
    } else {
        // stratified: equal quotas per level, rejection sampling with a bounded budget
        Rng rng = derived_rng(seed, 0x9A13);
        const std::size_t quota = std::max<std::size_t>(1, pair_sample / 4);
        std::size_t filled[4] = {0, 0, 0, 0};
        std::size_t budget = pair_sample * 64;
        while (budget-- > 0 && pairs.size() < pair_sample) {
            const auto a = static_cast<std::uint32_t>(rng.below(m));
            auto b = static_cast<std::uint32_t>(rng.below(m));
            if (a == b) continue;
            bool known = false;
            const PairLevel level = classify_pair(labels, a, b, known);
            if (!known) continue;
            auto& used = filled[static_cast<int>(level)];
            if (used >= quota) continue;
            ++used;
            pairs.push_back({a, b, level});
        }
    }
    if (pairs.empty()) fail("NoPairsInLevel", "no labeled pairs available");
    report.sampled_pairs = pairs.size();

    std::vector<double> d_before(pairs.size());
    std::vector<double> d_after(pairs.size());
    for (std::size_t idx = 0; idx < pairs.size(); ++idx) {
        d_before[idx] = std::sqrt(kern::sqdist(before.row(pairs[idx].a), before.row(pairs[idx].b),
                                               before.dims));
        d_after[idx] =
            std::sqrt(kern::sqdist(after.row(pairs[idx].a), after.row(pairs[idx].b), after.dims));
    }
    const auto zscore = [](std::vector<double>& v) {
        const double mean = kern::sum(v.data(), v.size()) / static_cast<double>(v.size());
        double var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        var /= static_cast<double>(v.size());
        const double sd = std::sqrt(var);
        if (sd == 0.0) {
            for (double& x : v) x = 0.0;
            return;
        }
        for (double& x : v) x = (x - mean) / sd;
    };
    zscore(d_before);
    zscore(d_after);

    std::vector<std::vector<double>> dz_by_level(4);
    for (std::size_t idx = 0; idx < pairs.size(); ++idx) {
        dz_by_level[static_cast<int>(pairs[idx].level)].push_back(d_after[idx] - d_before[idx]);
    }

    for (int level = 0; level < 4; ++level) {
        const auto& dz = dz_by_level[level];
        if (dz.empty()) continue;
        ShiftLevelStats stats;
        stats.level = static_cast<PairLevel>(level);
        stats.pair_count = dz.size();
        stats.mean_dz = kern::sum(dz.data(), dz.size()) / static_cast<double>(dz.size());
        // 1000-resample percentile bootstrap for the 95% CI
        Rng rng = derived_rng(seed, 0xB007 + static_cast<std::uint64_t>(level));
        std::vector<double> boots(1000);
        for (auto& bmean : boots) {
            double acc = 0.0;
            for (std::size_t draw = 0; draw < dz.size(); ++draw) acc += dz[rng.below(dz.size())];
            bmean = acc / static_cast<double>(dz.size());
        }
        std::sort(boots.begin(), boots.end());
        stats.ci_low = boots[24];
        stats.ci_high = boots[974];
        report.levels.push_back(stats);
    }
    if (report.levels.empty()) fail("NoPairsInLevel", "no level had any pairs");
    return report;
}

std::vector<double> pca_explained_variance(const EmbeddingMatrix& mat, std::size_t components) {
    mat.validate();
    const std::size_t m = mat.rows;
    const std::size_t p = mat.dims;
    const std::size_t max_components = std::min(m, p);
    if (components > max_components)
        fail("ComponentsTooMany", std::to_string(components) + " components requested, min(m,p) = " +
                                      std::to_string(max_components));

    // column-centered data
    std::vector<double> col_mean(p, 0.0);
    for (std::size_t r = 0; r < m; ++r) kern::axpy(1.0, mat.row(r), col_mean.data(), p);
    kern::scale(1.0 / static_cast<double>(m), col_mean.data(), p);
    EmbeddingMatrix centered(m, p);
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < p; ++c) centered.at(r, c) = mat.at(r, c) - col_mean[c];
    }

    // eigenvalues of the smaller Gram form; nonzero spectra coincide
    const bool use_cov = p <= m;
    const std::size_t n = use_cov ? p : m;
    std::vector<double> gram(n * n, 0.0);
    if (use_cov) {
        for (std::size_t r = 0; r < m; ++r) {
            const double* x = centered.row(r);
            for (std::size_t a = 0; a < p; ++a) {
                kern::axpy(x[a], x, gram.data() + a * p, p);
            }
        }
    } else {
        for (std::size_t a = 0; a < m; ++a) {
            for (std::size_t b = a; b < m; ++b) {
                const double v = kern::dot(centered.row(a), centered.row(b), p);
                gram[a * m + b] = v;
                gram[b * m + a] = v;
            }
        }
    }

    std::vector<double> eig = jacobi_eigenvalues(std::move(gram), n);
    for (double& v : eig) v = std::max(v, 0.0);
    std::sort(eig.begin(), eig.end(), std::greater<double>());
    const double total = kern::sum(eig.data(), eig.size());
    std::vector<double> fractions(components, 0.0);
    if (total > 0.0) {
        for (std::size_t c = 0; c < components; ++c) fractions[c] = eig[c] / total;
    }
    return fractions;
}

} // namespace alignet
