#include "alignet/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <string>

#include "alignet/kernels.hpp"
#include "alignet/rng.hpp"

namespace alignet {

namespace {

double assignment_pass(const EmbeddingMatrix& mat, const EmbeddingMatrix& centroids,
                       std::vector<std::uint32_t>& assignment) {
    const std::size_t m = mat.rows;
    const std::size_t k = centroids.rows;
    double inertia = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
        double best = std::numeric_limits<double>::infinity();
        std::uint32_t best_c = 0;
        for (std::size_t c = 0; c < k; ++c) {
            const double d = kern::sqdist(mat.row(r), centroids.row(c), mat.dims);
            if (d < best) {
                best = d;
                best_c = static_cast<std::uint32_t>(c);
            }
        }
        assignment[r] = best_c;
        inertia += best;
    }
    return inertia;
}

EmbeddingMatrix plus_plus_seed(const EmbeddingMatrix& mat, std::size_t k, Rng& rng) {
    const std::size_t m = mat.rows;
    EmbeddingMatrix centroids(k, mat.dims);
    std::vector<double> d2(m, std::numeric_limits<double>::infinity());
    std::vector<bool> taken(m, false);

    std::size_t first = rng.below(m);
    std::copy_n(mat.row(first), mat.dims, centroids.row(0));
    taken[first] = true;

    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (std::size_t r = 0; r < m; ++r) {
            const double d = kern::sqdist(mat.row(r), centroids.row(c - 1), mat.dims);
            if (d < d2[r]) d2[r] = d;
            total += d2[r];
        }
        std::size_t pick = m;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double cum = 0.0;
            for (std::size_t r = 0; r < m; ++r) {
                cum += d2[r];
                if (cum >= target && d2[r] > 0.0) {
                    pick = r;
                    break;
                }
            }
        }
        if (pick == m) {
            // all remaining distances zero (duplicates); pick any untaken point
            for (std::size_t r = 0; r < m; ++r) {
                if (!taken[r]) {
                    pick = r;
                    break;
                }
            }
            if (pick == m) pick = rng.below(m);
        }
        std::copy_n(mat.row(pick), mat.dims, centroids.row(c));
        taken[pick] = true;
    }
    return centroids;
}

// After an assignment pass, give every empty cluster the point farthest
// from its assigned centroid (centroid becomes that point). The stolen
// point lands at distance zero, so inertia never increases.
void repair_empty_clusters(const EmbeddingMatrix& mat, KMeansResult& result,
                           std::vector<std::size_t>& counts) {
    const std::size_t k = result.centroids.rows;
    const std::size_t p = mat.dims;
    std::fill(counts.begin(), counts.end(), std::size_t{0});
    for (auto a : result.assignment) ++counts[a];
    for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] > 0) continue;
        double worst = -1.0;
        std::size_t worst_r = 0;
        for (std::size_t r = 0; r < mat.rows; ++r) {
            if (counts[result.assignment[r]] <= 1) continue;  // keep donor clusters nonempty
            const double d = kern::sqdist(mat.row(r), result.centroids.row(result.assignment[r]), p);
            if (d > worst) {
                worst = d;
                worst_r = r;
            }
        }
        std::copy_n(mat.row(worst_r), p, result.centroids.row(c));
        --counts[result.assignment[worst_r]];
        result.assignment[worst_r] = static_cast<std::uint32_t>(c);
        counts[c] = 1;
    }
}

double inertia_of(const EmbeddingMatrix& mat, const KMeansResult& result) {
    double total = 0.0;
    for (std::size_t r = 0; r < mat.rows; ++r)
        total += kern::sqdist(mat.row(r), result.centroids.row(result.assignment[r]), mat.dims);
    return total;
}

KMeansResult lloyd(const EmbeddingMatrix& mat, std::size_t k, Rng& rng, std::size_t max_iter) {
    const std::size_t m = mat.rows;
    const std::size_t p = mat.dims;
    KMeansResult result;
    result.centroids = plus_plus_seed(mat, k, rng);
    result.assignment.assign(m, 0);

    double prev_inertia = std::numeric_limits<double>::infinity();
    std::vector<std::uint32_t> prev_assignment;
    std::vector<std::size_t> counts(k);

    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        assignment_pass(mat, result.centroids, result.assignment);
        repair_empty_clusters(mat, result, counts);
        const double inertia = inertia_of(mat, result);
        // Lloyd sweeps never increase inertia (small fp slack)
        if (inertia > prev_inertia * (1.0 + 1e-12) + 1e-12)
            fail("NonMonotoneInertia", "inertia increased across k-means iterations");
        result.inertia = inertia;
        result.iterations = iter + 1;
        if (result.assignment == prev_assignment) break;
        prev_assignment = result.assignment;
        prev_inertia = inertia;

        // update step: centroids become the means of their members
        std::fill(counts.begin(), counts.end(), std::size_t{0});
        std::fill(result.centroids.data.begin(), result.centroids.data.end(), 0.0);
        for (std::size_t r = 0; r < m; ++r) {
            kern::axpy(1.0, mat.row(r), result.centroids.row(result.assignment[r]), p);
            ++counts[result.assignment[r]];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] > 0) {
                kern::scale(1.0 / static_cast<double>(counts[c]), result.centroids.row(c), p);
            }
        }
    }
    return result;
}

} // namespace

KMeansResult kmeans(const EmbeddingMatrix& mat, std::size_t k, std::uint64_t seed,
                    std::size_t max_iter, std::size_t n_init) {
    mat.validate();
    if (k < 1 || k > mat.rows)
        fail("KTooLarge", "k = " + std::to_string(k) + " outside [1, m = " +
                              std::to_string(mat.rows) + "]");
    if (max_iter < 1) fail("InvalidConfig", "max_iter must be >= 1");
    n_init = std::max<std::size_t>(1, n_init);

    KMeansResult best;
    bool have = false;
    for (std::size_t restart = 0; restart < n_init; ++restart) {
        Rng rng = derived_rng(seed, restart);
        KMeansResult candidate = lloyd(mat, k, rng, max_iter);
        if (!have || candidate.inertia < best.inertia) {
            best = std::move(candidate);
            have = true;
        }
    }
    return best;
}

ElbowResult elbow_select(const EmbeddingMatrix& mat, std::vector<std::size_t> k_candidates,
                         std::uint64_t seed, std::size_t max_iter, std::size_t n_init) {
    std::sort(k_candidates.begin(), k_candidates.end());
    k_candidates.erase(std::unique(k_candidates.begin(), k_candidates.end()), k_candidates.end());
    if (k_candidates.size() < 3)
        fail("TooFewCandidates", "elbow selection needs >= 3 distinct candidates, got " +
                                     std::to_string(k_candidates.size()));

    ElbowResult result;
    result.candidates = k_candidates;
    result.inertias.reserve(k_candidates.size());
    for (std::size_t idx = 0; idx < k_candidates.size(); ++idx) {
        result.inertias.push_back(
            kmeans(mat, k_candidates[idx], derived_seed(seed, idx), max_iter, n_init).inertia);
    }

    const double total_drop = result.inertias.front() - result.inertias.back();
    double best_d2 = -std::numeric_limits<double>::infinity();
    std::size_t best_idx = 1;
    for (std::size_t t = 1; t + 1 < k_candidates.size(); ++t) {
        const double d2 =
            result.inertias[t - 1] - 2.0 * result.inertias[t] + result.inertias[t + 1];
        if (d2 > best_d2) {
            best_d2 = d2;
            best_idx = t;
        }
    }
    // Smooth featureless curves have decreasing second differences, so the
    // argmax collapses onto the first interior candidate; treat that (and a
    // flat curve) as "no knee" and return the smallest candidate, flagged.
    if (!(total_drop > 0.0) || best_idx == 1) {
        result.no_knee = true;
        result.k = k_candidates.front();
    } else {
        result.k = k_candidates[best_idx];
    }
    return result;
}

void SamplerConfig::validate() const {
    if (count < 1) fail("InvalidConfig", "triplet count n' must be >= 1");
}

TripletDataset sample_random(std::size_t m, const SamplerConfig& cfg) {
    cfg.validate();
    if (m < 3) fail("TooFewItems", "random sampling needs m >= 3, got " + std::to_string(m));
    Rng rng = derived_rng(cfg.seed, 0xABC);
    TripletDataset ds;
    ds.kind = LabelKind::none;
    ds.source_tag = "random(seed=" + std::to_string(cfg.seed) + ")";
    ds.triplets.reserve(cfg.count);
    for (std::size_t s = 0; s < cfg.count; ++s) {
        Triplet t;
        t.i = static_cast<std::uint32_t>(rng.below(m));
        do {
            t.j = static_cast<std::uint32_t>(rng.below(m));
        } while (t.j == t.i);
        do {
            t.k = static_cast<std::uint32_t>(rng.below(m));
        } while (t.k == t.i || t.k == t.j);
        ds.triplets.push_back(t);
    }
    return ds;
}

namespace {

// Shared boundary sampler: two items from one group, one from another.
TripletDataset sample_boundary(const std::vector<std::int64_t>& ids, const SamplerConfig& cfg,
                               const char* degenerate_code, const std::string& tag) {
    cfg.validate();
    std::map<std::int64_t, std::vector<std::uint32_t>> groups;
    std::size_t labeled = 0;
    for (std::size_t r = 0; r < ids.size(); ++r) {
        if (ids[r] < 0) continue;
        groups[ids[r]].push_back(static_cast<std::uint32_t>(r));
        ++labeled;
    }
    // groups eligible as the "same" side need >= 2 members and a nonempty complement
    std::vector<const std::vector<std::uint32_t>*> eligible;
    std::vector<double> weights;
    for (const auto& [id, members] : groups) {
        if (members.size() >= 2 && members.size() < labeled) {
            eligible.push_back(&members);
            weights.push_back(static_cast<double>(members.size()));
        }
    }
    if (eligible.empty())
        fail(degenerate_code, "no group with >= 2 members and a nonempty complement");

    std::vector<double> cumulative(weights.size());
    std::partial_sum(weights.begin(), weights.end(), cumulative.begin());
    const double total_weight = cumulative.back();

    Rng rng = derived_rng(cfg.seed, 0xB0D);
    TripletDataset ds;
    ds.kind = LabelKind::none;
    ds.source_tag = tag;
    ds.triplets.reserve(cfg.count);
    for (std::size_t s = 0; s < cfg.count; ++s) {
        // group w.p. proportional to size
        const double target = rng.uniform() * total_weight;
        std::size_t gi = static_cast<std::size_t>(
            std::lower_bound(cumulative.begin(), cumulative.end(), target) - cumulative.begin());
        if (gi >= eligible.size()) gi = eligible.size() - 1;
        const auto& members = *eligible[gi];
        // two members without replacement
        const std::size_t a = rng.below(members.size());
        std::size_t b;
        do {
            b = rng.below(members.size());
        } while (b == a);
        // odd item uniform over the labeled complement
        std::uint32_t odd;
        do {
            std::size_t pick = rng.below(labeled);
            // walk groups to the pick-th labeled item
            odd = 0;
            for (const auto& [id, mem] : groups) {
                if (pick < mem.size()) {
                    odd = mem[pick];
                    break;
                }
                pick -= mem.size();
            }
        } while (ids[odd] == ids[members[a]]);
        // placement of the same-group pair is randomized per draw
        std::uint32_t slots[3] = {members[a], members[b], odd};
        const std::size_t odd_slot = rng.below(3);
        std::swap(slots[2], slots[odd_slot]);
        ds.triplets.push_back(Triplet{slots[0], slots[1], slots[2]});
    }
    return ds;
}

} // namespace

TripletDataset sample_class_boundary(const HierarchyLabels& labels, const SamplerConfig& cfg,
                                     LabelLevel level) {
    const std::vector<std::int64_t>* ids = &labels.subordinate;
    if (level == LabelLevel::basic) ids = &labels.basic;
    if (level == LabelLevel::superordinate) ids = &labels.superordinate;
    return sample_boundary(*ids, cfg, "DegenerateLabels",
                           "class_boundary(seed=" + std::to_string(cfg.seed) + ")");
}

TripletDataset sample_cluster_boundary(const KMeansResult& km, const SamplerConfig& cfg) {
    std::vector<std::int64_t> ids(km.assignment.size());
    for (std::size_t r = 0; r < ids.size(); ++r) ids[r] = static_cast<std::int64_t>(km.assignment[r]);
    return sample_boundary(ids, cfg, "DegenerateClusters",
                           "cluster_boundary(k=" + std::to_string(km.centroids.rows) +
                               ",seed=" + std::to_string(cfg.seed) + ")");
}

} // namespace alignet
