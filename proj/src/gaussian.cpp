#include "alignet/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "alignet/kernels.hpp"
#include "alignet/rng.hpp"
#include "alignet/triplet.hpp"

namespace alignet {

void McConfig::validate() const {
    if (samples < 1) fail("InvalidConfig", "Monte-Carlo sample count R must be >= 1");
}

void GaussianFitConfig::validate() const {
    if (dim < 1) fail("InvalidConfig", "embedding dim must be >= 1");
    if (steps < 1) fail("InvalidConfig", "steps must be >= 1");
    if (batch_size < 1) fail("InvalidConfig", "batch_size must be >= 1");
}

EmbeddingMatrix sample_embedding(const GaussianEmbedding& g, std::span<const double> eps) {
    if (eps.size() != g.mu.size())
        fail("DimensionMismatch", "eps has " + std::to_string(eps.size()) + " entries, expected " +
                                      std::to_string(g.mu.size()));
    EmbeddingMatrix out(g.items, g.dim);
    for (std::size_t idx = 0; idx < g.mu.size(); ++idx) {
        out.data[idx] = g.mu[idx] + std::exp(g.log_sigma[idx]) * eps[idx];
    }
    return out;
}

std::vector<ProbTriple> mc_triplet_probs(const GaussianEmbedding& g,
                                         std::span<const Triplet> triplets, const McConfig& cfg) {
    cfg.validate();
    for (const Triplet& t : triplets) {
        if (t.i >= g.items || t.j >= g.items || t.k >= g.items)
            fail("IndexOutOfRange", "triplet indexes beyond m = " + std::to_string(g.items));
    }
    std::vector<ProbTriple> mean(triplets.size());
    std::vector<double> eps(g.mu.size());
    const Temperature tau(1.0);
    for (std::size_t r = 0; r < cfg.samples; ++r) {
        // per-sample derived stream (seed, r): results are independent of
        // any parallel schedule over r
        Rng rng = derived_rng(cfg.seed, r);
        for (auto& e : eps) e = rng.normal();
        const EmbeddingMatrix y = sample_embedding(g, eps);
        for (std::size_t s = 0; s < triplets.size(); ++s) {
            const ProbTriple q =
                triplet_probs(pairwise_similarity(y, triplets[s].i, triplets[s].j, triplets[s].k), tau);
            mean[s].q_ij += q.q_ij;
            mean[s].q_ik += q.q_ik;
            mean[s].q_jk += q.q_jk;
        }
    }
    const double inv_r = 1.0 / static_cast<double>(cfg.samples);
    for (auto& q : mean) {
        q.q_ij *= inv_r;
        q.q_ik *= inv_r;
        q.q_jk *= inv_r;
    }
    return mean;
}

GaussianFit fit_gaussian_embeddings(const TripletDataset& ds, std::size_t items,
                                    const GaussianFitConfig& cfg) {
    cfg.validate();
    if (ds.size() == 0) fail("EmptyDataset", "cannot fit on zero triplets");
    if (!ds.has_hard()) fail("LabelKindMismatch", "hard choices required");
    for (const Triplet& t : ds.triplets) {
        if (t.i >= items || t.j >= items || t.k >= items)
            fail("IndexOutOfRange", "triplet indexes beyond m = " + std::to_string(items));
    }

    const std::size_t m = items;
    const std::size_t d = cfg.dim;
    GaussianEmbedding g(m, d, cfg.log_sigma_init);
    Rng init_rng = derived_rng(cfg.seed, 0x1417);
    for (auto& v : g.mu) v = cfg.mu_init_scale * init_rng.normal();

    std::vector<int> chosen(ds.size());
    for (std::size_t s = 0; s < ds.size(); ++s)
        chosen[s] = choice_pair_index(ds.triplets[s], ds.hard[s]);

    // flat parameter vector: [mu, log_sigma]
    std::vector<double> params(2 * m * d);
    std::copy(g.mu.begin(), g.mu.end(), params.begin());
    std::copy(g.log_sigma.begin(), g.log_sigma.end(), params.begin() + static_cast<std::ptrdiff_t>(m * d));
    Optimizer opt(cfg.optimizer, params.size());

    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng = derived_rng(cfg.seed, 0x51AFF1E);

    const std::size_t steps_per_epoch =
        std::max<std::size_t>(1, (ds.size() + cfg.batch_size - 1) / cfg.batch_size);
    const double reg_norm = 1.0 / static_cast<double>(m * d);

    std::vector<double> grad(params.size());
    std::vector<double> eps(m * d);
    GaussianFit fit;

    std::size_t step = 0;
    std::size_t epoch = 0;
    while (step < cfg.steps) {
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.below(i)]);
        double epoch_loss = 0.0;
        std::size_t epoch_count = 0;
        for (std::size_t batch = 0; batch < steps_per_epoch && step < cfg.steps; ++batch, ++step) {
            const std::size_t lo = batch * cfg.batch_size;
            const std::size_t hi = std::min(lo + cfg.batch_size, ds.size());
            if (lo >= hi) break;
            std::fill(grad.begin(), grad.end(), 0.0);

            // single-sample reparameterized draw for this step
            Rng eps_rng = derived_rng(cfg.seed, 0xE50000 + step);
            double* mu = params.data();
            double* ls = params.data() + m * d;
            for (std::size_t idx = 0; idx < m * d; ++idx) eps[idx] = eps_rng.normal();

            const double inv_b = 1.0 / static_cast<double>(hi - lo);
            double loss = 0.0;
            const Temperature tau(1.0);
            for (std::size_t pos = lo; pos < hi; ++pos) {
                const std::size_t s = order[pos];
                const Triplet& tri = ds.triplets[s];
                const std::uint32_t item[3] = {tri.i, tri.j, tri.k};
                double y[3 * 64];
                std::vector<double> y_dyn;
                double* yrow[3];
                for (int v = 0; v < 3; ++v) {
                    double* dst;
                    if (d <= 64) {
                        dst = y + static_cast<std::size_t>(v) * d;
                    } else {
                        if (y_dyn.empty()) y_dyn.resize(3 * d);
                        dst = y_dyn.data() + static_cast<std::size_t>(v) * d;
                    }
                    const std::size_t base = item[v] * d;
                    for (std::size_t c = 0; c < d; ++c)
                        dst[c] = mu[base + c] + std::exp(ls[base + c]) * eps[base + c];
                    yrow[v] = dst;
                }
                TripletSimilarities sim;
                sim.s_ij = kern::dot(yrow[0], yrow[1], d);
                sim.s_ik = kern::dot(yrow[0], yrow[2], d);
                sim.s_jk = kern::dot(yrow[1], yrow[2], d);
                const ProbTriple q = triplet_probs(sim, tau);
                loss -= inv_b * std::log(std::max(q[chosen[s]], 1e-300));

                // d(-log q_chosen)/ds_pair = q_pair - onehot_pair
                const int pair_a[3] = {0, 0, 1};
                const int pair_b[3] = {1, 2, 2};
                for (int pair = 0; pair < 3; ++pair) {
                    const double gq = inv_b * (q[pair] - (pair == chosen[s] ? 1.0 : 0.0));
                    if (gq == 0.0) continue;
                    const int a = pair_a[pair];
                    const int b = pair_b[pair];
                    const std::size_t base_a = item[a] * d;
                    const std::size_t base_b = item[b] * d;
                    for (std::size_t c = 0; c < d; ++c) {
                        const double dya = gq * yrow[b][c];
                        const double dyb = gq * yrow[a][c];
                        grad[base_a + c] += dya;
                        grad[base_b + c] += dyb;
                        // dy/dlog_sigma = sigma * eps = y - mu
                        grad[m * d + base_a + c] += dya * (yrow[a][c] - mu[base_a + c]);
                        grad[m * d + base_b + c] += dyb * (yrow[b][c] - mu[base_b + c]);
                    }
                }
            }

            // L2 penalty on mu and on log-sigma deviations from init
            for (std::size_t idx = 0; idx < m * d; ++idx) {
                loss += cfg.l2_mu * reg_norm * mu[idx] * mu[idx];
                const double dls = ls[idx] - cfg.log_sigma_init;
                loss += cfg.l2_log_sigma * reg_norm * dls * dls;
                grad[idx] += 2.0 * cfg.l2_mu * reg_norm * mu[idx];
                grad[m * d + idx] += 2.0 * cfg.l2_log_sigma * reg_norm * dls;
            }
            if (!std::isfinite(loss))
                fail("NonFiniteLoss", "non-finite loss at step " + std::to_string(step));
            epoch_loss += loss;
            ++epoch_count;
            opt.step(params, grad);
        }
        ++epoch;
        if (epoch_count > 0) fit.epoch_loss.push_back(epoch_loss / static_cast<double>(epoch_count));
    }

    std::copy(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(m * d), g.mu.begin());
    std::copy(params.begin() + static_cast<std::ptrdiff_t>(m * d), params.end(), g.log_sigma.begin());
    fit.embedding = std::move(g);
    return fit;
}

} // namespace alignet
