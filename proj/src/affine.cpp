#include "alignet/affine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "alignet/io.hpp"
#include "alignet/kernels.hpp"
#include "alignet/par.hpp"
#include "alignet/rng.hpp"

namespace alignet {

namespace {

void require_soft(const TripletDataset& ds) {
    if (ds.size() == 0) fail("EmptyDataset", "soft-labeled triplets required");
    if (!ds.has_soft()) fail("LabelKindMismatch", "dataset carries no soft labels");
}

void require_dims(const AffineTransform& t, const EmbeddingMatrix& mat) {
    if (t.dim != mat.dims)
        fail("DimensionMismatch", "transform is " + std::to_string(t.dim) + "-dimensional, matrix is " +
                                      std::to_string(mat.dims));
}

EmbeddingMatrix maybe_normalize(const EmbeddingMatrix& mat, bool normalize) {
    if (!normalize) return mat;
    EmbeddingMatrix out = mat;
    for (std::size_t r = 0; r < out.rows; ++r) {
        const double norm = std::sqrt(kern::dot(out.row(r), out.row(r), out.dims));
        if (norm > 0.0) kern::scale(1.0 / norm, out.row(r), out.dims);
    }
    return out;
}

// Per-triplet contribution to the soft loss and its gradient, shared by
// objective/gradient/fit paths. Positions: u = W x + b for the three items.
struct TripletWork {
    std::vector<double> u;  // 3 * p
    TripletWork(std::size_t p) : u(3 * p) {}
};

double triplet_soft_loss(const AffineTransform& t, const EmbeddingMatrix& mat, const Triplet& tri,
                         const ProbTriple& target, double tau, TripletWork& work,
                         ProbTriple* q_out = nullptr) {
    const std::size_t p = t.dim;
    const std::uint32_t items[3] = {tri.i, tri.j, tri.k};
    for (int v = 0; v < 3; ++v) {
        double* u = work.u.data() + static_cast<std::size_t>(v) * p;
        const double* x = mat.row(items[v]);
        for (std::size_t r = 0; r < p; ++r) u[r] = kern::dot(t.weight.data() + r * p, x, p) + t.bias[r];
    }
    const double* ui = work.u.data();
    const double* uj = work.u.data() + p;
    const double* uk = work.u.data() + 2 * p;
    TripletSimilarities s;
    s.s_ij = kern::dot(ui, uj, p);
    s.s_ik = kern::dot(ui, uk, p);
    s.s_jk = kern::dot(uj, uk, p);
    const ProbTriple q = triplet_probs(s, Temperature(tau));
    if (q_out) *q_out = q;
    return kl_divergence(target, q);
}

// Accumulates d(soft loss for one triplet)/dW and /db, scaled by `scale`.
void triplet_soft_grad(const AffineTransform& t, const EmbeddingMatrix& mat, const Triplet& tri,
                       const ProbTriple& target, double tau, double scale, TripletWork& work,
                       std::vector<double>& d_weight, std::vector<double>& d_bias) {
    const std::size_t p = t.dim;
    ProbTriple q;
    triplet_soft_loss(t, mat, tri, target, tau, work, &q);
    const double* u[3] = {work.u.data(), work.u.data() + p, work.u.data() + 2 * p};
    const double* x[3] = {mat.row(tri.i), mat.row(tri.j), mat.row(tri.k)};
    // d(KL)/ds_pair = (q - p*) / tau; pair order (i,j), (i,k), (j,k)
    const int pair_a[3] = {0, 0, 1};
    const int pair_b[3] = {1, 2, 2};
    for (int pair = 0; pair < 3; ++pair) {
        const double g = scale * (q[pair] - target[pair]) / tau;
        if (g == 0.0) continue;
        const int a = pair_a[pair];
        const int b = pair_b[pair];
        // s_ab = u_a . u_b, so dW += g * (u_b x_a^T + u_a x_b^T), db += g * (u_a + u_b)
        for (std::size_t r = 0; r < p; ++r) {
            double* dw_row = d_weight.data() + r * p;
            kern::axpy(g * u[b][r], x[a], dw_row, p);
            kern::axpy(g * u[a][r], x[b], dw_row, p);
            d_bias[r] += g * (u[a][r] + u[b][r]);
        }
    }
}

struct GradAccum {
    std::vector<double> d_weight;
    std::vector<double> d_bias;
    double loss = 0.0;
};

// Blocked deterministic reduction over a list of triplet positions.
GradAccum batch_soft_gradient(const AffineTransform& t, const EmbeddingMatrix& mat,
                              const TripletDataset& ds, const std::vector<std::size_t>& order,
                              std::size_t lo, std::size_t hi, double tau, double inv_n,
                              int threads) {
    const std::size_t p = t.dim;
    GradAccum total;
    total.d_weight.assign(p * p, 0.0);
    total.d_bias.assign(p, 0.0);
    blocked_reduce(
        hi - lo, threads,
        [&](std::size_t b0, std::size_t b1) {
            GradAccum acc;
            acc.d_weight.assign(p * p, 0.0);
            acc.d_bias.assign(p, 0.0);
            TripletWork work(p);
            for (std::size_t pos = b0; pos < b1; ++pos) {
                const std::size_t s = order[lo + pos];
                acc.loss += inv_n * triplet_soft_loss(t, mat, ds.triplets[s], ds.soft[s], tau, work);
                triplet_soft_grad(t, mat, ds.triplets[s], ds.soft[s], tau, inv_n, work,
                                  acc.d_weight, acc.d_bias);
            }
            return acc;
        },
        [&](std::size_t, GradAccum partial) {
            total.loss += partial.loss;
            for (std::size_t i = 0; i < total.d_weight.size(); ++i)
                total.d_weight[i] += partial.d_weight[i];
            for (std::size_t i = 0; i < total.d_bias.size(); ++i) total.d_bias[i] += partial.d_bias[i];
        });
    return total;
}

double soft_loss_over(const AffineTransform& t, const EmbeddingMatrix& mat,
                      const TripletDataset& ds, const std::vector<std::size_t>& subset, double tau,
                      int threads) {
    if (subset.empty()) return 0.0;
    double total = 0.0;
    blocked_reduce(
        subset.size(), threads,
        [&](std::size_t lo, std::size_t hi) {
            TripletWork work(t.dim);
            double partial = 0.0;
            for (std::size_t pos = lo; pos < hi; ++pos) {
                const std::size_t s = subset[pos];
                partial += triplet_soft_loss(t, mat, ds.triplets[s], ds.soft[s], tau, work);
            }
            return partial;
        },
        [&](std::size_t, double partial) { total += partial; });
    return total / static_cast<double>(subset.size());
}

} // namespace

AffineTransform AffineTransform::identity(std::size_t p) {
    AffineTransform t;
    t.dim = p;
    t.weight.assign(p * p, 0.0);
    t.bias.assign(p, 0.0);
    for (std::size_t r = 0; r < p; ++r) t.weight[r * p + r] = 1.0;
    return t;
}

void AffineTransform::validate() const {
    if (dim == 0) fail("EmptyMatrix", "transform has p = 0");
    if (weight.size() != dim * dim || bias.size() != dim)
        fail("DimensionMismatch", "transform buffers do not match p = " + std::to_string(dim));
    for (double v : weight)
        if (!std::isfinite(v)) fail("NonFiniteValue", "non-finite transform weight");
    for (double v : bias)
        if (!std::isfinite(v)) fail("NonFiniteValue", "non-finite transform bias");
}

void UdConfig::validate() const {
    if (lambda < 0.0) fail("InvalidConfig", "lambda must be >= 0");
    if (steps < 1) fail("InvalidConfig", "steps must be >= 1");
    if (batch_size < 1) fail("InvalidConfig", "batch_size must be >= 1");
    if (!(tau > 0.0)) fail("InvalidConfig", "tau must be > 0");
    if (val_fraction < 0.0 || val_fraction >= 1.0)
        fail("InvalidConfig", "val_fraction must be in [0, 1)");
}

EmbeddingMatrix apply_affine(const AffineTransform& t, const EmbeddingMatrix& mat) {
    t.validate();
    require_dims(t, mat);
    EmbeddingMatrix out(mat.rows, mat.dims);
    out.item_ids = mat.item_ids;
    const std::size_t p = t.dim;
    for (std::size_t r = 0; r < mat.rows; ++r) {
        const double* x = mat.row(r);
        double* y = out.row(r);
        for (std::size_t row = 0; row < p; ++row)
            y[row] = kern::dot(t.weight.data() + row * p, x, p) + t.bias[row];
    }
    return out;
}

double ud_regularizer(const AffineTransform& t) {
    const std::size_t p = t.dim;
    double trace = 0.0;
    for (std::size_t r = 0; r < p; ++r) trace += t.w(r, r);
    const double c = trace / static_cast<double>(p);
    double value = 0.0;
    for (std::size_t r = 0; r < p; ++r) {
        for (std::size_t col = 0; col < p; ++col) {
            const double d = t.w(r, col) - (r == col ? c : 0.0);
            value += d * d;
        }
    }
    return value;
}

double ud_objective(const AffineTransform& t, const EmbeddingMatrix& mat, const TripletDataset& ds,
                    const UdConfig& cfg) {
    cfg.validate();
    require_soft(ds);
    require_dims(t, mat);
    validate_pairing(mat, ds);
    const EmbeddingMatrix& input = mat;
    std::vector<std::size_t> all(ds.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    const EmbeddingMatrix normalized = maybe_normalize(input, cfg.normalize_rows);
    return soft_loss_over(t, normalized, ds, all, cfg.tau, cfg.threads) +
           cfg.lambda * ud_regularizer(t);
}

UdGradients ud_gradients(const AffineTransform& t, const EmbeddingMatrix& mat,
                         const TripletDataset& ds, const UdConfig& cfg) {
    cfg.validate();
    require_soft(ds);
    require_dims(t, mat);
    validate_pairing(mat, ds);
    const EmbeddingMatrix normalized = maybe_normalize(mat, cfg.normalize_rows);
    const std::size_t p = t.dim;
    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    GradAccum acc = batch_soft_gradient(t, normalized, ds, order, 0, order.size(), cfg.tau,
                                        1.0 / static_cast<double>(ds.size()), cfg.threads);
    // regularizer gradient: 2 (W - (tr W / p) I); the trace projection drops
    // out because the deviation is trace-free
    double trace = 0.0;
    for (std::size_t r = 0; r < p; ++r) trace += t.w(r, r);
    const double c = trace / static_cast<double>(p);
    for (std::size_t r = 0; r < p; ++r) {
        for (std::size_t col = 0; col < p; ++col) {
            acc.d_weight[r * p + col] +=
                cfg.lambda * 2.0 * (t.w(r, col) - (r == col ? c : 0.0));
        }
    }
    return UdGradients{std::move(acc.d_weight), std::move(acc.d_bias)};
}

void FitLog::save(const std::string& path) const {
    std::ostringstream out;
    out << "epoch\tobjective\tsoft_loss\treg\tgrad_norm_w\tgrad_norm_b\tval_loss\tseed\n";
    for (const auto& e : epochs) {
        char buf[320];
        std::snprintf(buf, sizeof(buf), "%zu\t%.17g\t%.17g\t%.17g\t%.17g\t%.17g\t%.17g\t%llu\n",
                      e.epoch, e.objective, e.soft_loss, e.reg, e.grad_norm_w, e.grad_norm_b,
                      e.val_loss, static_cast<unsigned long long>(seed));
        out << buf;
    }
    std::ofstream f(path, std::ios::trunc);
    if (!f) fail("IoFailure", "cannot write '" + path + "'");
    f << out.str();
}

UdFit fit_ud(const EmbeddingMatrix& mat, const TripletDataset& ds, const UdConfig& cfg) {
    cfg.validate();
    require_soft(ds);
    validate_pairing(mat, ds);
    const EmbeddingMatrix input = maybe_normalize(mat, cfg.normalize_rows);
    const std::size_t p = input.dims;
    const std::size_t n = ds.size();

    // 90/10 split by triplet, seeded
    Rng split_rng = derived_rng(cfg.seed, 0x51D);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[split_rng.below(i)]);
    const std::size_t n_val = static_cast<std::size_t>(static_cast<double>(n) * cfg.val_fraction);
    std::vector<std::size_t> val(order.begin(), order.begin() + n_val);
    std::vector<std::size_t> train(order.begin() + n_val, order.end());
    if (train.empty()) fail("EmptyDataset", "no training triplets after validation split");

    AffineTransform t = AffineTransform::identity(p);
    UdConfig full_cfg = cfg;

    const auto full_objective = [&](const AffineTransform& cur) {
        std::vector<std::size_t> all(n);
        std::iota(all.begin(), all.end(), std::size_t{0});
        return soft_loss_over(cur, input, ds, all, cfg.tau, cfg.threads) +
               cfg.lambda * ud_regularizer(cur);
    };

    std::vector<double> params(p * p + p);
    const auto pack = [&](const AffineTransform& src) {
        std::copy(src.weight.begin(), src.weight.end(), params.begin());
        std::copy(src.bias.begin(), src.bias.end(), params.begin() + static_cast<std::ptrdiff_t>(p * p));
    };
    const auto unpack = [&]() {
        std::copy(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(p * p), t.weight.begin());
        std::copy(params.begin() + static_cast<std::ptrdiff_t>(p * p), params.end(), t.bias.begin());
    };
    pack(t);

    Optimizer opt(cfg.optimizer, params.size());
    Rng shuffle_rng = derived_rng(cfg.seed, 0xA11F);

    const std::size_t steps_per_epoch =
        std::max<std::size_t>(1, (train.size() + cfg.batch_size - 1) / cfg.batch_size);
    FitLog log;
    log.seed = cfg.seed;

    AffineTransform best = t;
    double best_val = soft_loss_over(t, input, ds, val, cfg.tau, cfg.threads);
    std::size_t epochs_since_best = 0;
    std::vector<double> grad(params.size());

    std::size_t step = 0;
    std::size_t epoch = 0;
    while (step < cfg.steps) {
        for (std::size_t i = train.size(); i > 1; --i)
            std::swap(train[i - 1], train[shuffle_rng.below(i)]);
        double epoch_grad_w = 0.0, epoch_grad_b = 0.0;
        for (std::size_t batch = 0; batch < steps_per_epoch && step < cfg.steps; ++batch, ++step) {
            const std::size_t lo = batch * cfg.batch_size;
            const std::size_t hi = std::min(lo + cfg.batch_size, train.size());
            if (lo >= hi) break;
            GradAccum acc = batch_soft_gradient(t, input, ds, train, lo, hi, cfg.tau,
                                                1.0 / static_cast<double>(hi - lo), cfg.threads);
            if (!std::isfinite(acc.loss))
                fail("NonFiniteLoss", "non-finite loss at step " + std::to_string(step));
            double trace = 0.0;
            for (std::size_t r = 0; r < p; ++r) trace += t.w(r, r);
            const double c = trace / static_cast<double>(p);
            for (std::size_t r = 0; r < p; ++r)
                for (std::size_t col = 0; col < p; ++col)
                    acc.d_weight[r * p + col] += cfg.lambda * 2.0 * (t.w(r, col) - (r == col ? c : 0.0));
            std::copy(acc.d_weight.begin(), acc.d_weight.end(), grad.begin());
            std::copy(acc.d_bias.begin(), acc.d_bias.end(),
                      grad.begin() + static_cast<std::ptrdiff_t>(p * p));
            for (double g : grad)
                if (!std::isfinite(g))
                    fail("NonFiniteLoss", "non-finite gradient at step " + std::to_string(step));
            epoch_grad_w += std::sqrt(kern::dot(acc.d_weight.data(), acc.d_weight.data(), p * p));
            epoch_grad_b += std::sqrt(kern::dot(acc.d_bias.data(), acc.d_bias.data(), p));
            opt.step(params, grad);
            unpack();
        }
        ++epoch;

        EpochStats stats;
        stats.epoch = epoch;
        std::vector<std::size_t> all(n);
        std::iota(all.begin(), all.end(), std::size_t{0});
        stats.soft_loss = soft_loss_over(t, input, ds, all, cfg.tau, cfg.threads);
        stats.reg = ud_regularizer(t);
        stats.objective = stats.soft_loss + cfg.lambda * stats.reg;
        stats.grad_norm_w = epoch_grad_w / static_cast<double>(steps_per_epoch);
        stats.grad_norm_b = epoch_grad_b / static_cast<double>(steps_per_epoch);
        stats.val_loss = val.empty() ? stats.soft_loss : soft_loss_over(t, input, ds, val, cfg.tau, cfg.threads);
        log.epochs.push_back(stats);
        if (!std::isfinite(stats.objective))
            fail("NonFiniteLoss", "non-finite objective after epoch " + std::to_string(epoch));

        const double monitor = val.empty() ? stats.objective : stats.val_loss;
        if (monitor < best_val) {
            best_val = monitor;
            best = t;
            epochs_since_best = 0;
        } else if (++epochs_since_best >= cfg.patience) {
            break;
        }
    }

    // Contract: the returned transform never scores worse than the identity
    // start on the full data.
    const AffineTransform init = AffineTransform::identity(p);
    if (full_objective(best) > full_objective(init)) best = init;
    (void)full_cfg;
    return UdFit{std::move(best), std::move(log)};
}

} // namespace alignet
