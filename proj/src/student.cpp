#include "alignet/student.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "alignet/kernels.hpp"
#include "alignet/par.hpp"
#include "alignet/rng.hpp"

namespace alignet {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

double gelu_derivative(double x) {
    return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

// Layer l parameters live at [offset_l, offset_l + out*in + out):
// W (out x in, row-major) then b.
std::vector<std::size_t> layer_offsets(const StudentArch& arch) {
    std::vector<std::size_t> offsets(arch.layers() + 1, 0);
    for (std::size_t l = 0; l < arch.layers(); ++l) {
        offsets[l + 1] = offsets[l] + arch.widths[l + 1] * arch.widths[l] + arch.widths[l + 1];
    }
    return offsets;
}

// Forward pass for one input row; keeps pre-activations for backprop.
struct ForwardScratch {
    std::vector<std::vector<double>> pre;   // per layer, size widths[l+1]
    std::vector<std::vector<double>> post;  // post[0] = input copy
};

void forward_row(const StudentParams& sp, const double* x, ForwardScratch& scratch) {
    const StudentArch& arch = sp.arch;
    const auto offsets = layer_offsets(arch);
    scratch.pre.resize(arch.layers());
    scratch.post.resize(arch.layers() + 1);
    scratch.post[0].assign(x, x + arch.widths[0]);
    for (std::size_t l = 0; l < arch.layers(); ++l) {
        const std::size_t in = arch.widths[l];
        const std::size_t out = arch.widths[l + 1];
        const double* w = sp.theta.data() + offsets[l];
        const double* b = w + out * in;
        auto& pre = scratch.pre[l];
        auto& post = scratch.post[l + 1];
        pre.resize(out);
        post.resize(out);
        const double* src = scratch.post[l].data();
        for (std::size_t r = 0; r < out; ++r) pre[r] = kern::dot(w + r * in, src, in) + b[r];
        const bool last = l + 1 == arch.layers();
        if (last || arch.nonlin == Nonlinearity::identity) {
            post = pre;
        } else {
            for (std::size_t r = 0; r < out; ++r) post[r] = gelu(pre[r]);
        }
    }
}

// Backprop d(loss)/d(output row) into the flat gradient.
void backward_row(const StudentParams& sp, const ForwardScratch& scratch,
                  std::vector<double>& d_out, std::vector<double>& grad) {
    const StudentArch& arch = sp.arch;
    const auto offsets = layer_offsets(arch);
    std::vector<double> delta = d_out;
    for (std::size_t l = arch.layers(); l-- > 0;) {
        const std::size_t in = arch.widths[l];
        const std::size_t out = arch.widths[l + 1];
        const double* w = sp.theta.data() + offsets[l];
        double* gw = grad.data() + offsets[l];
        double* gb = gw + out * in;
        const bool last = l + 1 == arch.layers();
        if (!last && arch.nonlin == Nonlinearity::gelu) {
            for (std::size_t r = 0; r < out; ++r) delta[r] *= gelu_derivative(scratch.pre[l][r]);
        }
        const double* src = scratch.post[l].data();
        for (std::size_t r = 0; r < out; ++r) {
            kern::axpy(delta[r], src, gw + r * in, in);
            gb[r] += delta[r];
        }
        if (l > 0) {
            std::vector<double> next(in, 0.0);
            for (std::size_t r = 0; r < out; ++r) kern::axpy(delta[r], w + r * in, next.data(), in);
            delta = std::move(next);
        }
    }
}

struct BatchAccum {
    double kl = 0.0;
    std::vector<double> grad;
};

// KL term and its gradient over triplets [lo, hi) of `order`, deterministic
// blocked reduction, no regularizer.
BatchAccum kl_batch(const StudentParams& sp, const TripletDataset& ds,
                    const EmbeddingMatrix& inputs, const std::vector<std::size_t>& order,
                    std::size_t lo, std::size_t hi, double tau_student, int threads,
                    bool want_grad) {
    const double inv_b = 1.0 / static_cast<double>(hi - lo);
    BatchAccum total;
    total.grad.assign(want_grad ? sp.theta.size() : 0, 0.0);
    blocked_reduce(
        hi - lo, threads,
        [&](std::size_t b0, std::size_t b1) {
            BatchAccum acc;
            acc.grad.assign(want_grad ? sp.theta.size() : 0, 0.0);
            ForwardScratch scratch[3];
            const std::size_t out_dim = sp.arch.widths.back();
            std::vector<double> d_out(out_dim);
            for (std::size_t pos = b0; pos < b1; ++pos) {
                const std::size_t s = order[lo + pos];
                const Triplet& t = ds.triplets[s];
                const std::uint32_t item[3] = {t.i, t.j, t.k};
                for (int v = 0; v < 3; ++v) forward_row(sp, inputs.row(item[v]), scratch[v]);
                const double* z[3] = {scratch[0].post.back().data(), scratch[1].post.back().data(),
                                      scratch[2].post.back().data()};
                TripletSimilarities sim;
                sim.s_ij = kern::dot(z[0], z[1], out_dim);
                sim.s_ik = kern::dot(z[0], z[2], out_dim);
                sim.s_jk = kern::dot(z[1], z[2], out_dim);
                const ProbTriple q = triplet_probs(sim, Temperature(tau_student));
                const ProbTriple& target = ds.soft[s];
                acc.kl += inv_b * kl_divergence(target, q);
                if (!want_grad) continue;
                const int pair_a[3] = {0, 0, 1};
                const int pair_b[3] = {1, 2, 2};
                for (int v = 0; v < 3; ++v) {
                    std::fill(d_out.begin(), d_out.end(), 0.0);
                    bool touched = false;
                    for (int pair = 0; pair < 3; ++pair) {
                        if (pair_a[pair] != v && pair_b[pair] != v) continue;
                        const double g = inv_b * (q[pair] - target[pair]) / tau_student;
                        const int other = pair_a[pair] == v ? pair_b[pair] : pair_a[pair];
                        kern::axpy(g, z[other], d_out.data(), out_dim);
                        touched = true;
                    }
                    if (touched) backward_row(sp, scratch[v], d_out, acc.grad);
                }
            }
            return acc;
        },
        [&](std::size_t, BatchAccum partial) {
            total.kl += partial.kl;
            for (std::size_t i = 0; i < total.grad.size(); ++i) total.grad[i] += partial.grad[i];
        });
    return total;
}

double reg_term(const StudentParams& sp, double lambda) {
    double sq = 0.0;
    for (std::size_t i = 0; i < sp.theta.size(); ++i) {
        const double d = sp.theta[i] - sp.theta_init[i];
        sq += d * d;
    }
    return lambda * sq;
}

void require_inputs(const StudentParams& sp, const EmbeddingMatrix& inputs) {
    if (inputs.dims != sp.arch.widths.front())
        fail("DimensionMismatch", "inputs are " + std::to_string(inputs.dims) +
                                      "-dimensional, architecture expects " +
                                      std::to_string(sp.arch.widths.front()));
}

void require_dataset(const TripletDataset& ds, const EmbeddingMatrix& inputs) {
    if (ds.size() == 0) fail("EmptyBatch", "no triplets to distill from");
    if (!ds.has_soft()) fail("LabelKindMismatch", "teacher labels must carry soft triples");
    for (const Triplet& t : ds.triplets) {
        if (t.i >= inputs.rows || t.j >= inputs.rows || t.k >= inputs.rows)
            fail("IndexOutOfRange", "triplet indexes beyond input rows");
    }
}

double hard_agreement(const StudentParams& sp, const TripletDataset& ds,
                      const EmbeddingMatrix& inputs, const std::vector<std::size_t>& subset) {
    if (subset.empty() || !ds.has_hard()) return 0.0;
    const EmbeddingMatrix z = student_forward(sp, inputs);
    std::size_t agree = 0;
    for (std::size_t s : subset) {
        const Triplet& t = ds.triplets[s];
        const int model_odd = odd_one_out(pairwise_similarity(z, t.i, t.j, t.k));
        const int label_odd = odd_position_of_pair(choice_pair_index(t, ds.hard[s]));
        if (model_odd == label_odd) ++agree;
    }
    return static_cast<double>(agree) / static_cast<double>(subset.size());
}

} // namespace

std::size_t StudentArch::param_count() const {
    std::size_t count = 0;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) count += widths[l + 1] * widths[l] + widths[l + 1];
    return count;
}

void StudentArch::validate() const {
    if (widths.size() < 2) fail("InvalidConfig", "architecture needs input and output widths");
    for (std::size_t w : widths)
        if (w == 0) fail("InvalidConfig", "architecture widths must be positive");
}

void DistillConfig::validate() const {
    if (!(tau_teacher > 0.0) || !(tau_student > 0.0))
        fail("InvalidConfig", "temperatures must be positive");
    if (lambda < 0.0) fail("InvalidConfig", "lambda must be >= 0");
    if (batch_size < 1) fail("InvalidConfig", "batch_size must be >= 1");
    if (steps < 1) fail("InvalidConfig", "steps must be >= 1");
    if (val_fraction < 0.0 || val_fraction >= 1.0)
        fail("InvalidConfig", "val_fraction must be in [0, 1)");
}

StudentParams StudentParams::affine_identity(std::size_t p) {
    StudentParams sp;
    sp.arch.widths = {p, p};
    sp.arch.nonlin = Nonlinearity::identity;
    sp.theta.assign(sp.arch.param_count(), 0.0);
    for (std::size_t r = 0; r < p; ++r) sp.theta[r * p + r] = 1.0;
    sp.theta_init = sp.theta;
    return sp;
}

StudentParams StudentParams::random_init(const StudentArch& arch, std::uint64_t seed) {
    arch.validate();
    StudentParams sp;
    sp.arch = arch;
    sp.theta.assign(arch.param_count(), 0.0);
    Rng rng = derived_rng(seed, 0x111F);
    const auto offsets = layer_offsets(arch);
    for (std::size_t l = 0; l < arch.layers(); ++l) {
        const std::size_t in = arch.widths[l];
        const std::size_t out = arch.widths[l + 1];
        const double scale = std::sqrt(2.0 / static_cast<double>(in));
        for (std::size_t idx = 0; idx < out * in; ++idx)
            sp.theta[offsets[l] + idx] = scale * rng.normal();
        // biases start at zero
    }
    sp.theta_init = sp.theta;
    return sp;
}

EmbeddingMatrix student_forward(const StudentParams& sp, const EmbeddingMatrix& inputs) {
    sp.arch.validate();
    require_inputs(sp, inputs);
    EmbeddingMatrix out(inputs.rows, sp.arch.widths.back());
    out.item_ids = inputs.item_ids;
    ForwardScratch scratch;
    for (std::size_t r = 0; r < inputs.rows; ++r) {
        forward_row(sp, inputs.row(r), scratch);
        std::copy(scratch.post.back().begin(), scratch.post.back().end(), out.row(r));
    }
    return out;
}

double distill_objective(const StudentParams& sp, const TripletDataset& teacher_labels,
                         const EmbeddingMatrix& inputs, const DistillConfig& cfg) {
    cfg.validate();
    require_inputs(sp, inputs);
    require_dataset(teacher_labels, inputs);
    std::vector<std::size_t> order(teacher_labels.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const BatchAccum acc = kl_batch(sp, teacher_labels, inputs, order, 0, order.size(),
                                    cfg.tau_student, cfg.threads, false);
    return acc.kl + reg_term(sp, cfg.lambda);
}

std::vector<double> distill_gradients(const StudentParams& sp, const TripletDataset& teacher_labels,
                                      const EmbeddingMatrix& inputs, const DistillConfig& cfg) {
    cfg.validate();
    require_inputs(sp, inputs);
    require_dataset(teacher_labels, inputs);
    std::vector<std::size_t> order(teacher_labels.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    BatchAccum acc = kl_batch(sp, teacher_labels, inputs, order, 0, order.size(), cfg.tau_student,
                              cfg.threads, true);
    for (std::size_t i = 0; i < acc.grad.size(); ++i)
        acc.grad[i] += 2.0 * cfg.lambda * (sp.theta[i] - sp.theta_init[i]);
    return std::move(acc.grad);
}

void DistillLog::save(const std::string& path) const {
    std::ostringstream out;
    out << "epoch\tobjective\tkl_term\treg_term\tval_agreement\tseed\n";
    for (const auto& e : epochs) {
        char buf[240];
        std::snprintf(buf, sizeof(buf), "%zu\t%.17g\t%.17g\t%.17g\t%.17g\t%llu\n", e.epoch,
                      e.objective, e.kl_term, e.reg_term, e.val_agreement,
                      static_cast<unsigned long long>(seed));
        out << buf;
    }
    std::ofstream f(path, std::ios::trunc);
    if (!f) fail("IoFailure", "cannot write '" + path + "'");
    f << out.str();
}

StudentFit train_student(const StudentParams& init, const TripletDataset& dataset,
                         const EmbeddingMatrix& inputs, const DistillConfig& cfg) {
    cfg.validate();
    require_inputs(init, inputs);
    require_dataset(dataset, inputs);

    StudentParams sp = init;
    const std::size_t n = dataset.size();
    Rng split_rng = derived_rng(cfg.seed, 0x51D);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[split_rng.below(i)]);
    const std::size_t n_val = static_cast<std::size_t>(static_cast<double>(n) * cfg.val_fraction);
    std::vector<std::size_t> val(order.begin(), order.begin() + n_val);
    std::vector<std::size_t> train(order.begin() + n_val, order.end());
    if (train.empty()) fail("EmptyBatch", "no training triplets after validation split");

    Optimizer opt(cfg.optimizer, sp.theta.size());
    Rng shuffle_rng = derived_rng(cfg.seed, 0xA11F);
    const std::size_t steps_per_epoch =
        std::max<std::size_t>(1, (train.size() + cfg.batch_size - 1) / cfg.batch_size);

    DistillLog log;
    log.seed = cfg.seed;

    const auto full_objective = [&](const StudentParams& cur) {
        std::vector<std::size_t> all(n);
        std::iota(all.begin(), all.end(), std::size_t{0});
        const BatchAccum acc =
            kl_batch(cur, dataset, inputs, all, 0, all.size(), cfg.tau_student, cfg.threads, false);
        return acc.kl + reg_term(cur, cfg.lambda);
    };
    const double initial_objective = full_objective(sp);

    std::size_t step = 0;
    std::size_t epoch = 0;
    while (step < cfg.steps) {
        for (std::size_t i = train.size(); i > 1; --i)
            std::swap(train[i - 1], train[shuffle_rng.below(i)]);
        for (std::size_t batch = 0; batch < steps_per_epoch && step < cfg.steps; ++batch, ++step) {
            const std::size_t lo = batch * cfg.batch_size;
            const std::size_t hi = std::min(lo + cfg.batch_size, train.size());
            if (lo >= hi) break;
            BatchAccum acc =
                kl_batch(sp, dataset, inputs, train, lo, hi, cfg.tau_student, cfg.threads, true);
            if (!std::isfinite(acc.kl))
                fail("NonFiniteLoss", "non-finite loss at step " + std::to_string(step));
            for (std::size_t i = 0; i < acc.grad.size(); ++i) {
                acc.grad[i] += 2.0 * cfg.lambda * (sp.theta[i] - sp.theta_init[i]);
                if (!std::isfinite(acc.grad[i]))
                    fail("NonFiniteLoss", "non-finite gradient at step " + std::to_string(step));
            }
            opt.step(sp.theta, acc.grad);
        }
        ++epoch;
        DistillEpochStats stats;
        stats.epoch = epoch;
        std::vector<std::size_t> all(n);
        std::iota(all.begin(), all.end(), std::size_t{0});
        stats.kl_term =
            kl_batch(sp, dataset, inputs, all, 0, all.size(), cfg.tau_student, cfg.threads, false).kl;
        stats.reg_term = reg_term(sp, cfg.lambda);
        stats.objective = stats.kl_term + stats.reg_term;
        stats.val_agreement = hard_agreement(sp, dataset, inputs, val);
        if (!std::isfinite(stats.objective))
            fail("NonFiniteLoss", "non-finite objective after epoch " + std::to_string(epoch));
        log.epochs.push_back(stats);
    }

    // Contract: never return parameters scoring worse than the start.
    if (full_objective(sp) > initial_objective) sp = init;
    return StudentFit{std::move(sp), std::move(log)};
}

} // namespace alignet
