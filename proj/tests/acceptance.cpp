// Acceptance suite: one self-contained check per criterion, one PASS/FAIL
// line each. Criterion 9 shells out to the CLI binary, whose path arrives
// as argv[1] (or the ALIGNET_CLI environment variable).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "alignet/affine.hpp"
#include "alignet/cluster.hpp"
#include "alignet/labeler.hpp"
#include "alignet/metrics.hpp"
#include "alignet/rng.hpp"
#include "alignet/student.hpp"
#include "alignet/synth.hpp"
#include "alignet/triplet.hpp"
#include "fd_check.hpp"

namespace fs = std::filesystem;
using namespace alignet;

namespace {

int g_failures = 0;

struct Criterion {
    int number;
    std::string name;
    double time_limit_seconds;
    std::function<bool(std::string&)> body;
};

void run(const Criterion& c) {
    std::string detail;
    bool ok = false;
    const auto start = std::chrono::steady_clock::now();
    try {
        ok = c.body(detail);
    } catch (const std::exception& e) {
        ok = false;
        detail = std::string("exception: ") + e.what();
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (ok && c.time_limit_seconds > 0.0 && elapsed > c.time_limit_seconds) {
        ok = false;
        detail += (detail.empty() ? "" : "; ") + std::string("over time limit");
    }
    if (!ok) ++g_failures;
    std::printf("[%s] criterion %d: %s (%.1fs%s%s)\n", ok ? "PASS" : "FAIL", c.number,
                c.name.c_str(), elapsed, detail.empty() ? "" : " — ", detail.c_str());
    std::fflush(stdout);
}

// ---- shared helpers --------------------------------------------------------

std::vector<Triplet> random_triplets(std::size_t n, std::size_t m, std::uint64_t seed) {
    std::vector<Triplet> out;
    Rng rng(seed);
    for (std::size_t s = 0; s < n; ++s) {
        Triplet t;
        t.i = static_cast<std::uint32_t>(rng.below(m));
        do {
            t.j = static_cast<std::uint32_t>(rng.below(m));
        } while (t.j == t.i);
        do {
            t.k = static_cast<std::uint32_t>(rng.below(m));
        } while (t.k == t.i || t.k == t.j);
        out.push_back(t);
    }
    return out;
}

EmbeddingMatrix random_matrix(std::size_t m, std::size_t p, std::uint64_t seed, double scale = 1.0) {
    EmbeddingMatrix mat(m, p);
    Rng rng(seed);
    for (auto& v : mat.data) v = scale * rng.normal();
    return mat;
}

TripletDataset random_soft_dataset(std::size_t n, std::size_t m, std::uint64_t seed) {
    TripletDataset ds;
    ds.kind = LabelKind::soft;
    ds.triplets = random_triplets(n, m, seed);
    Rng rng(seed ^ 0x50F7);
    for (std::size_t s = 0; s < n; ++s) {
        double a = rng.uniform() + 1e-3, b = rng.uniform() + 1e-3, c = rng.uniform() + 1e-3;
        const double z = a + b + c;
        ds.soft.push_back(ProbTriple{a / z, b / z, c / z});
    }
    return ds;
}

// Model accuracy against per-subject simulated responses; directly
// comparable with the LOO ceiling over the same responses.
double accuracy_vs_responses(const EmbeddingMatrix& model, const std::vector<Triplet>& triplets,
                             const std::vector<std::vector<std::uint8_t>>& responses) {
    std::size_t agree = 0, total = 0;
    for (std::size_t t = 0; t < triplets.size(); ++t) {
        const int model_odd =
            odd_one_out(pairwise_similarity(model, triplets[t].i, triplets[t].j, triplets[t].k));
        for (auto r : responses[t]) {
            if (static_cast<int>(r) == model_odd) ++agree;
            ++total;
        }
    }
    return static_cast<double>(agree) / static_cast<double>(total);
}

// brute-force LOO oracle (independent of metrics::loo_noise_ceiling)
double brute_force_loo(const std::vector<std::vector<std::uint8_t>>& responses) {
    double total = 0.0;
    for (const auto& r : responses) {
        double agreement = 0.0;
        for (std::size_t held = 0; held < r.size(); ++held) {
            int counts[3] = {0, 0, 0};
            for (std::size_t o = 0; o < r.size(); ++o)
                if (o != held) ++counts[r[o]];
            const int top = std::max({counts[0], counts[1], counts[2]});
            std::vector<int> leaders;
            for (int c = 0; c < 3; ++c)
                if (counts[c] == top) leaders.push_back(c);
            bool among = false;
            for (int c : leaders)
                if (c == r[held]) among = true;
            if (among) agreement += 1.0 / static_cast<double>(leaders.size());
        }
        total += agreement / static_cast<double>(r.size());
    }
    return total / static_cast<double>(responses.size());
}

// Shared artifacts between criteria 4, 5, 6 (one synthetic world).
struct SyntheticWorld {
    Hierarchy hierarchy;
    EmbeddingMatrix corrupted;
    AffineTransform transform;
    EmbeddingMatrix aligned;  // transform applied to corrupted
    bool fitted = false;
};

SyntheticWorld g_world;

void build_world() {
    HierarchySpec spec;
    spec.superordinates = 4;
    spec.basics_per_super = 4;
    spec.subs_per_basic = 2;
    spec.items_per_sub = 8;
    spec.dim = 32;
    spec.seed = 20250810;
    g_world.hierarchy = generate_hierarchy(spec);
    g_world.corrupted = corrupt_teacher(g_world.hierarchy.truth, 0.8, 77);
}

} // namespace

int main(int argc, char** argv) {
    std::string cli_path;
    if (argc > 1) cli_path = argv[1];
    if (cli_path.empty()) {
        if (const char* env = std::getenv("ALIGNET_CLI")) cli_path = env;
    }

    build_world();

    std::vector<Criterion> criteria;

    // 1. Gradient correctness
    criteria.push_back({1, "analytic gradients match central finite differences", 30.0,
                        [](std::string& detail) {
        Rng seeder(101);
        double worst = 0.0;
        for (int instance = 0; instance < 25; ++instance) {
            const std::size_t p = 2 + seeder.below(5);
            const std::size_t m = 4 + seeder.below(5);
            const std::size_t n = 1 + seeder.below(8);
            const auto mat = random_matrix(m, p, 1100 + instance);
            const auto ds = random_soft_dataset(n, m, 1200 + instance);
            UdConfig cfg;
            cfg.lambda = instance % 2 == 0 ? 0.1 : 0.0;
            AffineTransform t = AffineTransform::identity(p);
            Rng rng(1300 + instance);
            for (auto& v : t.weight) v += 0.3 * rng.normal();
            for (auto& v : t.bias) v = 0.3 * rng.normal();
            const auto grads = ud_gradients(t, mat, ds, cfg);
            std::vector<double> analytic = grads.d_weight;
            analytic.insert(analytic.end(), grads.d_bias.begin(), grads.d_bias.end());
            std::vector<double> params = t.weight;
            params.insert(params.end(), t.bias.begin(), t.bias.end());
            const double err = testsupport::max_relative_gradient_error(
                analytic,
                [&](const std::vector<double>& packed) {
                    AffineTransform probe;
                    probe.dim = p;
                    probe.weight.assign(packed.begin(),
                                        packed.begin() + static_cast<std::ptrdiff_t>(p * p));
                    probe.bias.assign(packed.begin() + static_cast<std::ptrdiff_t>(p * p),
                                      packed.end());
                    return ud_objective(probe, mat, ds, cfg);
                },
                params);
            worst = std::max(worst, err);
        }
        for (int instance = 0; instance < 25; ++instance) {
            const bool mlp = instance % 2 == 1;
            const std::size_t p = 2 + seeder.below(5);
            const std::size_t m = 5 + seeder.below(4);
            const std::size_t n = 1 + seeder.below(8);
            const auto inputs = random_matrix(m, p, 2100 + instance);
            const auto ds = random_soft_dataset(n, m, 2200 + instance);
            DistillConfig cfg;
            cfg.tau_student = instance % 3 == 0 ? 100.0 : 2.0;
            cfg.lambda = instance % 2 == 0 ? 0.05 : 0.0;
            StudentParams sp;
            if (mlp) {
                StudentArch arch;
                arch.widths = {p, 2 + seeder.below(7), 2 + seeder.below(5)};
                sp = StudentParams::random_init(arch, 2300 + instance);
                Rng rng(2400 + instance);
                for (auto& v : sp.theta) v += 0.05 * rng.normal();
            } else {
                sp = StudentParams::affine_identity(p);
                Rng rng(2500 + instance);
                for (auto& v : sp.theta) v += 0.2 * rng.normal();
            }
            const auto analytic = distill_gradients(sp, ds, inputs, cfg);
            const double err = testsupport::max_relative_gradient_error(
                analytic,
                [&](const std::vector<double>& theta) {
                    StudentParams probe = sp;
                    probe.theta = theta;
                    return distill_objective(probe, ds, inputs, cfg);
                },
                sp.theta);
            worst = std::max(worst, err);
        }
        std::ostringstream os;
        os << "max rel err " << worst << " over 50 instances";
        detail = os.str();
        return worst <= 1e-4;
    }});

    // 2. Loss identities
    criteria.push_back({2, "loss identities and entropy bounds", 0.0, [](std::string& detail) {
        bool ok = true;
        Rng rng(321);
        std::vector<ProbTriple> p;
        for (int s = 0; s < 64; ++s) {
            double a = rng.uniform() + 1e-3, b = rng.uniform() + 1e-3, c = rng.uniform() + 1e-3;
            const double z = a + b + c;
            p.push_back(ProbTriple{a / z, b / z, c / z});
        }
        ok = ok && soft_align_loss(p, p) == 0.0;

        std::vector<TripletSimilarities> teacher, student;
        Rng srng(322);
        for (int s = 0; s < 64; ++s) {
            TripletSimilarities t{srng.normal(), srng.normal(), srng.normal()};
            teacher.push_back(t);
            student.push_back({t.s_ij * 50.0, t.s_ik * 50.0, t.s_jk * 50.0});
        }
        ok = ok && alignet_kl_loss(teacher, student, Temperature(1.0), Temperature(50.0)) <= 1e-10;

        std::vector<ProbTriple> uniform{{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}};
        std::vector<int> chosen{0};
        ok = ok && std::abs(hard_align_loss(uniform, chosen) - std::log(3.0)) <= 1e-12;

        const double ln3 = std::log(3.0);
        double h_min = 1e9, h_max = -1e9;
        Rng hrng(323);
        for (int s = 0; s < 100000; ++s) {
            double a = hrng.uniform(), b = hrng.uniform(), c = hrng.uniform();
            const double z = a + b + c;
            if (z == 0.0) continue;
            const double h = triplet_entropy(ProbTriple{a / z, b / z, c / z});
            h_min = std::min(h_min, h);
            h_max = std::max(h_max, h);
            if (h < 0.0 || h > ln3 + 1e-12) ok = false;
        }
        std::ostringstream os;
        os << "entropy range [" << h_min << ", " << h_max << "] in [0, ln3]";
        detail = os.str();
        return ok;
    }});

    // 3. Oracle equivalence
    criteria.push_back({3, "spearman/rsm/loo/odd-one-out match brute-force oracles", 20.0,
                        [](std::string& detail) {
        Rng rng(441);
        double worst = 0.0;
        // spearman vs definitional O(n^2) oracle, with ties
        for (int trial = 0; trial < 40; ++trial) {
            const std::size_t n = 3 + rng.below(98);
            std::vector<double> x(n), y(n);
            for (auto& v : x) v = std::floor(5.0 * rng.uniform());
            bool x_const = true;
            for (double v : x) x_const = x_const && v == x[0];
            if (x_const) x[0] += 1.0;
            for (std::size_t i = 0; i < n; ++i) y[i] = rng.normal() + x[i];
            const auto rank_of = [&](const std::vector<double>& v) {
                std::vector<double> ranks(v.size());
                for (std::size_t i = 0; i < v.size(); ++i) {
                    std::size_t smaller = 0, equal = 0;
                    for (std::size_t j = 0; j < v.size(); ++j) {
                        if (v[j] < v[i]) ++smaller;
                        if (v[j] == v[i]) ++equal;
                    }
                    ranks[i] = 1.0 + smaller + (equal - 1.0) / 2.0;
                }
                return ranks;
            };
            const auto rx = rank_of(x);
            const auto ry = rank_of(y);
            double mx = 0, my = 0;
            for (std::size_t i = 0; i < n; ++i) {
                mx += rx[i];
                my += ry[i];
            }
            mx /= n;
            my /= n;
            double sxy = 0, sxx = 0, syy = 0;
            for (std::size_t i = 0; i < n; ++i) {
                sxy += (rx[i] - mx) * (ry[i] - my);
                sxx += (rx[i] - mx) * (rx[i] - mx);
                syy += (ry[i] - my) * (ry[i] - my);
            }
            worst = std::max(worst, std::abs(spearman(x, y) - sxy / std::sqrt(sxx * syy)));
        }
        // rsm_pearson vs textbook two-pass
        for (int trial = 0; trial < 10; ++trial) {
            const std::size_t n = 3 + rng.below(20);
            const std::size_t p = 2 + rng.below(30);
            const auto mat = random_matrix(n, p, 4500 + trial);
            const auto rsm = rsm_pearson(mat);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    double mi = 0, mj = 0;
                    for (std::size_t c = 0; c < p; ++c) {
                        mi += mat.at(i, c);
                        mj += mat.at(j, c);
                    }
                    mi /= p;
                    mj /= p;
                    double num = 0, di = 0, dj = 0;
                    for (std::size_t c = 0; c < p; ++c) {
                        num += (mat.at(i, c) - mi) * (mat.at(j, c) - mj);
                        di += (mat.at(i, c) - mi) * (mat.at(i, c) - mi);
                        dj += (mat.at(j, c) - mj) * (mat.at(j, c) - mj);
                    }
                    worst = std::max(worst, std::abs(rsm.at(i, j) - num / std::sqrt(di * dj)));
                }
            }
        }
        // loo vs the brute-force oracle, including tie-heavy cases
        for (int trial = 0; trial < 40; ++trial) {
            std::vector<std::vector<std::uint8_t>> responses;
            const std::size_t triplets = 1 + rng.below(30);
            for (std::size_t t = 0; t < triplets; ++t) {
                std::vector<std::uint8_t> r(2 + rng.below(7));
                for (auto& v : r) v = static_cast<std::uint8_t>(rng.below(3));
                responses.push_back(r);
            }
            worst = std::max(worst,
                             std::abs(loo_noise_ceiling(responses) - brute_force_loo(responses)));
        }
        // odd_one_out vs exhaustive pair enumeration (exact)
        bool odd_ok = true;
        for (int trial = 0; trial < 2000; ++trial) {
            TripletSimilarities s{rng.normal(), rng.normal(), rng.normal()};
            if (trial % 5 == 0) s.s_ik = s.s_ij;  // force ties
            int best_pair = 0;
            if (s.s_ik > s[best_pair]) best_pair = 1;
            if (s.s_jk > s[best_pair]) best_pair = 2;
            if (odd_one_out(s) != 2 - best_pair) odd_ok = false;
        }
        std::ostringstream os;
        os << "max abs deviation " << worst;
        detail = os.str();
        return odd_ok && worst <= 1e-12;
    }});

    // 4. Synthetic UD recovery
    criteria.push_back({4, "UD transform recovers held-out odd-one-out accuracy", 120.0,
                        [](std::string& detail) {
        const auto& truth = g_world.hierarchy.truth;
        const auto& corrupted = g_world.corrupted;
        const std::size_t m = truth.rows;

        // 5,000 soft-labeled training triplets at tau_h = 0.5
        const auto train_triplets = random_triplets(5000, m, 5001);
        const auto train_sim =
            simulate_responses(truth, train_triplets, Temperature(0.5), 1, 5002);
        TripletDataset soft;
        soft.kind = LabelKind::soft;
        soft.triplets = train_triplets;
        soft.soft = train_sim.p_star;

        UdConfig cfg;
        cfg.lambda = 0.01;
        cfg.optimizer.learning_rate = 3e-3;
        cfg.steps = 1200;
        cfg.batch_size = 512;
        cfg.seed = 5003;
        const auto fit = fit_ud(corrupted, soft, cfg);
        g_world.transform = fit.transform;
        g_world.aligned = apply_affine(fit.transform, corrupted);
        g_world.fitted = true;

        // held-out triplets with 5 simulated subjects each
        const auto held_triplets = random_triplets(2000, m, 5004);
        const auto held_sim = simulate_responses(truth, held_triplets, Temperature(0.5), 5, 5005);
        const double ceiling = brute_force_loo(held_sim.responses);
        const double acc_corrupted =
            accuracy_vs_responses(corrupted, held_triplets, held_sim.responses);
        const double acc_aligned =
            accuracy_vs_responses(g_world.aligned, held_triplets, held_sim.responses);

        std::ostringstream os;
        os << "corrupted " << acc_corrupted << ", aligned " << acc_aligned << ", ceiling "
           << ceiling;
        detail = os.str();
        return acc_aligned >= acc_corrupted + 0.10 && acc_aligned >= ceiling - 0.05;
    }});

    // 5. Distillation fidelity
    criteria.push_back({5, "affine student matches teacher hard labels on >= 90% held out", 180.0,
                        [](std::string& detail) {
        if (!g_world.fitted) {
            detail = "criterion 4 did not produce a transform";
            return false;
        }
        const auto& teacher = g_world.aligned;
        // cluster-boundary triplets in the aligned space
        const auto km = kmeans(teacher, 16, 5101);
        SamplerConfig sampler;
        sampler.count = 22000;
        sampler.seed = 5102;
        const auto sampled = sample_cluster_boundary(km, sampler);
        const auto labeled = label_triplets(teacher, sampled, Temperature(1.0));

        TripletDataset train, held;
        train.kind = held.kind = LabelKind::both;
        for (std::size_t s = 0; s < labeled.dataset.size(); ++s) {
            auto& dst = s < 20000 ? train : held;
            dst.triplets.push_back(labeled.dataset.triplets[s]);
            dst.hard.push_back(labeled.dataset.hard[s]);
            dst.soft.push_back(labeled.dataset.soft[s]);
        }

        // student: affine head over the corrupted (pretrained) features
        DistillConfig dc;
        dc.tau_teacher = 1.0;
        dc.tau_student = 100.0;
        dc.lambda = 1e-3;
        dc.optimizer.learning_rate = 1e-2;
        dc.steps = 2500;
        dc.batch_size = 512;
        dc.seed = 5103;
        const auto fit =
            train_student(StudentParams::affine_identity(teacher.dims), train, g_world.corrupted, dc);

        const auto z = student_forward(fit.params, g_world.corrupted);
        std::size_t agree = 0;
        for (std::size_t s = 0; s < held.size(); ++s) {
            const Triplet& t = held.triplets[s];
            const int student_odd = odd_one_out(pairwise_similarity(z, t.i, t.j, t.k));
            if (student_odd == odd_position_of_pair(choice_pair_index(t, held.hard[s]))) ++agree;
        }
        const double agreement = static_cast<double>(agree) / static_cast<double>(held.size());

        // stash for criterion 6
        g_world.aligned.item_ids.clear();
        save_student(fit.params, (fs::temp_directory_path() / "alignet_acc_student.stu1").string());

        std::ostringstream os;
        os << "held-out agreement " << agreement << " over " << held.size() << " triplets";
        detail = os.str();
        return agreement >= 0.90;
    }});

    // 6. Hierarchical shift direction
    criteria.push_back({6, "shift report: basic < superordinate < 0 < different", 60.0,
                        [](std::string& detail) {
        const std::string path = (fs::temp_directory_path() / "alignet_acc_student.stu1").string();
        if (!fs::exists(path)) {
            detail = "criterion 5 did not produce a student";
            return false;
        }
        const auto student = load_student(path);
        const auto before = g_world.corrupted;  // identity-initialized student output
        StudentParams sp = student;
        const auto after = student_forward(sp, g_world.corrupted);
        const auto report =
            representation_shift(before, after, g_world.hierarchy.labels, 200000, 5201);
        const auto* basic = report.find(PairLevel::same_basic);
        const auto* super = report.find(PairLevel::same_superordinate);
        const auto* diff = report.find(PairLevel::different_superordinate);
        if (!basic || !super || !diff) {
            detail = "missing levels in the report";
            return false;
        }
        std::ostringstream os;
        os << "basic " << basic->mean_dz << " [" << basic->ci_low << "," << basic->ci_high
           << "], super " << super->mean_dz << " [" << super->ci_low << "," << super->ci_high
           << "], diff " << diff->mean_dz << " [" << diff->ci_low << "," << diff->ci_high << "]";
        detail = os.str();
        const bool ordering = basic->mean_dz < super->mean_dz && super->mean_dz < 0.0 &&
                              0.0 < diff->mean_dz;
        const bool cis = basic->ci_high < 0.0 && super->ci_high < 0.0 && diff->ci_low > 0.0;
        return ordering && cis;
    }});

    // 7. Calibration pipeline
    criteria.push_back({7, "entropy-RT correlation: >= 0.9 for truth, ~0 for a random model", 60.0,
                        [](std::string& detail) {
        const auto& truth = g_world.hierarchy.truth;
        const std::size_t m = truth.rows;
        const double tau_h = 0.25;
        const auto triplets = random_triplets(5000, m, 5301);
        TripletDataset ds;
        ds.kind = LabelKind::none;
        ds.triplets = triplets;
        std::vector<ProbTriple> p_star;
        for (const auto& t : triplets)
            p_star.push_back(
                triplet_probs(pairwise_similarity(truth, t.i, t.j, t.k), Temperature(tau_h)));
        // slope 1.0: at the default 0.5 the attainable rank correlation is
        // capped below 0.9 by the entropy range (see ledger)
        const auto rts = simulate_rts(p_star, 0.1, 5302, 0.7, 1.0);
        const double rho_truth =
            uncertainty_rt_correlation(truth, ds, rts, Temperature(tau_h));
        const auto random_model = random_matrix(m, truth.dims, 5303);
        const double rho_random =
            uncertainty_rt_correlation(random_model, ds, rts, Temperature(tau_h));
        std::ostringstream os;
        os << "rho(truth) " << rho_truth << ", rho(random) " << rho_random;
        detail = os.str();
        return rho_truth >= 0.9 && std::abs(rho_random) <= 0.1;
    }});

    // 8. Elbow sanity
    criteria.push_back({8, "elbow selects 8 +- 1 on 8-cluster data in >= 9 of 10 seeds", 120.0,
                        [](std::string& detail) {
        int hits = 0;
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            // 8 blobs at scaled orthonormal centers; separation ratio
            // (min center distance / within sd) = 5 * sqrt(2) >= 5
            const std::size_t per_blob = 30, p = 12;
            EmbeddingMatrix mat(8 * per_blob, p);
            Rng rng(9000 + seed);
            std::vector<std::vector<double>> centers(8, std::vector<double>(p));
            for (std::size_t b = 0; b < 8; ++b) {
                auto& c = centers[b];
                for (auto& v : c) v = rng.normal();
                for (std::size_t prev = 0; prev < b; ++prev) {
                    double proj = 0, prev_sq = 0;
                    for (std::size_t d = 0; d < p; ++d) {
                        proj += c[d] * centers[prev][d];
                        prev_sq += centers[prev][d] * centers[prev][d];
                    }
                    for (std::size_t d = 0; d < p; ++d) c[d] -= (proj / prev_sq) * centers[prev][d];
                }
                double norm = 0;
                for (double v : c) norm += v * v;
                norm = std::sqrt(norm);
                for (auto& v : c) v *= 5.0 / norm;
            }
            std::size_t row = 0;
            for (std::size_t b = 0; b < 8; ++b) {
                for (std::size_t i = 0; i < per_blob; ++i, ++row) {
                    for (std::size_t d = 0; d < p; ++d) mat.at(row, d) = centers[b][d] + rng.normal();
                }
            }
            std::vector<std::size_t> candidates;
            for (std::size_t k = 2; k <= 16; ++k) candidates.push_back(k);
            const auto result = elbow_select(mat, candidates, 9100 + seed);
            if (!result.no_knee && result.k >= 7 && result.k <= 9) ++hits;
        }
        std::ostringstream os;
        os << hits << "/10 seeds in [7, 9]";
        detail = os.str();
        return hits >= 9;
    }});

    // 9. Determinism (byte-identical pipeline reruns)
    criteria.push_back({9, "pipeline rerun is byte-identical in strict mode", 300.0,
                        [cli_path](std::string& detail) {
        if (cli_path.empty()) {
            detail = "CLI path not provided (argv[1] or ALIGNET_CLI)";
            return false;
        }
        const fs::path base = fs::temp_directory_path() / "alignet_acc_determinism";
        fs::remove_all(base);
        fs::create_directories(base);
        const std::string synth_dir = (base / "synth").string();
        const auto shell = [&](const std::string& command) {
            const int rc = std::system((command + " > /dev/null 2>&1").c_str());
            return rc == 0;
        };
        if (!shell(cli_path + " synth --set out_dir=" + synth_dir +
                   " --set seed=17 --set count=1500 --set items_per_sub=4")) {
            detail = "synth run failed";
            return false;
        }
        const std::string common =
            " --set embeddings=" + synth_dir + "/teacher.emb --set triplets=" + synth_dir +
            "/triplets_soft.tsv --set labels=" + synth_dir +
            "/labels.tsv --set seed=23 --set threads=1 --set steps=200 --set batch_size=256"
            " --set learning_rate=0.003 --set lambda=0.01 --set k=8 --set count=4000"
            " --set distill_steps=300 --set distill_batch_size=256";
        const std::string dir1 = (base / "run1").string();
        const std::string dir2 = (base / "run2").string();
        if (!shell(cli_path + " pipeline --set out_dir=" + dir1 + common) ||
            !shell(cli_path + " pipeline --set out_dir=" + dir2 + common)) {
            detail = "pipeline run failed";
            return false;
        }
        // compare artifacts byte for byte; the manifest carries wall time
        std::size_t compared = 0;
        for (const auto& entry : fs::directory_iterator(dir1)) {
            const std::string name = entry.path().filename().string();
            if (name == "manifest.json") continue;
            std::ifstream a(entry.path(), std::ios::binary);
            std::ifstream b(fs::path(dir2) / name, std::ios::binary);
            if (!b) {
                detail = "missing artifact " + name + " in the second run";
                return false;
            }
            const std::string sa((std::istreambuf_iterator<char>(a)),
                                 std::istreambuf_iterator<char>());
            const std::string sb((std::istreambuf_iterator<char>(b)),
                                 std::istreambuf_iterator<char>());
            if (sa != sb) {
                detail = "artifact " + name + " differs between runs";
                return false;
            }
            ++compared;
        }
        std::ostringstream os;
        os << compared << " artifacts byte-identical";
        detail = os.str();
        return compared >= 10;
    }});

    // 10. Regularizer limits
    criteria.push_back({10, "lambda = 1e9 pins W to c*I and theta to theta*", 60.0,
                        [](std::string& detail) {
        const std::size_t p = 6;
        const auto mat = random_matrix(16, p, 6001);
        const auto ds = random_soft_dataset(200, 16, 6002);
        UdConfig ud;
        ud.lambda = 1e9;
        ud.steps = 60;
        ud.batch_size = 64;
        ud.seed = 6003;
        ud.optimizer.kind = OptimizerKind::sgd;
        ud.optimizer.learning_rate = 1e-7;
        const auto fit = fit_ud(mat, ds, ud);
        double trace = 0.0;
        for (std::size_t r = 0; r < p; ++r) trace += fit.transform.w(r, r);
        const double c = trace / static_cast<double>(p);
        double dev = 0.0;
        for (std::size_t r = 0; r < p; ++r)
            for (std::size_t col = 0; col < p; ++col) {
                const double d = fit.transform.w(r, col) - (r == col ? c : 0.0);
                dev += d * d;
            }
        const double w_dev = std::sqrt(dev);

        DistillConfig dc;
        dc.lambda = 1e9;
        dc.steps = 60;
        dc.batch_size = 64;
        dc.seed = 6004;
        dc.optimizer.kind = OptimizerKind::sgd;
        dc.optimizer.learning_rate = 1e-12;
        const auto sfit =
            train_student(StudentParams::affine_identity(p), ds, mat, dc);
        double theta_dev = 0.0;
        for (std::size_t i = 0; i < sfit.params.theta.size(); ++i) {
            const double d = sfit.params.theta[i] - sfit.params.theta_init[i];
            theta_dev += d * d;
        }
        theta_dev = std::sqrt(theta_dev);
        std::ostringstream os;
        os << "||W - cI||_F = " << w_dev << ", ||theta - theta*|| = " << theta_dev;
        detail = os.str();
        return w_dev <= 1e-3 && theta_dev <= 1e-3;
    }});

    for (const auto& c : criteria) run(c);
    if (g_failures > 0) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all %zu criteria passed\n", criteria.size());
    return 0;
}
