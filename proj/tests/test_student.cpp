#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "alignet/labeler.hpp"
#include "alignet/rng.hpp"
#include "alignet/student.hpp"
#include "fd_check.hpp"

using namespace alignet;

namespace {

EmbeddingMatrix random_matrix(std::size_t m, std::size_t p, std::uint64_t seed, double scale = 1.0) {
    EmbeddingMatrix mat(m, p);
    Rng rng(seed);
    for (auto& v : mat.data) v = scale * rng.normal();
    return mat;
}

TripletDataset random_soft(std::size_t n, std::size_t m, std::uint64_t seed) {
    TripletDataset ds;
    ds.kind = LabelKind::soft;
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
        ds.triplets.push_back(t);
        double a = rng.uniform() + 1e-3, b = rng.uniform() + 1e-3, c = rng.uniform() + 1e-3;
        const double z = a + b + c;
        ds.soft.push_back(ProbTriple{a / z, b / z, c / z});
    }
    return ds;
}

} // namespace

TEST_CASE("student_forward") {
    SUBCASE("identity affine head is a no-op") {
        const auto inputs = random_matrix(6, 4, 3);
        const auto sp = StudentParams::affine_identity(4);
        const auto out = student_forward(sp, inputs);
        CHECK(out.data == inputs.data);
    }
    SUBCASE("zero final layer gives all-zero embeddings") {
        StudentArch arch;
        arch.widths = {3, 5, 2};
        auto sp = StudentParams::random_init(arch, 4);
        // zero the last layer (weights + bias)
        const std::size_t last_params = 2 * 5 + 2;
        for (std::size_t i = sp.theta.size() - last_params; i < sp.theta.size(); ++i) sp.theta[i] = 0.0;
        const auto inputs = random_matrix(7, 3, 5);
        const auto out = student_forward(sp, inputs);
        for (double v : out.data) CHECK(v == 0.0);
    }
    SUBCASE("random MLP matches a per-row loop oracle to 1e-13") {
        StudentArch arch;
        arch.widths = {4, 6, 3};
        arch.nonlin = Nonlinearity::gelu;
        const auto sp = StudentParams::random_init(arch, 6);
        const auto inputs = random_matrix(5, 4, 7);
        const auto out = student_forward(sp, inputs);
        const auto gelu = [](double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); };
        for (std::size_t r = 0; r < 5; ++r) {
            // layer 1
            std::vector<double> h(6);
            const double* w1 = sp.theta.data();
            const double* b1 = w1 + 6 * 4;
            for (std::size_t o = 0; o < 6; ++o) {
                double acc = b1[o];
                for (std::size_t c = 0; c < 4; ++c) acc += w1[o * 4 + c] * inputs.at(r, c);
                h[o] = gelu(acc);
            }
            const double* w2 = b1 + 6;
            const double* b2 = w2 + 3 * 6;
            for (std::size_t o = 0; o < 3; ++o) {
                double acc = b2[o];
                for (std::size_t c = 0; c < 6; ++c) acc += w2[o * 6 + c] * h[c];
                CHECK(out.at(r, o) == doctest::Approx(acc).epsilon(1e-13));
            }
        }
    }
    SUBCASE("dimension mismatch") {
        const auto inputs = random_matrix(3, 4, 8);
        CHECK_THROWS_WITH_AS(student_forward(StudentParams::affine_identity(5), inputs),
                             doctest::Contains("DimensionMismatch"), Error);
    }
}

TEST_CASE("distill_objective") {
    const auto inputs = random_matrix(10, 4, 11);
    auto ds = random_soft(25, 10, 12);
    DistillConfig cfg;
    cfg.tau_teacher = 1.0;
    cfg.tau_student = 100.0;
    cfg.lambda = 0.01;

    SUBCASE("constructed fixed point gives ~0") {
        // teacher labels = student's own probabilities at tau_student, theta = theta*
        const auto sp = StudentParams::affine_identity(4);
        const auto z = student_forward(sp, inputs);
        for (std::size_t s = 0; s < ds.size(); ++s) {
            ds.soft[s] =
                triplet_probs(pairwise_similarity(z, ds.triplets[s].i, ds.triplets[s].j, ds.triplets[s].k),
                              Temperature(cfg.tau_student));
        }
        CHECK(distill_objective(sp, ds, inputs, cfg) <= 1e-10);
    }
    SUBCASE("matches the composition oracle to 1e-12") {
        StudentArch arch;
        arch.widths = {4, 5, 3};
        const auto sp = StudentParams::random_init(arch, 13);
        const auto z = student_forward(sp, inputs);
        std::vector<ProbTriple> q;
        for (const auto& t : ds.triplets)
            q.push_back(
                triplet_probs(pairwise_similarity(z, t.i, t.j, t.k), Temperature(cfg.tau_student)));
        double reg = 0.0;
        for (std::size_t i = 0; i < sp.theta.size(); ++i) {
            const double d = sp.theta[i] - sp.theta_init[i];
            reg += d * d;
        }
        const double oracle = soft_align_loss(ds.soft, q) + cfg.lambda * reg;
        CHECK(distill_objective(sp, ds, inputs, cfg) == doctest::Approx(oracle).epsilon(1e-12));
    }
    SUBCASE("empty batch errors") {
        TripletDataset empty;
        empty.kind = LabelKind::soft;
        CHECK_THROWS_WITH_AS(distill_objective(StudentParams::affine_identity(4), empty, inputs, cfg),
                             doctest::Contains("EmptyBatch"), Error);
    }
}

TEST_CASE("distill_gradients match central finite differences (rel err <= 1e-4)") {
    Rng seeder(21);
    for (int instance = 0; instance < 8; ++instance) {
        const bool mlp = instance % 2 == 1;
        const std::size_t p = 2 + seeder.below(5);  // <= 6
        const std::size_t m = 5 + seeder.below(4);
        const std::size_t n = 1 + seeder.below(8);  // <= 8 triplets
        const auto inputs = random_matrix(m, p, 500 + instance);
        const auto ds = random_soft(n, m, 600 + instance);
        DistillConfig cfg;
        cfg.tau_teacher = 1.0;
        cfg.tau_student = instance % 3 == 0 ? 100.0 : 2.0;
        cfg.lambda = instance % 2 == 0 ? 0.05 : 0.0;

        StudentParams sp;
        if (mlp) {
            StudentArch arch;
            arch.widths = {p, 2 + seeder.below(7), 2 + seeder.below(5)};  // widths <= 8
            arch.nonlin = Nonlinearity::gelu;
            sp = StudentParams::random_init(arch, 700 + instance);
            // displace from theta* so the regularizer term participates
            Rng rng(800 + instance);
            for (auto& v : sp.theta) v += 0.05 * rng.normal();
        } else {
            sp = StudentParams::affine_identity(p);
            Rng rng(900 + instance);
            for (auto& v : sp.theta) v += 0.2 * rng.normal();
        }

        const auto analytic = distill_gradients(sp, ds, inputs, cfg);
        auto params = sp.theta;
        const double err = testsupport::max_relative_gradient_error(
            analytic,
            [&](const std::vector<double>& theta) {
                StudentParams probe = sp;
                probe.theta = theta;
                return distill_objective(probe, ds, inputs, cfg);
            },
            params);
        CHECK(err <= 1e-4);
    }
}

TEST_CASE("gradient structure at special points") {
    const auto inputs = random_matrix(8, 3, 31);
    auto ds = random_soft(12, 8, 32);
    DistillConfig cfg;
    cfg.tau_student = 5.0;
    cfg.lambda = 3.0;
    SUBCASE("KL gradient vanishes when student matches teacher probs") {
        const auto sp = StudentParams::affine_identity(3);
        const auto z = student_forward(sp, inputs);
        for (std::size_t s = 0; s < ds.size(); ++s) {
            ds.soft[s] =
                triplet_probs(pairwise_similarity(z, ds.triplets[s].i, ds.triplets[s].j, ds.triplets[s].k),
                              Temperature(cfg.tau_student));
        }
        const auto grad = distill_gradients(sp, ds, inputs, cfg);  // reg grad is 0 at theta = theta*
        for (double g : grad) CHECK(std::abs(g) <= 1e-8);
    }
    SUBCASE("one small full-batch step decreases a smooth objective") {
        StudentParams sp = StudentParams::affine_identity(3);
        Rng rng(33);
        for (auto& v : sp.theta) v += 0.1 * rng.normal();
        DistillConfig smooth = cfg;
        smooth.tau_student = 2.0;
        smooth.lambda = 0.01;
        const double before = distill_objective(sp, ds, inputs, smooth);
        const auto grad = distill_gradients(sp, ds, inputs, smooth);
        for (std::size_t i = 0; i < sp.theta.size(); ++i) sp.theta[i] -= 1e-3 * grad[i];
        CHECK(distill_objective(sp, ds, inputs, smooth) < before);
    }
}

TEST_CASE("train_student") {
    const std::size_t p = 4;
    const auto inputs = random_matrix(30, p, 41, 1.0);

    SUBCASE("affine student reaches >= 90% agreement with an affine teacher") {
        // teacher = known affine map of the inputs
        AffineTransform teacher_map = AffineTransform::identity(p);
        Rng rng(42);
        for (auto& v : teacher_map.weight) v += 0.6 * rng.normal();
        const auto teacher = apply_affine(teacher_map, inputs);

        // surrogate labels at tau' = 1
        TripletDataset unlabeled;
        unlabeled.kind = LabelKind::none;
        Rng trng(43);
        for (std::size_t s = 0; s < 4000; ++s) {
            Triplet t;
            t.i = static_cast<std::uint32_t>(trng.below(30));
            do {
                t.j = static_cast<std::uint32_t>(trng.below(30));
            } while (t.j == t.i);
            do {
                t.k = static_cast<std::uint32_t>(trng.below(30));
            } while (t.k == t.i || t.k == t.j);
            unlabeled.triplets.push_back(t);
        }
        const auto labeled = label_triplets(teacher, unlabeled, Temperature(1.0));

        // held-out split
        TripletDataset train_ds, test_ds;
        train_ds.kind = test_ds.kind = LabelKind::both;
        for (std::size_t s = 0; s < labeled.dataset.size(); ++s) {
            auto& dst = s < 3500 ? train_ds : test_ds;
            dst.triplets.push_back(labeled.dataset.triplets[s]);
            dst.hard.push_back(labeled.dataset.hard[s]);
            dst.soft.push_back(labeled.dataset.soft[s]);
        }

        DistillConfig cfg;
        cfg.tau_teacher = 1.0;
        cfg.tau_student = 100.0;
        cfg.lambda = 1e-4;
        cfg.seed = 44;
        cfg.steps = 4000;
        cfg.batch_size = 128;
        cfg.optimizer.learning_rate = 1e-2;
        const auto fit = train_student(StudentParams::affine_identity(p), train_ds, inputs, cfg);

        const auto z = student_forward(fit.params, inputs);
        std::size_t agree = 0;
        for (std::size_t s = 0; s < test_ds.size(); ++s) {
            const Triplet& t = test_ds.triplets[s];
            const int student_odd = odd_one_out(pairwise_similarity(z, t.i, t.j, t.k));
            const int teacher_odd = odd_position_of_pair(choice_pair_index(t, test_ds.hard[s]));
            if (student_odd == teacher_odd) ++agree;
        }
        const double agreement = static_cast<double>(agree) / static_cast<double>(test_ds.size());
        INFO("held-out agreement " << agreement);
        CHECK(agreement >= 0.90);
    }

    SUBCASE("lambda = 1e9 pins theta to theta*") {
        const auto ds = random_soft(60, 30, 45);
        DistillConfig cfg;
        cfg.lambda = 1e9;
        cfg.seed = 46;
        cfg.steps = 50;
        cfg.batch_size = 32;
        cfg.optimizer.kind = OptimizerKind::sgd;
        cfg.optimizer.learning_rate = 1e-10;
        const auto fit = train_student(StudentParams::affine_identity(p), ds, inputs, cfg);
        double dist = 0.0;
        for (std::size_t i = 0; i < fit.params.theta.size(); ++i) {
            const double d = fit.params.theta[i] - fit.params.theta_init[i];
            dist += d * d;
        }
        CHECK(std::sqrt(dist) <= 1e-3);
    }

    SUBCASE("empty dataset errors") {
        TripletDataset empty;
        empty.kind = LabelKind::soft;
        DistillConfig cfg;
        CHECK_THROWS_WITH_AS(train_student(StudentParams::affine_identity(p), empty, inputs, cfg),
                             doctest::Contains("EmptyBatch"), Error);
    }

    SUBCASE("bit-reproducible under a fixed seed") {
        const auto ds = random_soft(40, 30, 47);
        DistillConfig cfg;
        cfg.seed = 48;
        cfg.steps = 20;
        cfg.batch_size = 16;
        const auto a = train_student(StudentParams::affine_identity(p), ds, inputs, cfg);
        const auto b = train_student(StudentParams::affine_identity(p), ds, inputs, cfg);
        CHECK(a.params.theta == b.params.theta);
    }

    SUBCASE("final full-data objective never exceeds the initial one") {
        const auto ds = random_soft(80, 30, 49);
        DistillConfig cfg;
        cfg.seed = 50;
        cfg.steps = 30;
        cfg.batch_size = 64;
        cfg.tau_student = 10.0;
        const auto init = StudentParams::affine_identity(p);
        const auto fit = train_student(init, ds, inputs, cfg);
        CHECK(distill_objective(fit.params, ds, inputs, cfg) <=
              distill_objective(init, ds, inputs, cfg) + 1e-12);
    }
}
