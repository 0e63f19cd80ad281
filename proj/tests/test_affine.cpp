#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "alignet/affine.hpp"
#include "alignet/rng.hpp"
#include "fd_check.hpp"

using namespace alignet;

namespace {

EmbeddingMatrix random_matrix(std::size_t m, std::size_t p, std::uint64_t seed, double scale = 1.0) {
    EmbeddingMatrix mat(m, p);
    Rng rng(seed);
    for (auto& v : mat.data) v = scale * rng.normal();
    return mat;
}

TripletDataset random_soft_dataset(std::size_t n, std::size_t m, std::uint64_t seed) {
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

AffineTransform random_transform(std::size_t p, std::uint64_t seed, double spread = 0.3) {
    AffineTransform t = AffineTransform::identity(p);
    Rng rng(seed);
    for (auto& v : t.weight) v += spread * rng.normal();
    for (auto& v : t.bias) v = spread * rng.normal();
    return t;
}

std::vector<double> pack(const AffineTransform& t) {
    std::vector<double> params = t.weight;
    params.insert(params.end(), t.bias.begin(), t.bias.end());
    return params;
}

AffineTransform unpack(std::size_t p, const std::vector<double>& params) {
    AffineTransform t;
    t.dim = p;
    t.weight.assign(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(p * p));
    t.bias.assign(params.begin() + static_cast<std::ptrdiff_t>(p * p), params.end());
    return t;
}

} // namespace

TEST_CASE("apply_affine") {
    const auto mat = random_matrix(4, 3, 17);
    SUBCASE("identity is a no-op") {
        const auto out = apply_affine(AffineTransform::identity(3), mat);
        CHECK(out.data == mat.data);
    }
    SUBCASE("2I doubles rows") {
        AffineTransform t = AffineTransform::identity(2);
        t.w(0, 0) = 2.0;
        t.w(1, 1) = 2.0;
        EmbeddingMatrix ones(1, 2);
        ones.data = {1.0, 1.0};
        const auto out = apply_affine(t, ones);
        CHECK(out.at(0, 0) == 2.0);
        CHECK(out.at(0, 1) == 2.0);
    }
    SUBCASE("random case matches the per-row loop oracle to 1e-14") {
        const auto t = random_transform(3, 5);
        const auto out = apply_affine(t, mat);
        for (std::size_t r = 0; r < mat.rows; ++r) {
            for (std::size_t row = 0; row < 3; ++row) {
                double expected = t.bias[row];
                for (std::size_t c = 0; c < 3; ++c) expected += t.w(row, c) * mat.at(r, c);
                CHECK(out.at(r, row) == doctest::Approx(expected).epsilon(1e-14));
            }
        }
    }
    SUBCASE("dimension mismatch") {
        CHECK_THROWS_WITH_AS(apply_affine(AffineTransform::identity(5), mat),
                             doctest::Contains("DimensionMismatch"), Error);
    }
}

TEST_CASE("ud_regularizer") {
    SUBCASE("scaled identities are unpenalized") {
        for (double c : {-2.0, 0.5, 1.0, 10.0}) {
            AffineTransform t = AffineTransform::identity(4);
            for (std::size_t r = 0; r < 4; ++r) t.w(r, r) = c;
            CHECK(ud_regularizer(t) == doctest::Approx(0.0).epsilon(1e-15));
        }
    }
    SUBCASE("diag(1,3) has value 2") {
        AffineTransform t = AffineTransform::identity(2);
        t.w(0, 0) = 1.0;
        t.w(1, 1) = 3.0;
        CHECK(ud_regularizer(t) == doctest::Approx(2.0).epsilon(1e-14));
    }
    SUBCASE("invariant under adding c*I (property)") {
        Rng rng(21);
        for (int trial = 0; trial < 50; ++trial) {
            auto t = random_transform(4, 100 + trial);
            const double base = ud_regularizer(t);
            CHECK(base >= 0.0);
            const double c = 10.0 * rng.normal();
            auto shifted = t;
            for (std::size_t r = 0; r < 4; ++r) shifted.w(r, r) += c;
            CHECK(ud_regularizer(shifted) == doctest::Approx(base).epsilon(1e-9));
        }
    }
}

TEST_CASE("ud_objective composes soft loss and regularizer") {
    const std::size_t p = 4;
    const auto mat = random_matrix(8, p, 31);
    auto ds = random_soft_dataset(12, 8, 32);
    UdConfig cfg;
    cfg.lambda = 0.37;
    cfg.tau = 1.0;
    const auto t = random_transform(p, 33);

    SUBCASE("matches the compositional oracle to 1e-12") {
        const EmbeddingMatrix transformed = apply_affine(t, mat);
        std::vector<ProbTriple> q;
        for (const auto& tri : ds.triplets)
            q.push_back(triplet_probs(pairwise_similarity(transformed, tri.i, tri.j, tri.k),
                                      Temperature(cfg.tau)));
        const double oracle = soft_align_loss(ds.soft, q) + cfg.lambda * ud_regularizer(t);
        CHECK(ud_objective(t, mat, ds, cfg) == doctest::Approx(oracle).epsilon(1e-12));
    }
    SUBCASE("p* equal to current q with lambda=0 gives zero") {
        UdConfig zero = cfg;
        zero.lambda = 0.0;
        const EmbeddingMatrix transformed = apply_affine(t, mat);
        for (std::size_t s = 0; s < ds.size(); ++s) {
            ds.soft[s] = triplet_probs(
                pairwise_similarity(transformed, ds.triplets[s].i, ds.triplets[s].j, ds.triplets[s].k),
                Temperature(zero.tau));
        }
        CHECK(ud_objective(t, mat, ds, zero) == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("empty dataset errors") {
        TripletDataset empty;
        empty.kind = LabelKind::soft;
        CHECK_THROWS_WITH_AS(ud_objective(t, mat, empty, cfg), doctest::Contains("EmptyDataset"),
                             Error);
    }
}

TEST_CASE("ud_gradients match central finite differences (rel err <= 1e-4)") {
    Rng seeder(77);
    for (int instance = 0; instance < 10; ++instance) {
        const std::size_t p = 2 + seeder.below(5);             // p <= 6
        const std::size_t m = 4 + seeder.below(5);
        const std::size_t n = 1 + seeder.below(8);             // <= 8 triplets
        const auto mat = random_matrix(m, p, 1000 + instance);
        const auto ds = random_soft_dataset(n, m, 2000 + instance);
        UdConfig cfg;
        cfg.lambda = instance % 2 == 0 ? 0.15 : 0.0;
        const auto t = random_transform(p, 3000 + instance);

        const auto grads = ud_gradients(t, mat, ds, cfg);
        std::vector<double> analytic = grads.d_weight;
        analytic.insert(analytic.end(), grads.d_bias.begin(), grads.d_bias.end());

        const double err = testsupport::max_relative_gradient_error(
            analytic,
            [&](const std::vector<double>& params) {
                return ud_objective(unpack(p, params), mat, ds, cfg);
            },
            pack(t));
        CHECK(err <= 1e-4);
    }
}

TEST_CASE("regularizer-only gradient vanishes at scaled identities") {
    const std::size_t p = 5;
    AffineTransform t = AffineTransform::identity(p);
    for (std::size_t r = 0; r < p; ++r) t.w(r, r) = 3.7;
    const auto mat = random_matrix(6, p, 55);
    auto ds = random_soft_dataset(4, 6, 56);
    // isolate the regularizer: make soft targets equal to current predictions
    const EmbeddingMatrix transformed = apply_affine(t, mat);
    UdConfig cfg;
    cfg.lambda = 2.0;
    for (std::size_t s = 0; s < ds.size(); ++s) {
        ds.soft[s] = triplet_probs(
            pairwise_similarity(transformed, ds.triplets[s].i, ds.triplets[s].j, ds.triplets[s].k),
            Temperature(cfg.tau));
    }
    const auto grads = ud_gradients(t, mat, ds, cfg);
    for (double g : grads.d_weight) CHECK(std::abs(g) <= 1e-8);
}

TEST_CASE("full-batch descent with small steps never increases the objective") {
    const std::size_t p = 3;
    const auto mat = random_matrix(6, p, 61);
    const auto ds = random_soft_dataset(10, 6, 62);
    UdConfig cfg;
    cfg.lambda = 0.05;
    AffineTransform t = random_transform(p, 63, 0.2);
    double prev = ud_objective(t, mat, ds, cfg);
    for (int step = 0; step < 25; ++step) {
        const auto grads = ud_gradients(t, mat, ds, cfg);
        for (std::size_t i = 0; i < t.weight.size(); ++i) t.weight[i] -= 1e-4 * grads.d_weight[i];
        for (std::size_t i = 0; i < t.bias.size(); ++i) t.bias[i] -= 1e-4 * grads.d_bias[i];
        const double cur = ud_objective(t, mat, ds, cfg);
        CHECK(cur <= prev + 1e-12);
        prev = cur;
    }
}

TEST_CASE("identity start reproduces base odd-one-out choices exactly") {
    const auto mat = random_matrix(9, 4, 71);
    const auto t = AffineTransform::identity(4);
    const auto transformed = apply_affine(t, mat);
    Rng rng(72);
    for (int trial = 0; trial < 50; ++trial) {
        const auto i = static_cast<std::uint32_t>(rng.below(9));
        auto j = i;
        auto k = i;
        while (j == i) j = static_cast<std::uint32_t>(rng.below(9));
        while (k == i || k == j) k = static_cast<std::uint32_t>(rng.below(9));
        CHECK(odd_one_out(pairwise_similarity(mat, i, j, k)) ==
              odd_one_out(pairwise_similarity(transformed, i, j, k)));
    }
}

TEST_CASE("fit_ud basics") {
    const std::size_t p = 4;
    const auto mat = random_matrix(12, p, 81, 1.2);
    const auto ds = random_soft_dataset(60, 12, 82);

    SUBCASE("final full-data objective never exceeds the initial one") {
        UdConfig cfg;
        cfg.seed = 5;
        cfg.steps = 40;
        cfg.batch_size = 16;
        cfg.optimizer.learning_rate = 1e-2;
        const auto fit = fit_ud(mat, ds, cfg);
        const double initial = ud_objective(AffineTransform::identity(p), mat, ds, cfg);
        CHECK(ud_objective(fit.transform, mat, ds, cfg) <= initial + 1e-12);
        CHECK(fit.log.epochs.size() >= 1);
    }
    SUBCASE("huge lambda pins W to a scaled identity and keeps b near zero") {
        UdConfig cfg;
        cfg.seed = 6;
        cfg.lambda = 1e9;
        cfg.steps = 30;
        cfg.batch_size = 64;
        cfg.optimizer.kind = OptimizerKind::sgd;
        cfg.optimizer.learning_rate = 1e-6;
        const auto fit = fit_ud(mat, ds, cfg);
        double trace = 0.0;
        for (std::size_t r = 0; r < p; ++r) trace += fit.transform.w(r, r);
        const double c = trace / static_cast<double>(p);
        double dev = 0.0;
        for (std::size_t r = 0; r < p; ++r)
            for (std::size_t col = 0; col < p; ++col) {
                const double d = fit.transform.w(r, col) - (r == col ? c : 0.0);
                dev += d * d;
            }
        CHECK(std::sqrt(dev) <= 1e-3);
        double bias_norm = 0.0;
        for (double b : fit.transform.bias) bias_norm += b * b;
        CHECK(std::sqrt(bias_norm) <= 1e-3);
    }
    SUBCASE("empty dataset errors") {
        TripletDataset empty;
        empty.kind = LabelKind::soft;
        UdConfig cfg;
        CHECK_THROWS_WITH_AS(fit_ud(mat, empty, cfg), doctest::Contains("EmptyDataset"), Error);
    }
    SUBCASE("deterministic per seed") {
        UdConfig cfg;
        cfg.seed = 7;
        cfg.steps = 10;
        cfg.batch_size = 32;
        const auto fit1 = fit_ud(mat, ds, cfg);
        const auto fit2 = fit_ud(mat, ds, cfg);
        CHECK(fit1.transform.weight == fit2.transform.weight);
        CHECK(fit1.transform.bias == fit2.transform.bias);
    }
}
