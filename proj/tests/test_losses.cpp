#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "emdloss/errors.hpp"
#include "emdloss/ground_distance.hpp"
#include "emdloss/losses.hpp"
#include "emdloss/ot_oracle.hpp"
#include "emdloss/random_instances.hpp"
#include "emdloss/rng.hpp"
#include "support/test_helpers.hpp"

using namespace emdloss;
using namespace emdloss_test;

TEST_CASE("cross entropy on the uniform two-class case") {
    LossResult r = cross_entropy({0.5, 0.5}, {0, 2}, 0.0);
    CHECK(r.value == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(r.grad[0] == doctest::Approx(-2.0));
    CHECK(r.grad[1] == 0.0);
}

TEST_CASE("cross entropy is zero on a perfect prediction") {
    LossResult r = cross_entropy({1.0, 0.0, 0.0}, {0, 3}, 0.0);
    CHECK(r.value == 0.0);
}

TEST_CASE("cross entropy with epsilon, cross-checked against the fused logit path") {
    const Vec p{0.2, 0.1, 0.7};
    LossResult r = cross_entropy(p, {2, 3}, 1e-6);
    CHECK(r.value == doctest::Approx(-std::log(0.700001)).epsilon(1e-15));

    // logits whose softmax reproduces p exactly up to normalization
    Vec logits(3);
    for (std::size_t i = 0; i < 3; ++i) logits[i] = std::log(p[i]) + 1.3;
    LogitLoss fused = cross_entropy_from_logits(logits, {2, 3}, 1e-6);
    CHECK(fused.value == doctest::Approx(r.value).epsilon(1e-12));
}

TEST_CASE("fused logit gradient equals p-space gradient composed with the softmax Jacobian") {
    Rng rng(87);
    for (int rep = 0; rep < 30; ++rep) {
        const std::size_t c = 2 + rng.below(6);
        Vec logits(c);
        for (double& x : logits) x = rng.uniform(-3.0, 3.0);
        const Target t{static_cast<int>(rng.below(c)), static_cast<int>(c)};

        double mx = logits[0];
        for (double v : logits) mx = std::max(mx, v);
        Vec p(c);
        double denom = 0.0;
        for (std::size_t i = 0; i < c; ++i) denom += p[i] = std::exp(logits[i] - mx);
        for (double& v : p) v /= denom;

        for (double eps : {0.0, 1e-6}) {
            LogitLoss fused = cross_entropy_from_logits(logits, t, eps);
            LossResult plain = cross_entropy(p, t, eps);
            const double gp = dot(plain.grad, p);
            for (std::size_t i = 0; i < c; ++i) {
                const double composed = p[i] * (plain.grad[i] - gp);
                CHECK(fused.logit_grad[i] == doctest::Approx(composed).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("l2 regression examples") {
    CHECK(l2_regression(3.0, {3, 8}).value == 0.0);
    CHECK(l2_regression(3.0, {3, 8}).grad == 0.0);
    CHECK(l2_regression(2.5, {3, 8}).value == doctest::Approx(0.25));
    CHECK(l2_regression(2.5, {3, 8}).grad == doctest::Approx(-1.0));
    CHECK(l2_regression(0.0, {7, 8}).value == doctest::Approx(49.0));
    CHECK(l2_regression(0.0, {7, 8}).grad == doctest::Approx(-14.0));
}

TEST_CASE("squared-CDF loss on simple shifts") {
    {
        LossResult r = emd2_ordered({0.0, 1.0, 0.0}, {0, 3});
        CHECK(r.value == doctest::Approx(1.0));
    }
    {
        LossResult r = emd2_ordered({0.0, 0.0, 1.0}, {0, 3});
        CHECK(r.value == doctest::Approx(2.0));
    }
    {
        // identity: CDF difference vanishes everywhere
        LossResult r = emd2_ordered({0.0, 1.0, 0.0}, {1, 3});
        CHECK(r.value == 0.0);
        for (double g : r.grad) CHECK(g == 0.0);
    }
}

TEST_CASE("one-hot displacement law is exact") {
    for (int c : {2, 3, 5, 17, 32}) {
        for (int j = 0; j < c; ++j) {
            Target tj{j, c};
            const Vec p = tj.one_hot();
            for (int k = 0; k < c; ++k) {
                const double v = emd2_ordered(p, {k, c}).value;
                CHECK(v == static_cast<double>(std::abs(j - k)));
            }
        }
    }
}

TEST_CASE("squared-CDF gradient: suffix-sum form equals coefficient expansion") {
    // independent route: grad_n = 2 * [ sum_i (C-i+1)(p_i - t_i)
    //                                   - sum_{i<n} (n-i)(p_i - t_i) ]
    Rng rng(55);
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t c = 2 + rng.below(9);
        Vec p = random_simplex(rng, c);
        Target t{static_cast<int>(rng.below(c)), static_cast<int>(c)};
        const Vec tv = t.one_hot();
        LossResult r = emd2_ordered(p, t);

        double head = 0.0;
        for (std::size_t i = 0; i < c; ++i)
            head += static_cast<double>(c - i) * (p[i] - tv[i]);
        for (std::size_t n = 0; n < c; ++n) {
            double correction = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                correction += static_cast<double>(n - i) * (p[i] - tv[i]);
            const double coeff = 2.0 * (head - correction);
            CHECK(std::abs(r.grad[n] - coeff) < 1e-12);
        }
    }
}

TEST_CASE("two evaluation routes for the C=4 example agree") {
    const Vec p{0.1, 0.2, 0.3, 0.4};
    const Target t{1, 4};
    LossResult r = emd2_ordered(p, t);
    // direct Eq-style sum of squared CDF differences
    double direct = 0.0, cp = 0.0, ct = 0.0;
    const Vec tv = t.one_hot();
    for (std::size_t i = 0; i < 4; ++i) {
        cp += p[i];
        ct += tv[i];
        direct += (cp - ct) * (cp - ct);
    }
    CHECK(std::abs(r.value - direct) < 1e-12);
}

TEST_CASE("squared-CDF loss is zero only at the target one-hot") {
    Rng rng(66);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t c = 2 + rng.below(7);
        Target t{static_cast<int>(rng.below(c)), static_cast<int>(c)};
        CHECK(emd2_ordered(t.one_hot(), t).value == 0.0);
        Vec p = random_simplex(rng, c);
        double dist = 0.0;
        const Vec tv = t.one_hot();
        for (std::size_t i = 0; i < c; ++i) dist = std::max(dist, std::abs(p[i] - tv[i]));
        if (dist > 1e-6) CHECK(emd2_ordered(p, t).value > 1e-12);
    }
}

TEST_CASE("single-label EMD evaluates the cost column") {
    // one-hot prediction on the true class: zero diagonal kills the value
    Rng rng(12);
    GroundMatrix d = random_ground_matrix(rng, 4);
    Target t{2, 4};
    CHECK(emd_single_label(t.one_hot(), t, d).value == 0.0);

    GroundMatrix d3;
    d3.entries = Mat(3, 3, 0.0);
    d3.entries(0, 1) = d3.entries(1, 0) = 1.0;
    d3.entries(2, 1) = d3.entries(1, 2) = 0.5;
    d3.entries(0, 2) = d3.entries(2, 0) = 0.3;
    LossResult r = emd_single_label({0.2, 0.5, 0.3}, {1, 3}, d3);
    CHECK(r.value == doctest::Approx(0.35));
    CHECK(r.grad[0] == doctest::Approx(1.0));
    CHECK(r.grad[1] == 0.0);
    CHECK(r.grad[2] == doctest::Approx(0.5));
}

TEST_CASE("single-label EMD equals the exact oracle for one-hot targets") {
    Rng rng(42);
    for (int rep = 0; rep < 60; ++rep) {
        const std::size_t c = 2 + rng.below(5);  // C <= 6
        Vec p = random_simplex(rng, c);
        Target t{static_cast<int>(rng.below(c)), static_cast<int>(c)};
        GroundMatrix d = random_ground_matrix(rng, c);
        const double fast = emd_single_label(p, t, d).value;
        const double exact = emd_exact(p, t.one_hot(), d.entries);
        CHECK(std::abs(fast - exact) < 1e-9);
    }
}

TEST_CASE("hybrid loss with lambda 0 is bit-identical to cross entropy") {
    Rng rng(31);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t c = 2 + rng.below(7);
        Vec p = random_interior_simplex(rng, c);
        Target t{static_cast<int>(rng.below(c)), static_cast<int>(c)};
        GroundMatrix d = random_ground_matrix(rng, c);
        HybridParams params{0.0, 2.0, -0.25, 1e-6};
        LossResult hybrid = hybrid_loss(p, t, d, params);
        LossResult xe = cross_entropy(p, t, 1e-6);
        CHECK(hybrid.value == xe.value);
        REQUIRE(hybrid.grad.size() == xe.grad.size());
        for (std::size_t i = 0; i < c; ++i) CHECK(hybrid.grad[i] == xe.grad[i]);
    }
}

TEST_CASE("concentrating all mass on the truth is rewarded when mu is negative") {
    Rng rng(77);
    GroundMatrix d = random_ground_matrix(rng, 5);
    Target t{3, 5};
    HybridParams params{0.8, 1.0, -0.5, 1e-6};
    LossResult hybrid = hybrid_loss(t.one_hot(), t, d, params);
    LossResult xe = cross_entropy(t.one_hot(), t, 1e-6);
    CHECK(hybrid.value - xe.value == doctest::Approx(0.8 * -0.5).epsilon(1e-12));
}

TEST_CASE("hybrid gradient matches central finite differences") {
    Rng rng(29);
    int done = 0;
    while (done < 100) {
        const std::size_t c = 2 + rng.below(7);
        Vec p = random_interior_simplex(rng, c);
        Target t{static_cast<int>(rng.below(c)), static_cast<int>(c)};
        GroundMatrix d = random_ground_matrix(rng, c);
        HybridParams params{0.3, 2.0, -0.25, 1e-6};
        LossResult r = hybrid_loss(p, t, d, params);
        Vec fd = central_diff(
            [&](const Vec& q) { return hybrid_loss(q, t, d, params).value; }, p);
        CHECK(rel_error(fd, r.grad) < 1e-6);
        ++done;
    }
}

TEST_CASE("ordinal regularizer penalizes mass strictly more one class further out") {
    // a probe mass delta sits at k+d; relocating it to k+(d+1) must cost more
    const int c = 6;
    GroundMatrix d = scaled(ordinal_matrix(c), 1.0 / (c - 1));
    const double delta = 0.05;
    for (double omega : {1.0, 2.0}) {
        HybridParams params{1.0, omega, 0.0, 1e-6};
        const Target t{2, c};
        auto reg_term = [&](const Vec& p) {
            return hybrid_loss(p, t, d, params).value - cross_entropy(p, t, 1e-6).value;
        };
        for (int dist = 1; dist + t.class_index + 1 < c; ++dist) {
            Vec base(c, (1.0 - delta) / c);
            Vec nearer = base, further = base;
            nearer[static_cast<std::size_t>(t.class_index + dist)] += delta;
            further[static_cast<std::size_t>(t.class_index + dist + 1)] += delta;
            CHECK(reg_term(further) > reg_term(nearer));
        }
    }
}

TEST_CASE("every loss returns finite values and gradients across the simplex") {
    Rng rng(999);
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t c = 2 + rng.below(7);
        Vec p = random_simplex(rng, c);
        Target t{static_cast<int>(rng.below(c)), static_cast<int>(c)};
        GroundMatrix d = random_ground_matrix(rng, c);

        LossResult xe = cross_entropy(p, t, 1e-6);
        CHECK(std::isfinite(xe.value));
        CHECK(all_finite(xe.grad));
        LossResult e2 = emd2_ordered(p, t);
        CHECK(std::isfinite(e2.value));
        CHECK(all_finite(e2.grad));
        LossResult sl = emd_single_label(p, t, d);
        CHECK(std::isfinite(sl.value));
        CHECK(all_finite(sl.grad));
        LossResult hy = hybrid_loss(p, t, d, {0.5, 2.0, -0.25, 1e-6});
        CHECK(std::isfinite(hy.value));
        CHECK(all_finite(hy.grad));
    }
}

TEST_CASE("dimension mismatches are rejected") {
    GroundMatrix d = ordinal_matrix(4);
    CHECK_THROWS_AS(cross_entropy({0.5, 0.5}, {0, 3}, 0.0), invalid_input_error);
    CHECK_THROWS_AS(emd2_ordered({0.5, 0.5}, {2, 3}), invalid_input_error);
    CHECK_THROWS_AS(emd_single_label({0.5, 0.5}, {0, 2}, d), invalid_input_error);
    CHECK_THROWS_AS(hybrid_loss({0.5, 0.5}, {0, 2}, d, {1.0, 1.0, 0.0, 1e-6}),
                    invalid_input_error);
    CHECK_THROWS_AS(cross_entropy({}, {0, 0}, 0.0), invalid_input_error);
}

TEST_CASE("sinkhorn transport cost shrinks toward zero for self transport") {
    Rng rng(3);
    const int c = 5;
    const Target t{2, c};
    GroundMatrix d = random_ground_matrix(rng, c);
    Vec smoothed(c, kSinkhornTargetSmoothing / c);
    smoothed[2] += 1.0 - kSinkhornTargetSmoothing;

    double prev = std::numeric_limits<double>::infinity();
    for (double reg : {1.0, 0.1, 0.01}) {
        const double v = sinkhorn_emd(smoothed, t, d, reg, 2000).value;
        CHECK(v < prev);
        prev = v;
    }
    CHECK(prev < 1e-3);  // exact optimum is 0
}

TEST_CASE("sinkhorn approaches the exact oracle at small regularization") {
    Rng rng(17);
    for (int rep = 0; rep < 30; ++rep) {
        const std::size_t c = 2 + rng.below(5);
        Vec p = random_interior_simplex(rng, c);
        Target t{static_cast<int>(rng.below(c)), static_cast<int>(c)};
        GroundMatrix d = random_ground_matrix(rng, c);
        Vec smoothed(c, kSinkhornTargetSmoothing / static_cast<double>(c));
        smoothed[static_cast<std::size_t>(t.class_index)] += 1.0 - kSinkhornTargetSmoothing;

        SinkhornResult s = sinkhorn_transport(p, t, d, 0.01, 2000);
        const double exact = emd_exact(p, smoothed, d.entries);
        CHECK(std::abs(s.value - exact) <= 0.02 * std::max(exact, 1e-12));
        for (std::size_t i = 0; i < c; ++i) {
            CHECK(std::abs(s.row_marginal[i] - p[i]) < 1e-6);
            CHECK(std::abs(s.col_marginal[i] - smoothed[i]) < 1e-6);
        }
    }
}

TEST_CASE("large regularization keeps the cost within the entropy offset") {
    // the entropic plan is feasible, so cost >= exact; the entropy gap is at
    // most reg * log(C^2) because plan entropies differ by at most log(C^2)
    Rng rng(19);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t c = 2 + rng.below(5);
        Vec p = random_interior_simplex(rng, c);
        Target t{static_cast<int>(rng.below(c)), static_cast<int>(c)};
        GroundMatrix d = random_ground_matrix(rng, c);
        Vec smoothed(c, kSinkhornTargetSmoothing / static_cast<double>(c));
        smoothed[static_cast<std::size_t>(t.class_index)] += 1.0 - kSinkhornTargetSmoothing;

        const double reg = 10.0;
        SinkhornResult s = sinkhorn_transport(p, t, d, reg, 500);
        const double exact = emd_exact(p, smoothed, d.entries);
        CHECK(s.value >= exact - 1e-9);
        CHECK(s.value <= exact + reg * 2.0 * std::log(static_cast<double>(c)) + 1e-9);
        for (std::size_t i = 0; i < c; ++i) {
            CHECK(std::abs(s.row_marginal[i] - p[i]) < 1e-6);
            CHECK(std::abs(s.col_marginal[i] - smoothed[i]) < 1e-6);
        }
    }
}

TEST_CASE("sinkhorn gradient is the centered dual potential") {
    Rng rng(23);
    Vec p = random_interior_simplex(rng, 4);
    Target t{1, 4};
    GroundMatrix d = random_ground_matrix(rng, 4);
    LossResult r = sinkhorn_emd(p, t, d, 0.5, 400);
    CHECK(std::abs(vec_sum(r.grad)) < 1e-9);
    CHECK(all_finite(r.grad));
}

TEST_CASE("sinkhorn rejects bad inputs") {
    GroundMatrix d = ordinal_matrix(3);
    CHECK_THROWS_AS(sinkhorn_emd({1.0, 0.0, 0.0}, {0, 3}, d, 0.1, 10), invalid_input_error);
    CHECK_THROWS_AS(sinkhorn_emd({0.3, 0.3, 0.4}, {0, 3}, d, 0.0, 10), invalid_input_error);
    CHECK_THROWS_AS(sinkhorn_emd({0.3, 0.3, 0.4}, {0, 3}, d, 0.1, 0), invalid_input_error);
}
