#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "emdloss/errors.hpp"
#include "emdloss/ground_distance.hpp"
#include "emdloss/rng.hpp"

using namespace emdloss;

TEST_CASE("accumulator L1-normalizes each instance") {
    CentroidAccumulator acc(2, 2);
    acc.add({2.0, 2.0}, 0);
    CHECK(acc.count(0) == 1);
    Vec c0 = acc.centroid(0);
    CHECK(c0[0] == doctest::Approx(0.5));
    CHECK(c0[1] == doctest::Approx(0.5));
}

TEST_CASE("zero-norm features are skipped, not accumulated") {
    CentroidAccumulator acc(2, 2);
    acc.add({0.0, 0.0}, 0);
    CHECK(acc.count(0) == 0);
    CHECK(acc.skipped() == 1);
}

TEST_CASE("centroid is the mean of normalized features") {
    CentroidAccumulator acc(1, 2);
    acc.add({1.0, 0.0}, 0);
    acc.add({0.0, 1.0}, 0);
    Vec c = acc.centroid(0);
    CHECK(c[0] == doctest::Approx(0.5));
    CHECK(c[1] == doctest::Approx(0.5));
}

TEST_CASE("identical centroids give an all-zero distance matrix") {
    CentroidAccumulator acc(3, 2);
    for (int cls = 0; cls < 3; ++cls) acc.add({1.0, 1.0}, cls);
    Mat dbar = raw_distance_matrix(acc);
    for (double v : dbar.data()) CHECK(v == 0.0);
}

TEST_CASE("unit axis centroids are sqrt(2) apart") {
    CentroidAccumulator acc(2, 2);
    acc.add({1.0, 0.0}, 0);
    acc.add({0.0, 1.0}, 1);
    Mat dbar = raw_distance_matrix(acc, 2);
    CHECK(dbar(0, 1) == doctest::Approx(std::sqrt(2.0)));
    CHECK(dbar(1, 0) == doctest::Approx(std::sqrt(2.0)));
    CHECK(dbar(0, 0) == 0.0);
}

TEST_CASE("centroids on a line reproduce the line gaps up to the embedding scale") {
    // positions 0, 0.1, 0.3 embedded as (x, 1-x): unit L1 norm is preserved
    // by normalization, so the centroids sit exactly at the embeddings and
    // pairwise distances are proportional to [[0,1,3],[1,0,2],[3,2,0]]
    CentroidAccumulator acc(3, 2);
    const double pos[3] = {0.0, 0.1, 0.3};
    for (int cls = 0; cls < 3; ++cls) acc.add({pos[cls], 1.0 - pos[cls]}, cls);
    const double pattern[3][3] = {{0, 1, 3}, {1, 0, 2}, {3, 2, 0}};

    Mat l1 = raw_distance_matrix(acc, 1);
    Mat l2 = raw_distance_matrix(acc, 2);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(l1(i, j) == doctest::Approx(0.2 * pattern[i][j]).epsilon(1e-12));
            CHECK(l2(i, j) == doctest::Approx(0.1 * std::sqrt(2.0) * pattern[i][j]).epsilon(1e-12));
        }
}

TEST_CASE("empty class is an error naming the class") {
    CentroidAccumulator acc(3, 2);
    acc.add({1.0, 0.0}, 0);
    acc.add({0.0, 1.0}, 2);
    CHECK_THROWS_WITH_AS(raw_distance_matrix(acc), doctest::Contains("class 1"),
                         insufficient_data_error);
}

TEST_CASE("percentile transform ranks each row by strictly-smaller counts") {
    Mat dbar(3, 3, 0.0);
    double row[3] = {0.3, 0.0, 0.7};
    for (std::size_t j = 0; j < 3; ++j) dbar(0, j) = row[j];
    Mat b = percentile_transform(dbar);
    CHECK(b(0, 0) == doctest::Approx(1.0 / 3.0));
    CHECK(b(0, 1) == 0.0);
    CHECK(b(0, 2) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("ties map to equal percentiles") {
    Mat dbar(2, 2, 4.2);
    Mat b = percentile_transform(dbar);
    for (double v : b.data()) CHECK(v == 0.0);
}

TEST_CASE("a distinct row becomes a permutation of {0, 1/C, ..., (C-1)/C}") {
    emdloss::Rng rng(5);
    Mat dbar(4, 4);
    for (double& v : dbar.data()) v = rng.uniform01();
    Mat b = percentile_transform(dbar);
    for (std::size_t i = 0; i < 4; ++i) {
        Vec row(b.row(i), b.row(i) + 4);
        std::sort(row.begin(), row.end());
        for (std::size_t j = 0; j < 4; ++j)
            CHECK(row[j] == doctest::Approx(static_cast<double>(j) / 4.0));
    }
}

TEST_CASE("symmetrize averages with the transpose") {
    Mat b(2, 2, 0.0);
    b(0, 1) = 0.5;
    b(1, 0) = 0.25;
    GroundMatrix d = symmetrize(b);
    CHECK(d.entries(0, 1) == doctest::Approx(0.375));
    CHECK(d.entries(1, 0) == doctest::Approx(0.375));
    CHECK(d.provenance == GroundMatrix::Provenance::learned);

    // fixed point on symmetric input
    GroundMatrix again = symmetrize(d.entries);
    CHECK(again.entries == d.entries);
}

TEST_CASE("learned matrices satisfy the ground matrix invariants") {
    emdloss::Rng rng(9);
    for (int rep = 0; rep < 20; ++rep) {
        const int c = 3 + static_cast<int>(rng.below(6));
        const int dim = 2 + static_cast<int>(rng.below(6));
        CentroidAccumulator acc(c, dim);
        for (int cls = 0; cls < c; ++cls)
            for (int s = 0; s < 5; ++s) {
                Vec f(static_cast<std::size_t>(dim));
                for (double& x : f) x = rng.uniform(-1.0, 1.0);
                acc.add(f, cls);
            }
        GroundMatrix d = symmetrize(percentile_transform(raw_distance_matrix(acc)));
        d.validate();  // symmetric, zero diagonal, entries in [0, 1]
        for (double v : d.entries.data()) CHECK(v <= 1.0);
    }
}

TEST_CASE("ordinal matrix") {
    GroundMatrix d2 = ordinal_matrix(2);
    CHECK(d2.entries(0, 1) == 1.0);
    CHECK(d2.entries(1, 0) == 1.0);
    CHECK(d2.entries(0, 0) == 0.0);

    GroundMatrix d3 = ordinal_matrix(3);
    const double expected[3][3] = {{0, 1, 2}, {1, 0, 1}, {2, 1, 0}};
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) CHECK(d3.entries(i, j) == expected[i][j]);

    // one-dimensional embedding: D(i,j) depends only on j-i
    GroundMatrix d7 = ordinal_matrix(7);
    d7.validate();
    for (std::size_t i = 0; i < 7; ++i)
        for (std::size_t j = i; j < 7; ++j)
            CHECK(d7.entries(i, j) == static_cast<double>(j - i));

    CHECK_THROWS_AS(ordinal_matrix(1), invalid_input_error);
}

TEST_CASE("sdd examples") {
    CHECK(sdd(Mat(3, 3, 0.0)) == 0.0);
    Mat m(2, 2, 0.0);
    m(0, 1) = m(1, 0) = 1.0;
    CHECK(sdd(m) == doctest::Approx(0.5));
    // off-diagonal-only population is constant here
    CHECK(sdd(m, false) == doctest::Approx(0.0));
}

TEST_CASE("relabeling classes permutes the learned matrix") {
    emdloss::Rng rng(21);
    const int c = 5, dim = 4;
    std::vector<Vec> features;
    std::vector<int> labels;
    for (int cls = 0; cls < c; ++cls)
        for (int s = 0; s < 4; ++s) {
            Vec f(dim);
            for (double& x : f) x = rng.uniform(0.1, 1.0);
            features.push_back(f);
            labels.push_back(cls);
        }

    const int perm[5] = {3, 0, 4, 1, 2};
    CentroidAccumulator base(c, dim), permuted(c, dim);
    for (std::size_t i = 0; i < features.size(); ++i) {
        base.add(features[i], labels[i]);
        permuted.add(features[i], perm[labels[static_cast<std::size_t>(i)]]);
    }
    Mat d_base = symmetrize(percentile_transform(raw_distance_matrix(base))).entries;
    Mat d_perm = symmetrize(percentile_transform(raw_distance_matrix(permuted))).entries;
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j)
            CHECK(d_perm(static_cast<std::size_t>(perm[i]), static_cast<std::size_t>(perm[j])) ==
                  d_base(i, j));
}

TEST_CASE("global feature scaling leaves the percentile matrix unchanged") {
    emdloss::Rng rng(33);
    const int c = 4, dim = 6;
    CentroidAccumulator plain(c, dim), scaled_up(c, dim);
    for (int cls = 0; cls < c; ++cls)
        for (int s = 0; s < 6; ++s) {
            Vec f(dim);
            for (double& x : f) x = rng.uniform(-1.0, 1.0);
            Vec g = f;
            for (double& x : g) x *= 37.5;
            plain.add(f, cls);
            scaled_up.add(g, cls);
        }
    Mat b_plain = percentile_transform(raw_distance_matrix(plain));
    Mat b_scaled = percentile_transform(raw_distance_matrix(scaled_up));
    CHECK(b_plain == b_scaled);  // ranks are exact, no tolerance needed
}

TEST_CASE("line-ordered centroids yield row-monotone learned distances") {
    const int c = 6;
    CentroidAccumulator acc(c, 2);
    for (int cls = 0; cls < c; ++cls) {
        const double x = 0.1 + 0.12 * cls;
        acc.add({x, 1.0 - x}, cls);
    }
    GroundMatrix d = symmetrize(percentile_transform(raw_distance_matrix(acc)));
    for (int i = 0; i < c; ++i)
        for (int j = 0; j < c; ++j)
            for (int j2 = 0; j2 < c; ++j2)
                if (j != i && j2 != i && std::abs(i - j) < std::abs(i - j2))
                    CHECK(d.entries(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) <
                          d.entries(static_cast<std::size_t>(i), static_cast<std::size_t>(j2)));
}

TEST_CASE("estimator patches classes missing from an epoch") {
    GroundDistanceEstimator est(3);
    // epoch 1: all classes present
    est.add({1.0, 0.0}, 0);
    est.add({0.5, 0.5}, 1);
    est.add({0.0, 1.0}, 2);
    GroundDistanceEstimate first = est.end_epoch();
    CHECK(first.patched_classes.empty());

    // epoch 2: class 2 missing; its distances carry over
    est.add({0.9, 0.1}, 0);
    est.add({0.3, 0.7}, 1);
    GroundDistanceEstimate second = est.end_epoch();
    REQUIRE(second.patched_classes == std::vector<int>{2});
    CHECK(second.dbar(0, 2) == first.dbar(0, 2));
    CHECK(second.dbar(1, 2) == first.dbar(1, 2));
    CHECK(second.dbar(0, 1) != first.dbar(0, 1));  // refreshed from new features
    second.d.validate();
}

TEST_CASE("a class absent in the first epoch is an error") {
    GroundDistanceEstimator est(3);
    est.add({1.0, 0.0}, 0);
    est.add({0.0, 1.0}, 1);
    CHECK_THROWS_WITH_AS(est.end_epoch(), doctest::Contains("class 2"), insufficient_data_error);
}
