#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "longsiam/rng.hpp"
#include "longsiam/tensor.hpp"

using namespace longsiam;

TEST_CASE("shape basics") {
    Shape s{3, 4, 5};
    CHECK(s.rank() == 3);
    CHECK(s.count() == 60);
    CHECK(s[0] == 3);
    CHECK(s[2] == 5);
    CHECK(s == Shape{3, 4, 5});
    CHECK(s != Shape{3, 4, 6});
    CHECK(Shape{7}.count() == 7);
    CHECK_THROWS_AS(Shape({0, 2}), std::invalid_argument);
    CHECK_THROWS_AS(Shape({-1}), std::invalid_argument);
}

TEST_CASE("shape rejects element-count overflow") {
    CHECK_THROWS_AS(Shape({1000000, 1000000, 1000000, 1000000}), std::overflow_error);
}

TEST_CASE("tensor construction and element access") {
    TensorF t = TensorF::zeros(Shape{2, 3});
    CHECK(t.size() == 6);
    for (float v : t) CHECK(v == 0.0f);
    t[5] = 2.5f;
    CHECK(t[5] == 2.5f);
    CHECK(t.at({1, 2}) == 2.5f);
    t.at({0, 1}) = -1.0f;
    CHECK(t[1] == -1.0f);

    TensorF f = TensorF::full(Shape{4}, 3.0f);
    for (float v : f) CHECK(v == 3.0f);
}

TEST_CASE("at() validates indices") {
    TensorF t = TensorF::zeros(Shape{2, 3});
    CHECK_THROWS_AS(t.at({2, 0}), std::out_of_range);
    CHECK_THROWS_AS(t.at({0, 3}), std::out_of_range);
    CHECK_THROWS_AS(t.at({0}), std::invalid_argument);
}

TEST_CASE("row-major layout: last axis is contiguous") {
    TensorF t = TensorF::zeros(Shape{2, 3, 4});
    t.at({1, 2, 3}) = 9.0f;
    CHECK(t[(1 * 3 + 2) * 4 + 3] == 9.0f);
}

TEST_CASE("elementwise arithmetic") {
    TensorF a(Shape{2, 2}, {1, 2, 3, 4});
    TensorF b(Shape{2, 2}, {10, 20, 30, 40});
    CHECK(add(a, b) == TensorF(Shape{2, 2}, {11, 22, 33, 44}));
    CHECK(sub(b, a) == TensorF(Shape{2, 2}, {9, 18, 27, 36}));
    CHECK(mul(a, b) == TensorF(Shape{2, 2}, {10, 40, 90, 160}));
    CHECK(neg(a) == TensorF(Shape{2, 2}, {-1, -2, -3, -4}));
    CHECK_THROWS_AS(add(a, TensorF::zeros(Shape{4})), std::invalid_argument);
}

TEST_CASE("matmul against a hand-computed product") {
    // [[1,2,3],[4,5,6]] @ [[7,8],[9,10],[11,12]] = [[58,64],[139,154]]
    TensorF a(Shape{2, 3}, {1, 2, 3, 4, 5, 6});
    TensorF b(Shape{3, 2}, {7, 8, 9, 10, 11, 12});
    TensorF c = matmul(a, b);
    CHECK(c.shape() == Shape{2, 2});
    CHECK(c[0] == 58.0f);
    CHECK(c[1] == 64.0f);
    CHECK(c[2] == 139.0f);
    CHECK(c[3] == 154.0f);
    CHECK_THROWS_AS(matmul(a, a), std::invalid_argument);
}

TEST_CASE("matmul matches a naive triple loop on random cases") {
    Rng rng(42);
    for (int rep = 0; rep < 10; ++rep) {
        const int64_t i = 1 + rng.uniform_int(6), p = 1 + rng.uniform_int(6),
                      j = 1 + rng.uniform_int(6);
        TensorD a = TensorD::zeros(Shape{i, p}), b = TensorD::zeros(Shape{p, j});
        for (double& v : a) v = rng.normal();
        for (double& v : b) v = rng.normal();
        TensorD c = matmul(a, b);
        for (int64_t r = 0; r < i; ++r)
            for (int64_t s = 0; s < j; ++s) {
                double acc = 0;
                for (int64_t k = 0; k < p; ++k) acc += a[r * p + k] * b[k * j + s];
                CHECK(c[r * j + s] == doctest::Approx(acc).epsilon(1e-12));
            }
    }
}

TEST_CASE("axis reductions") {
    TensorF t(Shape{2, 3}, {1, -2, 3, /**/ 4, 5, -6});
    TensorF rows = reduce_sum(t, {1});
    CHECK(rows.shape() == Shape{2});
    CHECK(rows[0] == 2.0f);
    CHECK(rows[1] == 3.0f);
    TensorF cols = reduce_sum(t, {0});
    CHECK(cols.shape() == Shape{3});
    CHECK(cols[0] == 5.0f);
    CHECK(cols[1] == 3.0f);
    CHECK(cols[2] == -3.0f);
    TensorF all = reduce_sum(t, {0, 1});
    CHECK(all.shape() == Shape{1});
    CHECK(all[0] == 5.0f);
    CHECK(reduce_mean(t, {0, 1})[0] == doctest::Approx(5.0 / 6));
    CHECK(reduce_max(t, {0, 1})[0] == 5.0f);
    TensorF row_max = reduce_max(t, {1});
    CHECK(row_max[0] == 3.0f);
    CHECK(row_max[1] == 5.0f);
    CHECK_THROWS_AS(reduce_sum(t, {2}), std::invalid_argument);
}

TEST_CASE("argmax breaks ties toward the lower index") {
    TensorF t(Shape{3, 3}, {1, 3, 2, /**/ 5, 5, 1, /**/ -1, -1, -1});
    Tensor<int64_t> idx = argmax(t, {1});
    CHECK(idx.shape() == Shape{3});
    CHECK(idx[0] == 1);
    CHECK(idx[1] == 0);
    CHECK(idx[2] == 0);
}

TEST_CASE("reshape preserves data and checks counts") {
    TensorF t(Shape{2, 3}, {1, 2, 3, 4, 5, 6});
    TensorF r = reshape(t, Shape{3, 2});
    CHECK(r.shape() == Shape{3, 2});
    for (int64_t i = 0; i < 6; ++i) CHECK(r[i] == t[i]);
    CHECK_THROWS_AS(reshape(t, Shape{4, 2}), std::invalid_argument);
}

TEST_CASE("all_finite and max_abs_diff") {
    TensorF t(Shape{3}, {1, 2, 3});
    CHECK(all_finite(t));
    TensorF u = t;
    u[1] = std::numeric_limits<float>::infinity();
    CHECK_FALSE(all_finite(u));
    u[1] = std::numeric_limits<float>::quiet_NaN();
    CHECK_FALSE(all_finite(u));
    TensorF v(Shape{3}, {1, 2.5f, 3});
    CHECK(max_abs_diff(t, v) == doctest::Approx(0.5));
}
