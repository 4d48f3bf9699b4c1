#include <gtest/gtest.h>

#include <random>

#include "huruf/tensor.hpp"
#include "oracles.hpp"

using namespace huruf;

TEST(Shape, RejectsZeroDimensions) {
    EXPECT_THROW(Tensor4<float>(Shape4{0, 2, 2, 1}), ShapeError);
    EXPECT_THROW(Tensor4<float>(Shape4{1, 2, 2, 0}), ShapeError);
    EXPECT_THROW(Tensor4<float>(Shape4{1, 2, 2, 1}, std::vector<float>(3)), ShapeError);
}

TEST(Reshape, KeepsValues) {
    std::vector<float> v(16);
    std::iota(v.begin(), v.end(), 0.0f);
    const Tensor4<float> t(Shape4{1, 4, 4, 1}, v);
    const Tensor4<float> r = reshape(t, Shape4{1, 2, 8, 1});
    EXPECT_EQ(r.shape(), (Shape4{1, 2, 8, 1}));
    EXPECT_TRUE(std::equal(r.values().begin(), r.values().end(), v.begin()));
}

TEST(Reshape, FlatRowToImage) {
    const Tensor4<float> row(Shape4{1, 1, 4096, 1}, 0.5f);
    EXPECT_EQ(reshape(row, Shape4{1, 64, 64, 1}).shape(), (Shape4{1, 64, 64, 1}));
}

TEST(Reshape, CountMismatch) {
    const Tensor4<float> t(Shape4{2, 3, 3, 1});
    EXPECT_NO_THROW(reshape(t, Shape4{1, 2, 9, 1}));
    EXPECT_THROW(reshape(t, Shape4{1, 2, 8, 1}), ShapeError);
}

TEST(Reshape, InverseIsBitwiseIdentity) {
    std::mt19937_64 rng(3);
    const auto t = test::random_tensor<float>(Shape4{3, 4, 5, 2}, rng);
    EXPECT_EQ(reshape(reshape(t, Shape4{1, 6, 20, 1}), t.shape()), t);
}

TEST(Transpose, SwapsShapeAndIndices) {
    EXPECT_EQ(transpose_hw(Tensor4<float>(Shape4{1, 2, 3, 1})).shape(), (Shape4{1, 3, 2, 1}));
    Tensor4<float> t(Shape4{1, 3, 3, 1});
    t(0, 0, 2, 0) = 1.0f;
    const auto u = transpose_hw(t);
    EXPECT_EQ(u(0, 2, 0, 0), 1.0f);
    EXPECT_EQ(std::accumulate(u.values().begin(), u.values().end(), 0.0f), 1.0f);
}

TEST(Transpose, SymmetricIsFixedPoint) {
    const Tensor4<float> t(Shape4{1, 3, 3, 1}, std::vector<float>{1, 2, 3, 2, 4, 5, 3, 5, 6});
    EXPECT_EQ(transpose_hw(t), t);
}

TEST(Transpose, Involution) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const auto t = test::random_tensor<float>(Shape4{2, 1 + rng() % 6, 1 + rng() % 6, 1 + rng() % 3}, rng);
        EXPECT_EQ(transpose_hw(transpose_hw(t)), t);
    }
}

TEST(Scale, Examples) {
    const Tensor4<float> full(Shape4{1, 4, 4, 1}, 255.0f);
    const auto ones = scale(full, 1.0f / 255.0f);
    for (float v : ones.values()) EXPECT_FLOAT_EQ(v, 1.0f);
    std::mt19937_64 rng(5);
    const auto t = test::random_tensor<float>(Shape4{2, 3, 3, 2}, rng);
    EXPECT_EQ(scale(t, 1.0f), t);
    const auto zeros = scale(Tensor4<float>(Shape4{1, 2, 2, 1}), 7.0f);
    for (float v : zeros.values()) EXPECT_EQ(v, 0.0f);
}

TEST(Scale, Composition) {
    std::mt19937_64 rng(8);
    const auto t = test::random_tensor<float>(Shape4{4, 5, 5, 3}, rng, -100, 100);
    const float a = 0.37f, b = -2.9f;
    const auto lhs = scale(scale(t, a), b);
    const auto rhs = scale(t, a * b);
    for (std::size_t i = 0; i < t.size(); ++i) {
        const float tol = 2 * std::numeric_limits<float>::epsilon() * std::abs(rhs.values()[i]);
        EXPECT_NEAR(lhs.values()[i], rhs.values()[i], tol);
    }
}
