#include "skcache/retrieval.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "skcache/errors.hpp"
#include "support/oracles.hpp"

namespace skcache {
namespace {

TEST(AffinityTest, AnalyticValues) {
    const std::vector<float> x{1.0f, 0.0f};
    const std::vector<float> same{3.0f, 0.0f};
    const std::vector<float> ortho{0.0f, 2.0f};
    const std::vector<float> opposite{-1.0f, 0.0f};
    EXPECT_DOUBLE_EQ(affinity(x, same, 3.0), 1.0);
    EXPECT_NEAR(affinity(x, ortho, 3.0), 0.049787, 1e-6);
    EXPECT_NEAR(affinity(x, ortho, 1.5), 0.223130, 1e-6);
    EXPECT_NEAR(affinity(x, opposite, 3.0), std::exp(-6.0), 1e-12);
}

TEST(AffinityTest, ZeroVectorHasZeroCosine) {
    const std::vector<float> zero{0.0f, 0.0f};
    const std::vector<float> x{1.0f, 2.0f};
    EXPECT_EQ(cosine(zero, x), 0.0);
    EXPECT_NEAR(affinity(zero, x, 3.0), std::exp(-3.0), 1e-12);
}

TEST(AffinityTest, BetaMustBePositive) {
    EXPECT_THROW(AffinityConfig{0.0}.validate(), ValidationError);
    EXPECT_THROW(AffinityConfig{-1.0}.validate(), ValidationError);
}

TEST(RetrieveTest, EmptyCacheGivesZeros) {
    SkeletonCache cache(4, 3, 1, 1, 2);
    const DescriptorSet q(3, 2, {1, 0, 0, 1, 1, 1});
    const auto O = retrieve(q, cache, {});
    ASSERT_EQ(O.rows(), 3u);
    ASSERT_EQ(O.classes(), 4u);
    for (std::size_t d = 0; d < 3; ++d)
        for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(O(d, j), 0.0);
}

TEST(RetrieveTest, SumsAffinitiesPerClass) {
    // Every descriptor row is the same 2-vector, so all three rows of O agree.
    auto rows = [](float a, float b) { return DescriptorSet(3, 2, {a, b, a, b, a, b}); };
    SkeletonCache cache(2, 2, 1, 1, 2);
    cache.update({rows(1, 0), 0, 0.1f});  // identical to the query
    cache.update({rows(0, 1), 0, 0.1f});  // orthogonal
    cache.update({rows(1, 1), 1, 0.1f});  // 45 degrees
    const auto O = retrieve(rows(1, 0), cache, {3.0});
    for (std::size_t d = 0; d < 3; ++d) {
        EXPECT_NEAR(O(d, 0), 1.0 + std::exp(-3.0), 1e-12);
        EXPECT_NEAR(O(d, 1), std::exp(-3.0 * (1.0 - 1.0 / std::sqrt(2.0))), 1e-12);
    }
}

TEST(RetrieveTest, MatchesMaterializedOracle) {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 25; ++trial) {
        const std::uint32_t C = 1 + trial % 7, K = 1 + trial % 5, N = 3 + trial;
        SkeletonCache cache(C, K, 2, 2, N);
        std::uniform_int_distribution<std::uint32_t> cls(0, C - 1);
        std::uniform_real_distribution<float> h(0.0f, static_cast<float>(std::log(C)));
        for (int i = 0; i < trial * 2; ++i)
            cache.update({testing::random_descriptors(5, N, rng), cls(rng), h(rng)});
        const auto q = testing::random_descriptors(5, N, rng);
        const double beta = 0.5 + trial * 0.3;
        const auto O = retrieve(q, cache, {beta});
        const auto oracle = testing::retrieval_oracle(q, cache, beta);
        for (std::size_t d = 0; d < 5; ++d)
            for (std::size_t j = 0; j < C; ++j) EXPECT_NEAR(O(d, j), oracle[d][j], 1e-9);
    }
}

TEST(RetrieveTest, InvariantToPositiveQueryScaling) {
    std::mt19937_64 rng(9);
    SkeletonCache cache(3, 2, 1, 1, 6);
    for (std::uint32_t i = 0; i < 6; ++i) cache.update({testing::random_descriptors(3, 6, rng), i % 3, 0.5f});
    auto q = testing::random_descriptors(3, 6, rng);
    const auto a = retrieve(q, cache, {});
    for (float& v : q.values()) v *= 7.5f;
    const auto b = retrieve(q, cache, {});
    for (std::size_t d = 0; d < 3; ++d)
        for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(a(d, j), b(d, j), 1e-6);  // float rounding of the scaled query
}

TEST(RetrieveTest, LargerBetaNeverIncreasesLogits) {
    std::mt19937_64 rng(13);
    SkeletonCache cache(2, 4, 1, 1, 5);
    for (std::uint32_t i = 0; i < 8; ++i) cache.update({testing::random_descriptors(3, 5, rng), i % 2, 0.3f});
    const auto q = testing::random_descriptors(3, 5, rng);
    const auto lo = retrieve(q, cache, {1.0});
    const auto hi = retrieve(q, cache, {5.0});
    for (std::size_t d = 0; d < 3; ++d)
        for (std::size_t j = 0; j < 2; ++j) EXPECT_LE(hi(d, j), lo(d, j) + 1e-12);
}

TEST(RetrieveTest, QueryShapeMustMatch) {
    SkeletonCache cache(2, 2, 1, 1, 4);
    EXPECT_THROW(retrieve(DescriptorSet(3, 5), cache, {}), GeometryError);
}

}  // namespace
}  // namespace skcache
