#include <gtest/gtest.h>

#include <set>

#include "palletbench/parallel.hpp"
#include "palletbench/rng.hpp"

namespace pb = palletbench;

// Published reference outputs for seed 1234567.
TEST(SplitMix64, ReferenceVector) {
  pb::SplitMix64 g(1234567);
  EXPECT_EQ(g.next(), 6457827717110365317ULL);
  EXPECT_EQ(g.next(), 3203168211198807973ULL);
  EXPECT_EQ(g.next(), 9817491932198370423ULL);
  EXPECT_EQ(g.next(), 4593380528125082431ULL);
  EXPECT_EQ(g.next(), 16408922859458223821ULL);
}

TEST(SplitMix64, RandomAccessMatchesSequential) {
  for (std::uint64_t seed : {0ULL, 42ULL, ~0ULL}) {
    pb::SplitMix64 g(seed);
    for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(pb::splitmix64_at(seed, i), g.next());
  }
}

TEST(SplitMix64, UniformRanges) {
  pb::SplitMix64 g(3);
  for (int i = 0; i < 10000; ++i) {
    const double u = g.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const auto k = g.uniform_int(-2, 2);
    ASSERT_GE(k, -2);
    ASSERT_LE(k, 2);
  }
}

TEST(DeriveSeed, DistinctKeysGiveDistinctSeeds) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t k = 0; k < 1000; ++k) seen.insert(pb::derive_seed(7, k));
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_EQ(pb::derive_seed(7, 3), pb::derive_seed(7, 3));
}

TEST(ParallelFor, VisitsEveryIndexOnce) {
  for (unsigned workers : {1u, 2u, 8u}) {
    std::vector<int> hits(257, 0);
    pb::parallel_for(hits.size(), workers, [&](std::size_t i) { ++hits[i]; });
    for (int h : hits) EXPECT_EQ(h, 1);
  }
}
