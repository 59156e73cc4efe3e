#include <gtest/gtest.h>

#include <set>

#include "stenograph/rng.hpp"

using namespace stenograph;

TEST(Rng, SameKeysSameStream) {
  Rng a = make_rng(7, {hash_tag("augment"), 1, 2});
  Rng b = make_rng(7, {hash_tag("augment"), 1, 2});
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());
}

TEST(Rng, DistinctKeysDistinctSeeds) {
  std::set<std::uint64_t> seeds;
  for (std::uint64_t e = 0; e < 50; ++e) {
    for (std::uint64_t s = 0; s < 50; ++s) seeds.insert(derive_seed(1, {e, s}));
  }
  EXPECT_EQ(seeds.size(), 2500u);
  EXPECT_NE(derive_seed(1, {2, 3}), derive_seed(1, {3, 2}));
  EXPECT_NE(derive_seed(1, {}), derive_seed(2, {}));
}

TEST(Rng, HashTagIsFnv1a) {
  EXPECT_EQ(hash_tag(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(hash_tag("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Rng, UniformIntInclusiveBounds) {
  Rng r = make_rng(3);
  std::set<std::int64_t> seen;
  for (int i = 0; i < 2000; ++i) seen.insert(uniform_int(r, -2, 2));
  EXPECT_EQ(seen, (std::set<std::int64_t>{-2, -1, 0, 1, 2}));
}
