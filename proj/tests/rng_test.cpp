// Copyright 2026 The pamkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <set>

#include "pam/rng.hpp"

namespace pam {
namespace {

TEST(Fnv1a64, PublishedTestVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ull);
}

TEST(Mix64, MatchesSplitMix64Sequence) {
  // SplitMix64 seeded with 0 emits mix64(0), mix64(gamma), ...
  EXPECT_EQ(mix64(0), 0xe220a8397b1dcdafull);
  EXPECT_EQ(mix64(0x9E3779B97F4A7C15ull), 0x6e789e6aa1b965f4ull);
}

TEST(DeriveSeed, FollowsDocumentedRules) {
  EXPECT_EQ(derive_seed(42, "init"), mix64(42 ^ fnv1a64("init")));
  EXPECT_EQ(derive_seed(42, std::uint64_t{3}), mix64(42 + 4 * 0x9E3779B97F4A7C15ull));
}

TEST(DeriveSeed, PurposesAndIndicesGiveDisjointStreams) {
  std::set<std::uint64_t> seen;
  for (const char* p : {"init", "shuffle", "crop", "noise", "validation", "alloc", "detector", "segmenter"}) {
    EXPECT_TRUE(seen.insert(derive_seed(7, p)).second) << p;
  }
  for (std::uint64_t i = 0; i < 10000; ++i) EXPECT_TRUE(seen.insert(derive_seed(7, i)).second) << i;
  EXPECT_NE(derive_seed(7, "init"), derive_seed(8, "init"));
}

}  // namespace
}  // namespace pam
