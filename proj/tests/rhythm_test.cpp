#include "melgen/rhythm.hpp"

#include <algorithm>
#include <set>
#include <vector>

#include <gtest/gtest.h>

namespace {

using namespace melgen;

// Brute-force oracle: every 8-bit mask with exactly 6 set bits, ordered by
// its ascending onset tuple.
std::vector<std::vector<int>> enumerate_six_subsets() {
  std::vector<std::vector<int>> subsets;
  for (int mask = 0; mask < 256; ++mask) {
    if (__builtin_popcount(mask) != 6) continue;
    std::vector<int> slots;
    for (int s = 0; s < 8; ++s) {
      if (mask & (1 << s)) slots.push_back(s);
    }
    subsets.push_back(slots);
  }
  std::sort(subsets.begin(), subsets.end());
  return subsets;
}

TEST(Rhythm, DictionaryHas28DistinctPatternsOfSixOnsets) {
  const auto& patterns = all_patterns();
  ASSERT_EQ(patterns.size(), 28u);
  std::set<std::string> seen;
  for (const RhythmPattern& p : patterns) {
    EXPECT_EQ(p.onset_count(), 6);
    seen.insert(p.to_string());
  }
  EXPECT_EQ(seen.size(), 28u);
}

TEST(Rhythm, FirstAndLastPatterns) {
  const auto& patterns = all_patterns();
  EXPECT_EQ(patterns.front().to_string(), "0,1,2,3,4,5");
  EXPECT_EQ(patterns.back().to_string(), "2,3,4,5,6,7");
}

TEST(Rhythm, DictionaryMatchesBruteForceEnumeration) {
  const auto oracle = enumerate_six_subsets();
  const auto& patterns = all_patterns();
  ASSERT_EQ(oracle.size(), patterns.size());
  for (std::size_t r = 0; r < oracle.size(); ++r) {
    std::vector<int> got;
    for (const int s : patterns[r].onset_slots()) got.push_back(s);
    EXPECT_EQ(got, oracle[r]) << "rank " << r;
  }
}

TEST(Rhythm, UnrankMatchesDictionary) {
  const auto& patterns = all_patterns();
  for (int r = 0; r < kRhythmPatternCount; ++r) {
    EXPECT_EQ(pattern_from_rank(r), patterns[r]) << "rank " << r;
  }
}

TEST(Rhythm, RankUnrankRoundTrip) {
  EXPECT_EQ(pattern_from_rank(0).to_string(), "0,1,2,3,4,5");
  EXPECT_EQ(pattern_from_rank(27).to_string(), "2,3,4,5,6,7");
  EXPECT_EQ(rank_from_pattern(RhythmPattern::from_slots({0, 1, 2, 3, 4, 5})), 0);
  EXPECT_EQ(rank_from_pattern(RhythmPattern::from_slots({2, 3, 4, 5, 6, 7})), 27);
  for (int r = 0; r < kRhythmPatternCount; ++r) {
    EXPECT_EQ(rank_from_pattern(pattern_from_rank(r)), r);
  }
}

TEST(Rhythm, RejectsBadInput) {
  EXPECT_THROW(pattern_from_rank(-1), std::out_of_range);
  EXPECT_THROW(pattern_from_rank(28), std::out_of_range);
  RhythmPattern five;
  five.onsets = {true, true, true, true, true, false, false, false};
  EXPECT_THROW(rank_from_pattern(five), std::invalid_argument);
  EXPECT_THROW(five.onset_slots(), std::invalid_argument);
  EXPECT_THROW(RhythmPattern::from_slots({0, 0, 1, 2, 3, 4}), std::invalid_argument);
  EXPECT_THROW(RhythmPattern::from_slots({0, 1, 2, 3, 4, 8}), std::invalid_argument);
}

}  // namespace
