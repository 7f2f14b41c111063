#include "melgen/factor_space.hpp"

#include <gtest/gtest.h>

#include "melgen/rng.hpp"

namespace {

using namespace melgen;

TEST(FactorSpace, CardinalityMatchesFactorProduct) {
  EXPECT_EQ(cardinality(), 1354752u);
  // arithmetic oracle over the per-factor option counts
  const std::array<std::uint32_t, 9> expected = {12, 3, 3, 28, 28, 2, 2, 2, 2};
  std::uint64_t product = 1;
  for (int f = 0; f < kFactorCount; ++f) {
    EXPECT_EQ(FactorSpace::kFactors[f].second, expected[f]);
    product *= expected[f];
  }
  EXPECT_EQ(product, 1354752u);
  EXPECT_EQ(12u * 3 * 3 * 28 * 28 * 16, 1354752u);
}

TEST(FactorSpace, BaseAndFinalIndices) {
  const FactorTuple base = index_to_factors(0);
  EXPECT_EQ(base.tonic, 0);
  EXPECT_EQ(base.octave, 4);
  EXPECT_EQ(base.scale, Scale::kMajor);
  EXPECT_EQ(base.rhythm_bar1, 0);
  EXPECT_EQ(base.rhythm_bar2, 0);
  for (const ArpDirection a : base.arps) EXPECT_EQ(a, ArpDirection::kUp);
  EXPECT_EQ(factors_to_index(base), 0u);

  const FactorTuple last = index_to_factors(cardinality() - 1);
  EXPECT_EQ(last.tonic, 11);
  EXPECT_EQ(last.octave, 6);
  EXPECT_EQ(last.scale, Scale::kBlues);
  EXPECT_EQ(last.rhythm_bar1, 27);
  EXPECT_EQ(last.rhythm_bar2, 27);
  for (const ArpDirection a : last.arps) EXPECT_EQ(a, ArpDirection::kDown);
  EXPECT_EQ(factors_to_index(last), cardinality() - 1);
}

TEST(FactorSpace, LeastSignificantDigitIncrementsFirst) {
  const FactorTuple t0 = index_to_factors(0);
  const FactorTuple t1 = index_to_factors(1);
  FactorTuple expected = t0;
  expected.arps[3] = ArpDirection::kDown;
  EXPECT_EQ(t1, expected);
}

TEST(FactorSpace, RoundTripOnRandomIndices) {
  Rng rng(7);
  for (int n = 0; n < 100000; ++n) {
    const auto i = static_cast<std::uint32_t>(rng.below(cardinality()));
    ASSERT_EQ(factors_to_index(index_to_factors(i)), i);
  }
}

TEST(FactorSpace, IndexOrderIsLexicographicInFactorOrder) {
  Rng rng(11);
  for (int n = 0; n < 20000; ++n) {
    auto i = static_cast<std::uint32_t>(rng.below(cardinality()));
    auto j = static_cast<std::uint32_t>(rng.below(cardinality()));
    if (i == j) continue;
    if (i > j) std::swap(i, j);
    const auto a = to_digits(index_to_factors(i));
    const auto b = to_digits(index_to_factors(j));
    ASSERT_TRUE(std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end()));
  }
}

TEST(FactorSpace, ArpBlockIsContiguous) {
  // the 16 arp combinations of a fixed prefix occupy 16 consecutive indices
  for (std::uint32_t base : {0u, 16u * 123u, cardinality() - 16}) {
    const FactorTuple anchor = index_to_factors(base);
    for (std::uint32_t k = 0; k < 16; ++k) {
      const FactorTuple t = index_to_factors(base + k);
      EXPECT_EQ(t.tonic, anchor.tonic);
      EXPECT_EQ(t.octave, anchor.octave);
      EXPECT_EQ(t.scale, anchor.scale);
      EXPECT_EQ(t.rhythm_bar1, anchor.rhythm_bar1);
      EXPECT_EQ(t.rhythm_bar2, anchor.rhythm_bar2);
      std::uint32_t code = 0;
      for (const ArpDirection a : t.arps) code = code * 2 + static_cast<std::uint32_t>(a);
      EXPECT_EQ(code, k);
    }
  }
}

TEST(FactorSpace, EnumeratePartitionIdentity) {
  const auto full = enumerate(0, 300);
  ASSERT_EQ(full.size(), 300u);
  const auto head = enumerate(0, 113);
  const auto tail = enumerate(113, 300);
  ASSERT_EQ(head.size() + tail.size(), full.size());
  for (std::size_t k = 0; k < full.size(); ++k) {
    const auto& [index, tuple] = k < head.size() ? head[k] : tail[k - head.size()];
    EXPECT_EQ(index, full[k].first);
    EXPECT_EQ(tuple, full[k].second);
    EXPECT_EQ(index, static_cast<std::uint32_t>(k));
  }
}

TEST(FactorSpace, RejectsBadInput) {
  EXPECT_THROW(index_to_factors(cardinality()), std::out_of_range);
  FactorTuple t;
  t.tonic = 12;
  EXPECT_THROW(factors_to_index(t), std::out_of_range);
  t = FactorTuple{};
  t.octave = 7;
  EXPECT_THROW(factors_to_index(t), std::out_of_range);
  t = FactorTuple{};
  t.rhythm_bar2 = 28;
  EXPECT_THROW(factors_to_index(t), std::out_of_range);
  EXPECT_THROW(enumerate(5, 4), std::out_of_range);
  EXPECT_THROW(enumerate(0, cardinality() + 1), std::out_of_range);
  EXPECT_THROW(from_csv_codes({0, 3, 0, 0, 0, 0, 0, 0, 0}), std::out_of_range);
  EXPECT_THROW(from_csv_codes({-1, 4, 0, 0, 0, 0, 0, 0, 0}), std::out_of_range);
}

TEST(FactorSpace, CsvCodesUseLiteralOctave) {
  const auto codes = csv_codes(index_to_factors(0));
  const std::array<int, 9> expected = {0, 4, 0, 0, 0, 0, 0, 0, 0};
  EXPECT_EQ(codes, expected);
  EXPECT_EQ(from_csv_codes(codes), index_to_factors(0));
}

}  // namespace
