#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace melgen {

inline constexpr int kSlotsPerBar = 8;
inline constexpr int kNotesPerBar = 6;
inline constexpr int kRhythmPatternCount = 28;  // C(8, 6)

// Onset mask for one bar on the eighth-note grid.
struct RhythmPattern {
  std::array<bool, kSlotsPerBar> onsets{};

  int onset_count() const {
    int n = 0;
    for (const bool b : onsets) n += b;
    return n;
  }

  // Ascending onset positions; pattern must hold exactly six onsets.
  std::array<int, kNotesPerBar> onset_slots() const {
    if (onset_count() != kNotesPerBar) {
      throw std::invalid_argument("rhythm pattern must have exactly 6 onsets");
    }
    std::array<int, kNotesPerBar> slots{};
    int k = 0;
    for (int s = 0; s < kSlotsPerBar; ++s) {
      if (onsets[s]) slots[k++] = s;
    }
    return slots;
  }

  static RhythmPattern from_slots(const std::array<int, kNotesPerBar>& slots) {
    RhythmPattern p;
    for (const int s : slots) {
      if (s < 0 || s >= kSlotsPerBar) throw std::invalid_argument("onset slot out of range");
      if (p.onsets[s]) throw std::invalid_argument("duplicate onset slot");
      p.onsets[s] = true;
    }
    return p;
  }

  std::string to_string() const {
    std::string out;
    for (int s = 0; s < kSlotsPerBar; ++s) {
      if (!onsets[s]) continue;
      if (!out.empty()) out += ',';
      out += std::to_string(s);
    }
    return out;
  }

  friend bool operator==(const RhythmPattern&, const RhythmPattern&) = default;
};

namespace rhythm_detail {

constexpr std::uint32_t binom(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::uint64_t r = 1;
  for (int i = 0; i < k; ++i) r = r * static_cast<std::uint64_t>(n - i) / (i + 1);
  return static_cast<std::uint32_t>(r);
}

static_assert(binom(8, 6) == kRhythmPatternCount);

}  // namespace rhythm_detail

// The rhythm dictionary: all 6-of-8 onset patterns in ascending
// lexicographic order of their onset-position tuples.
inline const std::vector<RhythmPattern>& all_patterns() {
  static const std::vector<RhythmPattern> table = [] {
    std::vector<RhythmPattern> out;
    std::array<int, kNotesPerBar> c = {0, 1, 2, 3, 4, 5};
    for (;;) {
      out.push_back(RhythmPattern::from_slots(c));
      // advance to the next combination in lexicographic order
      int i = kNotesPerBar - 1;
      while (i >= 0 && c[i] == kSlotsPerBar - kNotesPerBar + i) --i;
      if (i < 0) break;
      ++c[i];
      for (int j = i + 1; j < kNotesPerBar; ++j) c[j] = c[i] + j - i;
    }
    return out;
  }();
  return table;
}

// Combinatorial unranking in the dictionary order.
inline RhythmPattern pattern_from_rank(int rank) {
  if (rank < 0 || rank >= kRhythmPatternCount) {
    throw std::out_of_range("rhythm rank must be in [0, 28)");
  }
  RhythmPattern p;
  int remaining = kNotesPerBar;
  int r = rank;
  for (int slot = 0; slot < kSlotsPerBar && remaining > 0; ++slot) {
    const int with_slot = static_cast<int>(rhythm_detail::binom(kSlotsPerBar - slot - 1, remaining - 1));
    if (r < with_slot) {
      p.onsets[slot] = true;
      --remaining;
    } else {
      r -= with_slot;
    }
  }
  return p;
}

// Inverse of pattern_from_rank.
inline int rank_from_pattern(const RhythmPattern& p) {
  if (p.onset_count() != kNotesPerBar) {
    throw std::invalid_argument("rhythm pattern must have exactly 6 onsets");
  }
  int rank = 0;
  int remaining = kNotesPerBar;
  for (int slot = 0; slot < kSlotsPerBar && remaining > 0; ++slot) {
    if (p.onsets[slot]) {
      --remaining;
    } else {
      rank += static_cast<int>(rhythm_detail::binom(kSlotsPerBar - slot - 1, remaining - 1));
    }
  }
  return rank;
}

}  // namespace melgen
