#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "melgen/rhythm.hpp"

namespace melgen {

enum class Scale : std::uint8_t { kMajor = 0, kHarmonicMinor = 1, kBlues = 2 };
enum class ArpDirection : std::uint8_t { kUp = 0, kDown = 1 };

inline constexpr int kFactorCount = 9;
inline constexpr int kChordsPerMelody = 4;

inline const char* scale_name(Scale s) {
  switch (s) {
    case Scale::kMajor: return "major";
    case Scale::kHarmonicMinor: return "harmonic_minor";
    case Scale::kBlues: return "blues";
  }
  throw std::invalid_argument("bad scale code");
}

// One point of the 9-dimensional latent factor space.
struct FactorTuple {
  std::uint8_t tonic = 0;   // pitch class, 0 = C .. 11 = B
  std::uint8_t octave = 4;  // literal octave digit: 4, 5 or 6
  Scale scale = Scale::kMajor;
  std::uint8_t rhythm_bar1 = 0;  // rank into the rhythm dictionary
  std::uint8_t rhythm_bar2 = 0;
  std::array<ArpDirection, kChordsPerMelody> arps{};  // chords 1..4

  friend bool operator==(const FactorTuple&, const FactorTuple&) = default;
};

// Factor names and cardinalities, most significant first.
struct FactorSpace {
  static constexpr std::array<std::pair<const char*, std::uint32_t>, kFactorCount> kFactors{{
      {"tonic", 12},
      {"octave", 3},
      {"scale", 3},
      {"rhythm_bar1", 28},
      {"rhythm_bar2", 28},
      {"arp_chord1", 2},
      {"arp_chord2", 2},
      {"arp_chord3", 2},
      {"arp_chord4", 2},
  }};
};

constexpr std::uint32_t cardinality() {
  std::uint64_t product = 1;
  for (const auto& [name, options] : FactorSpace::kFactors) product *= options;
  return static_cast<std::uint32_t>(product);
}

static_assert(cardinality() == 1354752u);

inline void validate(const FactorTuple& t) {
  if (t.tonic >= 12) throw std::out_of_range("tonic must be in [0, 12)");
  if (t.octave < 4 || t.octave > 6) throw std::out_of_range("octave must be 4, 5 or 6");
  if (static_cast<int>(t.scale) >= 3) throw std::out_of_range("scale code must be in [0, 3)");
  if (t.rhythm_bar1 >= kRhythmPatternCount) throw std::out_of_range("rhythm_bar1 rank must be in [0, 28)");
  if (t.rhythm_bar2 >= kRhythmPatternCount) throw std::out_of_range("rhythm_bar2 rank must be in [0, 28)");
  for (const ArpDirection a : t.arps) {
    if (static_cast<int>(a) >= 2) throw std::out_of_range("arp direction code must be 0 or 1");
  }
}

// Mixed-radix digits in factor order (octave as 0..2, not the literal digit).
inline std::array<std::uint32_t, kFactorCount> to_digits(const FactorTuple& t) {
  return {t.tonic,
          static_cast<std::uint32_t>(t.octave - 4),
          static_cast<std::uint32_t>(t.scale),
          t.rhythm_bar1,
          t.rhythm_bar2,
          static_cast<std::uint32_t>(t.arps[0]),
          static_cast<std::uint32_t>(t.arps[1]),
          static_cast<std::uint32_t>(t.arps[2]),
          static_cast<std::uint32_t>(t.arps[3])};
}

inline FactorTuple from_digits(const std::array<std::uint32_t, kFactorCount>& d) {
  FactorTuple t;
  t.tonic = static_cast<std::uint8_t>(d[0]);
  t.octave = static_cast<std::uint8_t>(d[1] + 4);
  t.scale = static_cast<Scale>(d[2]);
  t.rhythm_bar1 = static_cast<std::uint8_t>(d[3]);
  t.rhythm_bar2 = static_cast<std::uint8_t>(d[4]);
  for (int c = 0; c < kChordsPerMelody; ++c) t.arps[c] = static_cast<ArpDirection>(d[5 + c]);
  return t;
}

// Mixed-radix decomposition, tonic most significant.
inline FactorTuple index_to_factors(std::uint32_t index) {
  if (index >= cardinality()) throw std::out_of_range("dataset index out of range");
  std::array<std::uint32_t, kFactorCount> digits{};
  std::uint32_t rest = index;
  for (int f = kFactorCount - 1; f >= 0; --f) {
    const std::uint32_t options = FactorSpace::kFactors[f].second;
    digits[f] = rest % options;
    rest /= options;
  }
  return from_digits(digits);
}

inline std::uint32_t factors_to_index(const FactorTuple& t) {
  validate(t);
  const auto digits = to_digits(t);
  std::uint32_t index = 0;
  for (int f = 0; f < kFactorCount; ++f) {
    index = index * FactorSpace::kFactors[f].second + digits[f];
  }
  return index;
}

// Visits [lo, hi) in strictly increasing index order.
inline void enumerate(std::uint32_t lo, std::uint32_t hi,
                      const std::function<void(std::uint32_t, const FactorTuple&)>& fn) {
  if (lo > hi || hi > cardinality()) throw std::out_of_range("bad enumeration range");
  for (std::uint32_t i = lo; i < hi; ++i) fn(i, index_to_factors(i));
}

inline std::vector<std::pair<std::uint32_t, FactorTuple>> enumerate(std::uint32_t lo, std::uint32_t hi) {
  std::vector<std::pair<std::uint32_t, FactorTuple>> out;
  out.reserve(hi > lo ? hi - lo : 0);
  enumerate(lo, hi, [&](std::uint32_t i, const FactorTuple& t) { out.emplace_back(i, t); });
  return out;
}

// Integer codes in the factor CSV column convention (octave stays literal).
inline std::array<int, kFactorCount> csv_codes(const FactorTuple& t) {
  return {t.tonic,
          t.octave,
          static_cast<int>(t.scale),
          t.rhythm_bar1,
          t.rhythm_bar2,
          static_cast<int>(t.arps[0]),
          static_cast<int>(t.arps[1]),
          static_cast<int>(t.arps[2]),
          static_cast<int>(t.arps[3])};
}

inline FactorTuple from_csv_codes(const std::array<int, kFactorCount>& c) {
  for (int i = 0; i < kFactorCount; ++i) {
    if (c[i] < 0 || c[i] > 255) {
      throw std::out_of_range(std::string("factor code out of range: ") + FactorSpace::kFactors[i].first);
    }
  }
  FactorTuple t;
  t.tonic = static_cast<std::uint8_t>(c[0]);
  t.octave = static_cast<std::uint8_t>(c[1]);
  t.scale = static_cast<Scale>(c[2]);
  t.rhythm_bar1 = static_cast<std::uint8_t>(c[3]);
  t.rhythm_bar2 = static_cast<std::uint8_t>(c[4]);
  for (int i = 0; i < kChordsPerMelody; ++i) t.arps[i] = static_cast<ArpDirection>(c[5 + i]);
  validate(t);
  return t;
}

}  // namespace melgen
