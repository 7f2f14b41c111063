#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "melgen/factor_space.hpp"

namespace melgen {

// A realized note: MIDI number plus its spelled name with octave digit,
// e.g. "G#5". The octave digit follows the letter (Cb5 is one semitone
// below C5), so name and MIDI number are always mutually consistent.
struct Pitch {
  std::uint8_t midi = 0;
  std::string name;

  friend bool operator==(const Pitch&, const Pitch&) = default;
};

enum class ChordDegree : std::uint8_t { kI = 0, kIV = 1, kV = 2 };

// Chord sequence of every melody: two chords per bar.
inline constexpr std::array<ChordDegree, kChordsPerMelody> kCadence = {
    ChordDegree::kI, ChordDegree::kIV, ChordDegree::kV, ChordDegree::kI};

namespace theory_detail {

inline constexpr std::array<int, 7> kMajorIntervals = {0, 2, 4, 5, 7, 9, 11};
inline constexpr std::array<int, 7> kHarmonicMinorIntervals = {0, 2, 3, 5, 7, 8, 11};
inline constexpr std::array<int, 6> kBluesIntervals = {0, 3, 5, 6, 7, 10};

// letter index 0..6 = C D E F G A B
inline constexpr std::array<int, 7> kLetterPc = {0, 2, 4, 5, 7, 9, 11};
inline constexpr const char kLetterNames[8] = "CDEFGAB";

struct Spelling {
  std::int8_t letter;      // 0..6
  std::int8_t accidental;  // semitone offset from the natural letter
};

// Tonic spellings by pitch class, chosen by smallest key signature with
// ties resolved toward flats (Gb major over F#, Eb minor over D#).
inline constexpr std::array<Spelling, 12> kMajorTonics = {{{0, 0}, {1, -1}, {1, 0}, {2, -1}, {2, 0}, {3, 0},
                                                           {4, -1}, {4, 0}, {5, -1}, {5, 0}, {6, -1}, {6, 0}}};
inline constexpr std::array<Spelling, 12> kMinorTonics = {{{0, 0}, {0, 1}, {1, 0}, {2, -1}, {2, 0}, {3, 0},
                                                           {3, 1}, {4, 0}, {4, 1}, {5, 0}, {6, -1}, {6, 0}}};
// Chromatic spelling tables for the blues scale.
inline constexpr std::array<Spelling, 12> kFlatChromatic = kMajorTonics;
inline constexpr std::array<Spelling, 12> kSharpChromatic = {{{0, 0}, {0, 1}, {1, 0}, {1, 1}, {2, 0}, {3, 0},
                                                              {3, 1}, {4, 0}, {4, 1}, {5, 0}, {5, 1}, {6, 0}}};

inline std::string spell(int midi, Spelling s) {
  const int base = midi - kLetterPc[s.letter] - s.accidental;
  if (base % 12 != 0) throw std::logic_error("spelling inconsistent with midi number");
  const int digit = base / 12 - 1;
  std::string out;
  out += kLetterNames[s.letter];
  switch (s.accidental) {
    case -2: out += "bb"; break;
    case -1: out += 'b'; break;
    case 0: break;
    case 1: out += '#'; break;
    case 2: out += "##"; break;
    default: throw std::logic_error("accidental outside [-2, 2]");
  }
  out += std::to_string(digit);
  return out;
}

}  // namespace theory_detail

inline std::span<const int> scale_intervals(Scale kind) {
  switch (kind) {
    case Scale::kMajor: return theory_detail::kMajorIntervals;
    case Scale::kHarmonicMinor: return theory_detail::kHarmonicMinorIntervals;
    case Scale::kBlues: return theory_detail::kBluesIntervals;
  }
  throw std::invalid_argument("bad scale code");
}

namespace theory_detail {

// Spelling of scale member `degree` (taken modulo the scale size).
inline Spelling member_spelling(int tonic, Scale kind, int degree) {
  const auto intervals = scale_intervals(kind);
  const int n = static_cast<int>(intervals.size());
  const int d = degree % n;
  const int pc = (tonic + intervals[d]) % 12;
  if (kind == Scale::kBlues) {
    // flat-preferring chromatic spelling, except the raised fourth
    return d == 3 ? kSharpChromatic[pc] : kFlatChromatic[pc];
  }
  // 7-note scales: successive letters starting from the tonic letter
  const Spelling t = (kind == Scale::kMajor) ? kMajorTonics[tonic] : kMinorTonics[tonic];
  const std::int8_t letter = static_cast<std::int8_t>((t.letter + d) % 7);
  int acc = (pc - kLetterPc[letter]) % 12;
  if (acc > 6) acc -= 12;
  if (acc < -6) acc += 12;
  if (acc < -2 || acc > 2) throw std::logic_error("scale member needs more than a double accidental");
  return {letter, static_cast<std::int8_t>(acc)};
}

// MIDI number of scale member `degree`; degrees past the scale size wrap
// with an octave lift.
inline int member_midi(int tonic, int octave, Scale kind, int degree) {
  const auto intervals = scale_intervals(kind);
  const int n = static_cast<int>(intervals.size());
  return 12 * (octave + 1) + tonic + intervals[degree % n] + 12 * (degree / n);
}

inline Pitch member_pitch(int tonic, int octave, Scale kind, int degree) {
  const int midi = member_midi(tonic, octave, kind, degree);
  if (midi < 0 || midi > 127) throw std::out_of_range("midi number outside [0, 127]");
  return {static_cast<std::uint8_t>(midi), spell(midi, member_spelling(tonic, kind, degree))};
}

inline void check_tonic_octave(int tonic, int octave) {
  if (tonic < 0 || tonic >= 12) throw std::out_of_range("tonic must be in [0, 12)");
  if (octave < 4 || octave > 6) throw std::out_of_range("octave must be 4, 5 or 6");
}

}  // namespace theory_detail

// One octave of the scale starting at the tonic in the given octave.
inline std::vector<Pitch> scale_pitches(int tonic, int octave, Scale kind) {
  theory_detail::check_tonic_octave(tonic, octave);
  const int n = static_cast<int>(scale_intervals(kind).size());
  std::vector<Pitch> out;
  out.reserve(n);
  for (int d = 0; d < n; ++d) out.push_back(theory_detail::member_pitch(tonic, octave, kind, d));
  return out;
}

// Triad on the scale member at semitone offset 0 (I), 5 (IV) or 7 (V)
// from the tonic, stacked two and four scale steps above the root.
// Tones are ascending; steps past the scale top wrap with an octave lift.
inline std::array<Pitch, 3> chord_tones(int tonic, int octave, Scale kind, ChordDegree degree) {
  theory_detail::check_tonic_octave(tonic, octave);
  const auto intervals = scale_intervals(kind);
  int root_offset = 0;
  switch (degree) {
    case ChordDegree::kI: root_offset = 0; break;
    case ChordDegree::kIV: root_offset = 5; break;
    case ChordDegree::kV: root_offset = 7; break;
  }
  const auto it = std::find(intervals.begin(), intervals.end(), root_offset);
  if (it == intervals.end()) throw std::logic_error("chord root offset missing from scale");
  const int m = static_cast<int>(it - intervals.begin());
  return {theory_detail::member_pitch(tonic, octave, kind, m),
          theory_detail::member_pitch(tonic, octave, kind, m + 2),
          theory_detail::member_pitch(tonic, octave, kind, m + 4)};
}

// Up keeps the ascending order; Down plays the same three tones reversed.
inline std::array<Pitch, 3> arpeggiate(const std::array<Pitch, 3>& tones, ArpDirection direction) {
  if (direction == ArpDirection::kUp) return tones;
  return {tones[2], tones[1], tones[0]};
}

// Parses a spelled name ("Eb4", "F##5", "Cb5") back to its MIDI number.
inline int parse_pitch_name(std::string_view name) {
  if (name.empty()) throw std::invalid_argument("empty pitch name");
  const auto letter_pos = std::string_view("CDEFGAB").find(name[0]);
  if (letter_pos == std::string_view::npos) throw std::invalid_argument("bad pitch letter");
  std::size_t i = 1;
  int acc = 0;
  while (i < name.size() && (name[i] == '#' || name[i] == 'b')) {
    acc += name[i] == '#' ? 1 : -1;
    ++i;
  }
  if (i == name.size()) throw std::invalid_argument("pitch name missing octave digit");
  int digit = 0;
  bool any = false;
  for (; i < name.size(); ++i) {
    if (name[i] < '0' || name[i] > '9') throw std::invalid_argument("bad octave digit");
    digit = digit * 10 + (name[i] - '0');
    any = true;
  }
  if (!any) throw std::invalid_argument("pitch name missing octave digit");
  const int midi = 12 * (digit + 1) + theory_detail::kLetterPc[static_cast<int>(letter_pos)] + acc;
  if (midi < 0 || midi > 127) throw std::out_of_range("midi number outside [0, 127]");
  return midi;
}

}  // namespace melgen
