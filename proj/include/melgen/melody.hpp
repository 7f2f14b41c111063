#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "melgen/factor_space.hpp"
#include "melgen/music_theory.hpp"
#include "melgen/rhythm.hpp"

namespace melgen {

inline constexpr int kSequenceLength = 16;   // eighth-note slots across two bars
inline constexpr int kNotesPerMelody = 12;   // 3 tones for each of the 4 chords
inline constexpr const char* kHoldToken = "__";
inline constexpr const char* kRestToken = "R";

// Distinct tokens over the full dataset (84 note names + hold + rest),
// frozen by the exhaustive sweep and recorded in the manifest.
inline constexpr int kVocabularySize = 86;

struct Note {
  int slot = 0;  // 0..15
  Pitch pitch;
};

struct Melody {
  std::array<Note, kNotesPerMelody> notes;
  std::uint32_t factor_index = 0;
};

struct Token {
  enum class Kind : std::uint8_t { kNote = 0, kHold = 1, kRest = 2 };
  Kind kind = Kind::kRest;
  std::string text;

  friend bool operator==(const Token&, const Token&) = default;
};

struct TokenSequence {
  std::array<Token, kSequenceLength> tokens;

  int count(Token::Kind k) const {
    int n = 0;
    for (const Token& t : tokens) n += (t.kind == k);
    return n;
  }

  // 16 whitespace-separated tokens.
  std::string line() const {
    std::string out;
    out.reserve(64);
    for (int s = 0; s < kSequenceLength; ++s) {
      if (s) out += ' ';
      out += tokens[s].text;
    }
    return out;
  }
};

namespace melody_detail {

struct ChordSet {
  std::array<std::array<Pitch, 3>, 3> by_degree;  // I, IV, V
};

// Chord tones for all 12 x 3 x 3 (tonic, octave, scale) combinations.
inline const ChordSet& chords_for(int tonic, int octave, Scale kind) {
  static const std::vector<ChordSet> table = [] {
    std::vector<ChordSet> t(12 * 3 * 3);
    for (int tonic = 0; tonic < 12; ++tonic) {
      for (int octave = 4; octave <= 6; ++octave) {
        for (int s = 0; s < 3; ++s) {
          ChordSet& cs = t[(tonic * 3 + (octave - 4)) * 3 + s];
          for (int d = 0; d < 3; ++d) {
            cs.by_degree[d] = chord_tones(tonic, octave, static_cast<Scale>(s), static_cast<ChordDegree>(d));
          }
        }
      }
    }
    return t;
  }();
  return table[(tonic * 3 + (octave - 4)) * 3 + static_cast<int>(kind)];
}

}  // namespace melody_detail

// Realizes a factor tuple: bar 1 carries chords I then IV, bar 2 carries
// V then I. Within each bar the six onsets of its rhythm pattern receive,
// in temporal order, the three arpeggiated tones of the bar's first chord
// followed by the three of its second.
inline Melody synthesize(const FactorTuple& t) {
  validate(t);
  const auto& chords = melody_detail::chords_for(t.tonic, t.octave, t.scale);

  Melody m;
  m.factor_index = factors_to_index(t);
  int k = 0;
  for (int c = 0; c < kChordsPerMelody; ++c) {
    const auto tones = arpeggiate(chords.by_degree[static_cast<int>(kCadence[c])], t.arps[c]);
    const RhythmPattern pattern = pattern_from_rank(c < 2 ? t.rhythm_bar1 : t.rhythm_bar2);
    const auto slots = pattern.onset_slots();
    const int bar_offset = c < 2 ? 0 : kSlotsPerBar;
    const int first = (c % 2) * 3;  // first or second chord of the bar
    for (int j = 0; j < 3; ++j) {
      m.notes[k].slot = bar_offset + slots[first + j];
      m.notes[k].pitch = tones[j];
      ++k;
    }
  }
  return m;
}

// Onset slots carry the note name; later slots hold the previous note;
// slots before the first onset rest. Notes sustain across the barline.
inline TokenSequence to_tokens(const Melody& m) {
  TokenSequence ts;
  int note = 0;
  bool sounding = false;
  for (int s = 0; s < kSequenceLength; ++s) {
    if (note < kNotesPerMelody && m.notes[note].slot == s) {
      ts.tokens[s] = {Token::Kind::kNote, m.notes[note].pitch.name};
      ++note;
      sounding = true;
    } else if (sounding) {
      ts.tokens[s] = {Token::Kind::kHold, kHoldToken};
    } else {
      ts.tokens[s] = {Token::Kind::kRest, kRestToken};
    }
  }
  return ts;
}

// All tokens that can appear across the full dataset: hold, rest, then
// every reachable note name ordered by (midi, name).
struct Vocabulary {
  std::vector<std::string> tokens;
  std::unordered_map<std::string, int> ids;

  int size() const { return static_cast<int>(tokens.size()); }

  int id(const std::string& token) const {
    const auto it = ids.find(token);
    if (it == ids.end()) throw std::out_of_range("unknown token: " + token);
    return it->second;
  }
};

inline const Vocabulary& token_vocabulary() {
  static const Vocabulary vocab = [] {
    // Rhythm and arpeggiation never introduce new names, so sweeping the
    // chord tables covers every token of the full dataset.
    std::vector<std::pair<int, std::string>> names;
    for (int tonic = 0; tonic < 12; ++tonic) {
      for (int octave = 4; octave <= 6; ++octave) {
        for (int s = 0; s < 3; ++s) {
          const auto& cs = melody_detail::chords_for(tonic, octave, static_cast<Scale>(s));
          for (const auto& chord : cs.by_degree) {
            for (const Pitch& p : chord) names.emplace_back(p.midi, p.name);
          }
        }
      }
    }
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());

    Vocabulary v;
    v.tokens.push_back(kHoldToken);
    v.tokens.push_back(kRestToken);
    for (const auto& [midi, name] : names) v.tokens.push_back(name);
    for (int i = 0; i < static_cast<int>(v.tokens.size()); ++i) v.ids.emplace(v.tokens[i], i);
    return v;
  }();
  return vocab;
}

inline std::array<int, kSequenceLength> token_ids(const TokenSequence& ts, const Vocabulary& vocab) {
  std::array<int, kSequenceLength> out{};
  for (int s = 0; s < kSequenceLength; ++s) out[s] = vocab.id(ts.tokens[s].text);
  return out;
}

// 16 x |V| indicator matrix, one row per slot.
inline Eigen::MatrixXd one_hot(const TokenSequence& ts, const Vocabulary& vocab) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(kSequenceLength, vocab.size());
  const auto ids = token_ids(ts, vocab);
  for (int s = 0; s < kSequenceLength; ++s) m(s, ids[s]) = 1.0;
  return m;
}

inline void argmax_decode(const Eigen::MatrixXd& m, const Vocabulary& vocab, TokenSequence& out) {
  if (m.rows() != kSequenceLength || m.cols() != vocab.size()) {
    throw std::invalid_argument("one-hot matrix has wrong shape");
  }
  for (int s = 0; s < kSequenceLength; ++s) {
    int best = 0;
    for (int j = 1; j < m.cols(); ++j) {
      if (m(s, j) > m(s, best)) best = j;
    }
    const std::string& text = vocab.tokens[best];
    Token::Kind kind = Token::Kind::kNote;
    if (text == kHoldToken) kind = Token::Kind::kHold;
    else if (text == kRestToken) kind = Token::Kind::kRest;
    out.tokens[s] = {kind, text};
  }
}

// Appends the 16-token line for one index to `out` (no trailing newline).
inline void append_token_line(const FactorTuple& t, std::string& out) {
  const TokenSequence ts = to_tokens(synthesize(t));
  for (int s = 0; s < kSequenceLength; ++s) {
    if (s) out += ' ';
    out += ts.tokens[s].text;
  }
}

}  // namespace melgen
