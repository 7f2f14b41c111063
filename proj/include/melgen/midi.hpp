#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "melgen/melody.hpp"

namespace melgen {

struct MidiParams {
  int ticks_per_quarter = 480;  // eighth-note slot = 240 ticks
  int tempo_bpm = 120;
  int program = 0;
  int velocity = 100;

  int ticks_per_slot() const { return ticks_per_quarter / 2; }
};

namespace midi_detail {

inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
}

inline void put_varlen(std::vector<std::uint8_t>& out, std::uint32_t v) {
  std::uint8_t stack[5];
  int n = 0;
  do {
    stack[n++] = static_cast<std::uint8_t>(v & 0x7f);
    v >>= 7;
  } while (v);
  while (n-- > 1) out.push_back(stack[n] | 0x80);
  out.push_back(stack[0]);
}

}  // namespace midi_detail

// Standard MIDI file, format 0, one track. Each note sounds until the
// next onset; the last note sustains to the end of the 16-slot grid.
inline std::vector<std::uint8_t> render_midi(const Melody& m, const MidiParams& params = {}) {
  using namespace midi_detail;

  const int tick_per_slot = params.ticks_per_slot();
  const std::uint32_t end_tick = static_cast<std::uint32_t>(kSequenceLength * tick_per_slot);

  std::vector<std::uint8_t> track;
  std::uint32_t cursor = 0;
  const auto emit = [&](std::uint32_t tick, std::initializer_list<std::uint8_t> bytes) {
    if (tick < cursor) throw std::logic_error("midi events out of order");
    put_varlen(track, tick - cursor);
    cursor = tick;
    track.insert(track.end(), bytes);
  };

  const std::uint32_t usec_per_quarter = static_cast<std::uint32_t>(60000000 / params.tempo_bpm);
  emit(0, {0xff, 0x51, 0x03, static_cast<std::uint8_t>(usec_per_quarter >> 16),
           static_cast<std::uint8_t>((usec_per_quarter >> 8) & 0xff),
           static_cast<std::uint8_t>(usec_per_quarter & 0xff)});
  emit(0, {0xc0, static_cast<std::uint8_t>(params.program)});

  const std::uint8_t vel = static_cast<std::uint8_t>(params.velocity);
  for (int i = 0; i < kNotesPerMelody; ++i) {
    const std::uint32_t on = static_cast<std::uint32_t>(m.notes[i].slot * tick_per_slot);
    if (i > 0) {
      // previous note ends exactly where this one starts
      emit(on, {0x80, m.notes[i - 1].pitch.midi, 0x00});
    }
    emit(on, {0x90, m.notes[i].pitch.midi, vel});
  }
  emit(end_tick, {0x80, m.notes[kNotesPerMelody - 1].pitch.midi, 0x00});
  emit(end_tick, {0xff, 0x2f, 0x00});

  std::vector<std::uint8_t> out;
  out.reserve(track.size() + 22);
  out.insert(out.end(), {'M', 'T', 'h', 'd'});
  put_u32(out, 6);
  put_u16(out, 0);  // format 0
  put_u16(out, 1);  // one track
  put_u16(out, static_cast<std::uint16_t>(params.ticks_per_quarter));
  out.insert(out.end(), {'M', 'T', 'r', 'k'});
  put_u32(out, static_cast<std::uint32_t>(track.size()));
  out.insert(out.end(), track.begin(), track.end());
  return out;
}

inline void write_midi_file(const Melody& m, const std::filesystem::path& path, const MidiParams& params = {}) {
  const auto bytes = render_midi(m, params);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace melgen
