#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "melgen/factor_space.hpp"
#include "melgen/hash.hpp"
#include "melgen/melody.hpp"
#include "melgen/midi.hpp"
#include "melgen/version.hpp"

namespace melgen {

inline constexpr const char* kFactorsCsvHeader =
    "index,tonic,octave,scale,rhythm_bar1,rhythm_bar2,arp_chord1,arp_chord2,arp_chord3,arp_chord4";

struct WriteResult {
  std::uint64_t count = 0;   // data rows / lines written
  std::uint64_t digest = 0;  // fnv1a64 of the full file content
};

namespace io_detail {

// Buffered file sink that digests everything it writes.
class DigestWriter {
 public:
  explicit DigestWriter(const std::filesystem::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot open for writing: " + path.string());
    buffer_.reserve(kFlushAt + 4096);
  }

  void append(std::string_view s) {
    hash_.update(s);
    buffer_ += s;
    if (buffer_.size() >= kFlushAt) flush();
  }

  std::uint64_t finish() {
    flush();
    out_.close();
    if (!out_) throw std::runtime_error("write failed");
    return hash_.digest();
  }

 private:
  static constexpr std::size_t kFlushAt = 1 << 20;

  void flush() {
    if (buffer_.empty()) return;
    out_.write(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
    buffer_.clear();
  }

  std::ofstream out_;
  std::string buffer_;
  Fnv1a64 hash_;
};

inline void append_int(std::string& out, long long v) {
  char buf[24];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

inline void check_range(std::uint32_t lo, std::uint32_t hi) {
  if (lo > hi || hi > cardinality()) throw std::out_of_range("bad dataset range");
}

}  // namespace io_detail

inline void append_factors_row(std::uint32_t index, const FactorTuple& t, std::string& out) {
  io_detail::append_int(out, index);
  for (const int code : csv_codes(t)) {
    out += ',';
    io_detail::append_int(out, code);
  }
  out += '\n';
}

// Renders the factor rows for [lo, hi) without the header.
inline void render_factors_rows(std::uint32_t lo, std::uint32_t hi, std::string& out) {
  for (std::uint32_t i = lo; i < hi; ++i) append_factors_row(i, index_to_factors(i), out);
}

// Renders the token lines for [lo, hi), one melody per line.
inline void render_token_lines(std::uint32_t lo, std::uint32_t hi, std::string& out) {
  for (std::uint32_t i = lo; i < hi; ++i) {
    append_token_line(index_to_factors(i), out);
    out += '\n';
  }
}

namespace io_detail {

// Shards [lo, hi) across workers, renders each shard with `render` into a
// string, and concatenates in range order. Deterministic for any worker
// count.
template <typename RenderFn>
WriteResult sharded_write(std::uint32_t lo, std::uint32_t hi, const std::filesystem::path& path,
                          std::string_view header, RenderFn render, int workers) {
  check_range(lo, hi);
  if (workers < 1) workers = 1;
  const std::uint32_t total = hi - lo;
  const std::uint32_t n = std::min<std::uint32_t>(static_cast<std::uint32_t>(workers), std::max<std::uint32_t>(total, 1));

  std::vector<std::string> parts(n);
  std::vector<std::thread> pool;
  pool.reserve(n);
  for (std::uint32_t w = 0; w < n; ++w) {
    const std::uint32_t a = lo + static_cast<std::uint32_t>(static_cast<std::uint64_t>(total) * w / n);
    const std::uint32_t b = lo + static_cast<std::uint32_t>(static_cast<std::uint64_t>(total) * (w + 1) / n);
    pool.emplace_back([&, w, a, b] { render(a, b, parts[w]); });
  }
  for (auto& th : pool) th.join();

  DigestWriter out(path);
  if (!header.empty()) {
    out.append(header);
    out.append("\n");
  }
  for (const std::string& part : parts) out.append(part);
  return {total, out.finish()};
}

}  // namespace io_detail

// Integer-coded factor labels, one row per index.
inline WriteResult write_factors_csv(std::uint32_t lo, std::uint32_t hi, const std::filesystem::path& path,
                                     int workers = 1) {
  return io_detail::sharded_write(lo, hi, path, kFactorsCsvHeader,
                                  [](std::uint32_t a, std::uint32_t b, std::string& s) { render_factors_rows(a, b, s); },
                                  workers);
}

// One 16-token line per index, aligned with the factor CSV rows.
inline WriteResult write_tokens(std::uint32_t lo, std::uint32_t hi, const std::filesystem::path& path,
                                int workers = 1) {
  return io_detail::sharded_write(lo, hi, path, {},
                                  [](std::uint32_t a, std::uint32_t b, std::string& s) { render_token_lines(a, b, s); },
                                  workers);
}

inline std::string midi_file_name(std::uint32_t index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%07u.mid", index);
  return buf;
}

inline std::uint64_t write_midi_files(std::uint32_t lo, std::uint32_t hi, const std::filesystem::path& dir,
                                      const MidiParams& params = {}, int workers = 1) {
  io_detail::check_range(lo, hi);
  std::filesystem::create_directories(dir);
  if (workers < 1) workers = 1;
  const std::uint32_t total = hi - lo;
  const std::uint32_t n = std::min<std::uint32_t>(static_cast<std::uint32_t>(workers), std::max<std::uint32_t>(total, 1));
  std::vector<std::thread> pool;
  for (std::uint32_t w = 0; w < n; ++w) {
    const std::uint32_t a = lo + static_cast<std::uint32_t>(static_cast<std::uint64_t>(total) * w / n);
    const std::uint32_t b = lo + static_cast<std::uint32_t>(static_cast<std::uint64_t>(total) * (w + 1) / n);
    pool.emplace_back([&, a, b] {
      for (std::uint32_t i = a; i < b; ++i) {
        write_midi_file(synthesize(index_to_factors(i)), dir / midi_file_name(i), params);
      }
    });
  }
  for (auto& th : pool) th.join();
  return total;
}

struct UniquenessReport {
  std::uint64_t total = 0;
  std::uint64_t duplicates = 0;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> collisions;  // (first index, duplicate index)
};

// Hashes the token sequence of every listed index. Hash buckets that
// collide are re-checked against the regenerated token strings, so a
// reported duplicate is always a true duplicate.
inline UniquenessReport verify_uniqueness(std::span<const std::uint32_t> indices) {
  UniquenessReport report;
  report.total = indices.size();

  std::unordered_map<std::uint64_t, std::uint32_t> first_seen;
  first_seen.reserve(indices.size() * 2);
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> bucket_rest;

  std::string line;
  for (const std::uint32_t i : indices) {
    line.clear();
    append_token_line(index_to_factors(i), line);
    const std::uint64_t h = fnv1a64(line);
    const auto [it, inserted] = first_seen.emplace(h, i);
    if (!inserted) bucket_rest[h].push_back(i);
  }

  std::string a, b;
  for (const auto& [h, rest] : bucket_rest) {
    std::vector<std::uint32_t> members{first_seen.at(h)};
    members.insert(members.end(), rest.begin(), rest.end());
    // compare actual strings within the bucket
    for (std::size_t j = 1; j < members.size(); ++j) {
      b.clear();
      append_token_line(index_to_factors(members[j]), b);
      for (std::size_t k = 0; k < j; ++k) {
        a.clear();
        append_token_line(index_to_factors(members[k]), a);
        if (a == b) {
          ++report.duplicates;
          report.collisions.emplace_back(members[k], members[j]);
          break;
        }
      }
    }
  }
  return report;
}

inline UniquenessReport verify_uniqueness(std::uint32_t lo, std::uint32_t hi) {
  io_detail::check_range(lo, hi);
  std::vector<std::uint32_t> indices(hi - lo);
  for (std::uint32_t i = lo; i < hi; ++i) indices[i - lo] = i;
  return verify_uniqueness(indices);
}

// Human-readable key-value manifest binding every generation decision.
inline std::string render_manifest(std::uint32_t lo, std::uint32_t hi, const MidiParams& midi,
                                   const std::vector<std::pair<std::string, std::string>>& digests) {
  std::ostringstream out;
  out << "manifest_version = " << kManifestVersion << "\n";
  out << "generator = melgen " << kVersion << "\n";
  out << "range = " << lo << ".." << hi << "\n";
  out << "total_melodies = " << cardinality() << "\n";
  out << "factor_order = ";
  for (int f = 0; f < kFactorCount; ++f) {
    if (f) out << ",";
    out << FactorSpace::kFactors[f].first;
  }
  out << "\n";
  out << "cardinalities = ";
  for (int f = 0; f < kFactorCount; ++f) {
    if (f) out << ",";
    out << FactorSpace::kFactors[f].second;
  }
  out << "\n";
  out << "index_order = lexicographic, tonic most significant\n";
  out << "encoding.tonic = chromatic pitch class, 0=C .. 11=B\n";
  out << "encoding.octave = literal octave digit, one of 4,5,6\n";
  out << "encoding.scale = 0=major, 1=harmonic_minor, 2=blues\n";
  out << "encoding.arp = 0=up, 1=down\n";
  out << "scale.major = 0,2,4,5,7,9,11\n";
  out << "scale.harmonic_minor = 0,2,3,5,7,8,11\n";
  out << "scale.blues = 0,3,5,6,7,10\n";
  out << "chords = I,IV,V,I rooted at semitone offsets 0,5,7; root plus two and four scale steps\n";
  out << "tokens.hold = " << kHoldToken << "\n";
  out << "tokens.rest = " << kRestToken << "\n";
  out << "tokens.note = spelled name with octave digit\n";
  out << "vocabulary_size = " << token_vocabulary().size() << "\n";
  const auto& vocab = token_vocabulary();
  for (int i = 0; i < vocab.size(); ++i) out << "vocab." << i << " = " << vocab.tokens[i] << "\n";
  const auto& patterns = all_patterns();
  for (int r = 0; r < static_cast<int>(patterns.size()); ++r) {
    out << "rhythm." << r << " = " << patterns[r].to_string() << "\n";
  }
  out << "midi.ticks_per_quarter = " << midi.ticks_per_quarter << "\n";
  out << "midi.tempo_bpm = " << midi.tempo_bpm << "\n";
  out << "midi.program = " << midi.program << "\n";
  out << "midi.velocity = " << midi.velocity << "\n";
  out << "digest.algorithm = fnv1a64\n";
  for (const auto& [name, value] : digests) out << "digest." << name << " = " << value << "\n";
  return out.str();
}

inline std::string digest_hex(std::uint64_t digest) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(digest));
  return buf;
}

// ---- readers for the evaluation pipeline ----

namespace io_detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line, std::vector<std::string_view>& out) {
  out.clear();
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

inline bool parse_double(std::string_view s, double& v) {
  const char* begin = s.data();
  const char* end = begin + s.size();
  const auto res = std::from_chars(begin, end, v);
  return res.ec == std::errc() && res.ptr == end;
}

inline bool parse_int(std::string_view s, long long& v) {
  const char* begin = s.data();
  const char* end = begin + s.size();
  const auto res = std::from_chars(begin, end, v);
  return res.ec == std::errc() && res.ptr == end;
}

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

}  // namespace io_detail

// N x D real matrix; a non-numeric first line is treated as a header.
inline Eigen::MatrixXd read_codes_csv(const std::filesystem::path& path) {
  const auto lines = io_detail::read_lines(path);
  if (lines.empty()) throw std::runtime_error("empty codes file: " + path.string());

  std::vector<std::string_view> fields;
  std::size_t first_row = 0;
  double probe = 0.0;
  io_detail::split_csv_line(lines[0], fields);
  if (!io_detail::parse_double(fields[0], probe)) first_row = 1;
  if (first_row >= lines.size()) throw std::runtime_error("codes file has no data rows");

  io_detail::split_csv_line(lines[first_row], fields);
  const std::size_t dims = fields.size();
  Eigen::MatrixXd codes(static_cast<Eigen::Index>(lines.size() - first_row), static_cast<Eigen::Index>(dims));
  for (std::size_t r = first_row; r < lines.size(); ++r) {
    io_detail::split_csv_line(lines[r], fields);
    if (fields.size() != dims) throw std::runtime_error("ragged codes row in " + path.string());
    for (std::size_t c = 0; c < dims; ++c) {
      double v = 0.0;
      if (!io_detail::parse_double(fields[c], v)) throw std::runtime_error("bad number in " + path.string());
      codes(static_cast<Eigen::Index>(r - first_row), static_cast<Eigen::Index>(c)) = v;
    }
  }
  return codes;
}

struct FactorTable {
  std::vector<std::uint32_t> indices;  // dataset indices (column 0)
  Eigen::MatrixXi labels;              // N x 9 integer codes
};

inline FactorTable read_factors_csv(const std::filesystem::path& path) {
  const auto lines = io_detail::read_lines(path);
  if (lines.empty()) throw std::runtime_error("empty factors file: " + path.string());
  if (lines[0] != kFactorsCsvHeader) throw std::runtime_error("unexpected factors header in " + path.string());

  FactorTable table;
  table.indices.reserve(lines.size() - 1);
  table.labels.resize(static_cast<Eigen::Index>(lines.size() - 1), kFactorCount);
  std::vector<std::string_view> fields;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    io_detail::split_csv_line(lines[r], fields);
    if (fields.size() != kFactorCount + 1) throw std::runtime_error("ragged factors row in " + path.string());
    long long v = 0;
    if (!io_detail::parse_int(fields[0], v)) throw std::runtime_error("bad index in " + path.string());
    table.indices.push_back(static_cast<std::uint32_t>(v));
    for (int c = 0; c < kFactorCount; ++c) {
      if (!io_detail::parse_int(fields[c + 1], v)) throw std::runtime_error("bad factor code in " + path.string());
      table.labels(static_cast<Eigen::Index>(r - 1), c) = static_cast<int>(v);
    }
  }
  return table;
}

}  // namespace melgen
