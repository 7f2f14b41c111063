#pragma once

#include <cstdint>
#include <string_view>

namespace melgen {

// FNV-1a (64-bit). Content digest for generated files and the bucketing
// hash for the uniqueness sweep; collisions in the sweep are re-checked
// against the actual token strings before being reported.
class Fnv1a64 {
 public:
  void update(std::string_view bytes) {
    for (const char c : bytes) {
      state_ ^= static_cast<unsigned char>(c);
      state_ *= kPrime;
    }
  }

  std::uint64_t digest() const { return state_; }

 private:
  static constexpr std::uint64_t kOffset = 14695981039346656037ull;
  static constexpr std::uint64_t kPrime = 1099511628211ull;
  std::uint64_t state_ = kOffset;
};

inline std::uint64_t fnv1a64(std::string_view bytes) {
  Fnv1a64 h;
  h.update(bytes);
  return h.digest();
}

}  // namespace melgen
