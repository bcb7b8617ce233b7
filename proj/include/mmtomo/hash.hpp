#ifndef MMTOMO_HASH_HPP
#define MMTOMO_HASH_HPP

#include <cstdint>
#include <cstring>
#include <string>

namespace mmt {

/// Incremental FNV-1a (64-bit). Used for content hashes of geometry, configs
/// and artifact payloads; not cryptographic.
class Fnv1a {
public:
  void update(const void* bytes, std::size_t count) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < count; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ULL;
    }
  }

  void update(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    unsigned char le[8];
    for (int i = 0; i < 8; ++i) le[i] = static_cast<unsigned char>(bits >> (8 * i));
    update(le, 8);
  }

  void update(std::uint64_t v) {
    unsigned char le[8];
    for (int i = 0; i < 8; ++i) le[i] = static_cast<unsigned char>(v >> (8 * i));
    update(le, 8);
  }

  void update(const std::string& s) { update(s.data(), s.size()); }

  std::uint64_t digest() const { return state_; }

private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string hash_hex(std::uint64_t h);

}  // namespace mmt

#endif
