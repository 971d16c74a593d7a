#include "floodtwin/hashing.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <vector>

#include "floodtwin/error.hpp"

namespace floodtwin {

Fnv1a& Fnv1a::update(std::span<const std::byte> bytes) {
  for (std::byte b : bytes) {
    state_ ^= static_cast<std::uint64_t>(b);
    state_ *= 0x100000001b3ULL;
  }
  return *this;
}

Fnv1a& Fnv1a::update(std::string_view text) {
  return update(std::as_bytes(std::span<const char>(text.data(), text.size())));
}

Fnv1a& Fnv1a::update(double value) {
  const auto bits = std::bit_cast<std::uint64_t>(value);
  std::byte raw[8];
  for (int i = 0; i < 8; ++i) raw[i] = static_cast<std::byte>((bits >> (8 * i)) & 0xff);
  return update(std::span<const std::byte>(raw, 8));
}

std::string Fnv1a::hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(state_));
  return buf;
}

std::string hash_string(std::string_view text) { return Fnv1a{}.update(text).hex(); }

std::string hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "' for hashing");
  Fnv1a h;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    const auto n = static_cast<std::size_t>(in.gcount());
    if (n == 0) break;
    h.update(std::string_view(buf.data(), n));
  }
  return h.hex();
}

}  // namespace floodtwin
