#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace floodtwin {

// 64-bit FNV-1a. Stable across platforms; used for manifest and cache keys, not security.
class Fnv1a {
 public:
  Fnv1a& update(std::span<const std::byte> bytes);
  Fnv1a& update(std::string_view text);
  Fnv1a& update(double value);
  std::uint64_t value() const noexcept { return state_; }
  std::string hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string hash_string(std::string_view text);
std::string hash_file(const std::filesystem::path& path);

}  // namespace floodtwin
