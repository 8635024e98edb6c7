#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace attiqa {

std::uint64_t splitmix64(std::uint64_t& state);
/// One-shot splitmix64 finalizer, used to derive independent sub-seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);
std::uint64_t fnv1a64(std::string_view text);

std::string sha256_hex(std::span<const unsigned char> bytes);
std::string sha256_hex(std::string_view text);
std::string sha256_file(const std::filesystem::path& path);

std::uint32_t crc32_of(std::span<const unsigned char> bytes);

}  // namespace attiqa
