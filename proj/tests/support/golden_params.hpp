#pragma once

// Seeds and parameters shared by make_goldens and the acceptance pipeline.

#include <cstdint>

namespace golden {

inline constexpr std::uint64_t kScan100kSeed = 2024;
inline constexpr std::uint64_t kCanarySeed = 17;
inline constexpr std::size_t kCanaryCount = 6;
inline constexpr std::uint64_t kHostSeed = 23;
inline constexpr std::uint64_t kGenSeed = 7;
inline constexpr std::uint64_t kInjectSeed = 11;
inline constexpr const char* kReplaceParams =
    R"({"R": 10, "n_dup": 10, "strategy": "evenly_consistent", "vocab_size": 50257})";
inline constexpr const char* kNgrams = "13,20,25,50";

}  // namespace golden
