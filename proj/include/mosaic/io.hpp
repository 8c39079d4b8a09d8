#pragma once

// Little-endian binary primitives and shared JSON helpers.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>

#include <json.hpp>

#include "mosaic/corpus.hpp"

namespace mosaic::io {

std::uint16_t read_u16(std::istream& in, std::string_view what);
std::uint32_t read_u32(std::istream& in, std::string_view what);
std::uint64_t read_u64(std::istream& in, std::string_view what);

void write_u16(std::ostream& out, std::uint16_t value);
void write_u32(std::ostream& out, std::uint32_t value);
void write_u64(std::ostream& out, std::uint64_t value);

bool is_blank(std::string_view line);

/// Parses a JSON array of non-negative integers that fit in 32 bits.
TokenSeq tokens_from_json(const nlohmann::json& value, std::string_view context);

/// Calls `fn(record, line_no)` for every non-blank line of a JSONL file.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const nlohmann::json&, std::size_t)>& fn);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

/// Rounds to 6 significant digits so JSON output stays stable.
double round_sig6(double value);

}  // namespace mosaic::io
