#include "mosaic/io.hpp"

#include <array>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include <fmt/format.h>

#include "mosaic/error.hpp"

namespace mosaic::io {

namespace {

template <class T>
T read_le(std::istream& in, std::string_view what) {
  std::array<unsigned char, sizeof(T)> bytes{};
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
    throw FormatError(fmt::format("truncated record while reading {}", what));
  }
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(bytes[i]) << (8 * i);
  return value;
}

template <class T>
void write_le(std::ostream& out, T value) {
  std::array<char, sizeof(T)> bytes{};
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  }
  out.write(bytes.data(), bytes.size());
}

}  // namespace

std::uint16_t read_u16(std::istream& in, std::string_view what) { return read_le<std::uint16_t>(in, what); }
std::uint32_t read_u32(std::istream& in, std::string_view what) { return read_le<std::uint32_t>(in, what); }
std::uint64_t read_u64(std::istream& in, std::string_view what) { return read_le<std::uint64_t>(in, what); }

void write_u16(std::ostream& out, std::uint16_t value) { write_le(out, value); }
void write_u32(std::ostream& out, std::uint32_t value) { write_le(out, value); }
void write_u64(std::ostream& out, std::uint64_t value) { write_le(out, value); }

bool is_blank(std::string_view line) {
  return line.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

TokenSeq tokens_from_json(const nlohmann::json& value, std::string_view context) {
  if (!value.is_array()) throw FormatError(fmt::format("{}: tokens must be an array", context));
  TokenSeq tokens;
  tokens.reserve(value.size());
  for (const auto& t : value) {
    if (t.is_number_unsigned()) {
      const auto v = t.get<std::uint64_t>();
      if (v > std::numeric_limits<TokenId>::max()) {
        throw FormatError(fmt::format("{}: token {} does not fit in 32 bits", context, v));
      }
      tokens.push_back(static_cast<TokenId>(v));
    } else if (t.is_number_integer()) {
      throw FormatError(fmt::format("{}: negative token {}", context, t.get<std::int64_t>()));
    } else {
      throw FormatError(fmt::format("{}: token must be a non-negative integer", context));
    }
  }
  return tokens;
}

void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const nlohmann::json&, std::size_t)>& fn) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
    try {
      fn(record, line_no);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
  }
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot open {} for writing", path.string()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError(fmt::format("failed writing {}", path.string()));
}

double round_sig6(double value) {
  if (!std::isfinite(value) || value == 0.0) return value;
  return std::strtod(fmt::format("{:.6g}", value).c_str(), nullptr);
}

}  // namespace mosaic::io
