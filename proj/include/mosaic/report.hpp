#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mosaic/corpus.hpp"
#include "mosaic/dedupsim.hpp"
#include "mosaic/fuzzyscan.hpp"
#include "mosaic/memmetrics.hpp"

namespace mosaic {

enum class ReportKind { scan, dedup, rho_curve, distance_rho, overlap_table };
enum class ReportFormat { csv, json };

std::string_view to_string(ReportKind kind);
ReportKind report_kind_from_string(std::string_view name);
/// `.json` maps to json, anything else to csv.
ReportFormat report_format_for(const std::filesystem::path& path);

/// Column names per kind, in output order.
std::span<const std::string_view> report_columns(ReportKind kind);

using Cell = std::variant<std::int64_t, double, std::string>;

struct ReportBundle {
  ReportKind kind = ReportKind::scan;
  std::vector<std::vector<Cell>> rows;
  /// Config, seeds and toolkit version needed to regenerate the rows.
  nlohmann::json metadata = nlohmann::json::object();
};

/// Deterministic text: CSV with a header line, or JSON
/// {"kind", "metadata", "rows": [{column: value}]}. Doubles are written with
/// 6 significant digits. Throws InvalidArgument if a row has the wrong width.
std::string render(const ReportBundle& bundle, ReportFormat format);
void emit(const ReportBundle& bundle, ReportFormat format, const std::filesystem::path& path);

/// Parses JSON produced by render().
ReportBundle bundle_from_json(const nlohmann::json& j);

ReportBundle scan_bundle(const ScanReport& report);
ReportBundle dedup_bundle(std::span<const DedupRow> rows);

struct RhoCurveEntry {
  std::string experiment;
  double param = 0.0;
  RhoResult result;
};
ReportBundle rho_curve_bundle(std::span<const RhoCurveEntry> entries);

struct DistanceRhoEntry {
  std::string experiment;
  DistanceRhoPoint point;
};
ReportBundle distance_rho_bundle(std::span<const DistanceRhoEntry> entries);

struct OverlapPair {
  std::string group;
  TokenSeq ref;
  TokenSeq other;
};

/// Per (group, n): mean and population standard deviation of
/// ngram_overlap_count(ref, other, n) over the pairs. Groups keep their first
/// appearance order. Pairs whose `other` equals `ref` are dropped unless
/// `keep_identical` is set.
ReportBundle overlap_table_bundle(std::span<const OverlapPair> pairs, std::span<const std::size_t> ns,
                                  bool keep_identical = false);

}  // namespace mosaic
