#include "mosaic/report.hpp"

#include <array>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "mosaic/distances.hpp"
#include "mosaic/error.hpp"
#include "mosaic/io.hpp"

namespace mosaic {

namespace {

constexpr std::array<std::string_view, 5> kScanColumns = {"target_id", "distance", "raw_count", "cumulative",
                                                           "extrapolated"};
constexpr std::array<std::string_view, 4> kDedupColumns = {"policy_n", "distance", "surviving_raw",
                                                            "surviving_cumulative"};
constexpr std::array<std::string_view, 5> kRhoCurveColumns = {"experiment", "param", "phi_tilde", "nu_eq", "rho"};
constexpr std::array<std::string_view, 3> kDistanceRhoColumns = {"experiment", "mean_levenshtein", "rho"};
constexpr std::array<std::string_view, 5> kOverlapColumns = {"group", "n", "mean_overlap", "std_overlap", "pairs"};

std::string csv_field(const Cell& cell) {
  if (const auto* i = std::get_if<std::int64_t>(&cell)) return fmt::format("{}", *i);
  if (const auto* d = std::get_if<double>(&cell)) return fmt::format("{:.6g}", *d);
  const auto& s = std::get<std::string>(cell);
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string quoted = "\"";
  for (const char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

nlohmann::json json_value(const Cell& cell) {
  if (const auto* i = std::get_if<std::int64_t>(&cell)) return *i;
  if (const auto* d = std::get_if<double>(&cell)) return io::round_sig6(*d);
  return std::get<std::string>(cell);
}

Cell count_cell(std::uint64_t v) { return static_cast<std::int64_t>(v); }

}  // namespace

std::string_view to_string(ReportKind kind) {
  switch (kind) {
    case ReportKind::scan: return "scan";
    case ReportKind::dedup: return "dedup";
    case ReportKind::rho_curve: return "rho_curve";
    case ReportKind::distance_rho: return "distance_rho";
    case ReportKind::overlap_table: return "overlap_table";
  }
  return "?";
}

ReportKind report_kind_from_string(std::string_view name) {
  for (const auto k : {ReportKind::scan, ReportKind::dedup, ReportKind::rho_curve, ReportKind::distance_rho,
                       ReportKind::overlap_table}) {
    if (to_string(k) == name) return k;
  }
  throw InvalidArgument(fmt::format("unknown report kind '{}'", name));
}

ReportFormat report_format_for(const std::filesystem::path& path) {
  return path.extension() == ".json" ? ReportFormat::json : ReportFormat::csv;
}

std::span<const std::string_view> report_columns(ReportKind kind) {
  switch (kind) {
    case ReportKind::scan: return kScanColumns;
    case ReportKind::dedup: return kDedupColumns;
    case ReportKind::rho_curve: return kRhoCurveColumns;
    case ReportKind::distance_rho: return kDistanceRhoColumns;
    case ReportKind::overlap_table: return kOverlapColumns;
  }
  return {};
}

std::string render(const ReportBundle& bundle, ReportFormat format) {
  const auto columns = report_columns(bundle.kind);
  for (const auto& row : bundle.rows) {
    if (row.size() != columns.size()) {
      throw InvalidArgument(fmt::format("{} rows need {} fields, got {}", to_string(bundle.kind), columns.size(),
                                        row.size()));
    }
  }
  if (format == ReportFormat::csv) {
    std::string out = fmt::format("{}\n", fmt::join(columns, ","));
    for (const auto& row : bundle.rows) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c > 0) out += ',';
        out += csv_field(row[c]);
      }
      out += '\n';
    }
    return out;
  }
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : bundle.rows) {
    nlohmann::json obj = nlohmann::json::object();
    for (std::size_t c = 0; c < row.size(); ++c) obj[std::string(columns[c])] = json_value(row[c]);
    rows.push_back(std::move(obj));
  }
  const nlohmann::json doc = {{"kind", to_string(bundle.kind)}, {"metadata", bundle.metadata}, {"rows", rows}};
  return doc.dump(2) + "\n";
}

void emit(const ReportBundle& bundle, ReportFormat format, const std::filesystem::path& path) {
  io::write_text_file(path, render(bundle, format));
}

ReportBundle bundle_from_json(const nlohmann::json& j) {
  try {
    ReportBundle b;
    b.kind = report_kind_from_string(j.at("kind").get<std::string>());
    b.metadata = j.value("metadata", nlohmann::json::object());
    const auto columns = report_columns(b.kind);
    for (const auto& jr : j.at("rows")) {
      std::vector<Cell> row;
      for (const auto name : columns) {
        const auto& v = jr.at(std::string(name));
        if (v.is_number_integer()) {
          row.emplace_back(v.get<std::int64_t>());
        } else if (v.is_number()) {
          row.emplace_back(v.get<double>());
        } else {
          row.emplace_back(v.get<std::string>());
        }
      }
      b.rows.push_back(std::move(row));
    }
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(fmt::format("malformed report bundle: {}", e.what()));
  }
}

ReportBundle scan_bundle(const ScanReport& report) {
  ReportBundle b;
  b.kind = ReportKind::scan;
  b.metadata = {{"config", to_json(report.config)},
                {"fraction_scanned", io::round_sig6(report.fraction_scanned)},
                {"tokens_scanned", report.tokens_scanned}};
  for (const auto& tr : report.targets) {
    for (std::size_t d = 0; d < tr.raw_counts.size(); ++d) {
      b.rows.push_back({tr.target_id, count_cell(d), count_cell(tr.raw_counts[d]), count_cell(tr.cumulative[d]),
                        tr.extrapolated.size() > d ? Cell{tr.extrapolated[d]} : Cell{0.0}});
    }
  }
  return b;
}

ReportBundle dedup_bundle(std::span<const DedupRow> rows) {
  ReportBundle b;
  b.kind = ReportKind::dedup;
  for (const auto& r : rows) {
    b.rows.push_back({count_cell(r.policy_n), count_cell(r.distance), r.surviving_raw, r.surviving_cumulative});
  }
  return b;
}

ReportBundle rho_curve_bundle(std::span<const RhoCurveEntry> entries) {
  ReportBundle b;
  b.kind = ReportKind::rho_curve;
  for (const auto& e : entries) {
    b.rows.push_back({e.experiment, e.param, e.result.phi_tilde, e.result.nu_eq, e.result.rho});
  }
  return b;
}

ReportBundle distance_rho_bundle(std::span<const DistanceRhoEntry> entries) {
  ReportBundle b;
  b.kind = ReportKind::distance_rho;
  for (const auto& e : entries) b.rows.push_back({e.experiment, e.point.mean_levenshtein, e.point.rho});
  return b;
}

ReportBundle overlap_table_bundle(std::span<const OverlapPair> pairs, std::span<const std::size_t> ns,
                                  bool keep_identical) {
  std::vector<std::string> groups;
  std::map<std::string, std::vector<const OverlapPair*>> by_group;
  for (const auto& p : pairs) {
    if (!keep_identical && p.other == p.ref) continue;
    auto [it, fresh] = by_group.try_emplace(p.group);
    if (fresh) groups.push_back(p.group);
    it->second.push_back(&p);
  }
  ReportBundle b;
  b.kind = ReportKind::overlap_table;
  b.metadata = {{"ngram_sizes", std::vector<std::size_t>(ns.begin(), ns.end())}, {"keep_identical", keep_identical}};
  for (const auto& g : groups) {
    const auto& members = by_group.at(g);
    for (const auto n : ns) {
      std::vector<double> values;
      for (const auto* p : members) values.push_back(static_cast<double>(ngram_overlap_count(p->ref, p->other, n)));
      const auto count = static_cast<double>(values.size());
      double m = 0.0;
      for (const auto v : values) m += v;
      m /= count;
      double var = 0.0;
      for (const auto v : values) var += (v - m) * (v - m);
      b.rows.push_back({g, count_cell(n), m, std::sqrt(var / count), count_cell(members.size())});
    }
  }
  return b;
}

}  // namespace mosaic
