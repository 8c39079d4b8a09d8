#include "mosaic/fuzzyscan.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <thread>

#include <fmt/format.h>

#include "mosaic/distances.hpp"
#include "mosaic/error.hpp"
#include "mosaic/io.hpp"
#include "mosaic/rng.hpp"

namespace mosaic {

std::size_t ScanConfig::prune_floor() const {
  if (prune_min_common) return *prune_min_common;
  return window_length > max_distance ? window_length - max_distance : 0;
}

void ScanConfig::validate() const {
  if (window_length == 0) throw InvalidArgument("window_length must be >= 1");
  if (step == 0) throw InvalidArgument("step must be >= 1");
  if (!(sample_fraction > 0.0 && sample_fraction <= 1.0)) {
    throw InvalidArgument(fmt::format("sample_fraction must lie in (0, 1], got {}", sample_fraction));
  }
  const std::size_t sound = window_length > max_distance ? window_length - max_distance : 0;
  if (prune_min_common && *prune_min_common > sound) {
    throw InvalidArgument(fmt::format(
        "prune_min_common {} exceeds window_length - max_distance = {}; the prune would drop true matches",
        *prune_min_common, sound));
  }
}

nlohmann::json to_json(const ScanConfig& c) {
  nlohmann::json j = {
      {"window_length", c.window_length},
      {"step", c.step},
      {"max_distance", c.max_distance},
      {"prune_min_common", c.prune_floor()},
      {"sample_fraction", c.sample_fraction},
      {"seed", c.seed},
      {"reshuffle", c.reshuffle},
      {"exclusive_across_targets", c.exclusive_across_targets},
      {"prune", c.prune},
  };
  return j;
}

ScanConfig scan_config_from_json(const nlohmann::json& j) {
  ScanConfig c;
  c.window_length = j.value("window_length", c.window_length);
  c.step = j.value("step", c.step);
  c.max_distance = j.value("max_distance", c.max_distance);
  if (j.contains("prune_min_common")) c.prune_min_common = j.at("prune_min_common").get<std::size_t>();
  c.sample_fraction = j.value("sample_fraction", c.sample_fraction);
  c.seed = j.value("seed", c.seed);
  c.reshuffle = j.value("reshuffle", c.reshuffle);
  c.exclusive_across_targets = j.value("exclusive_across_targets", c.exclusive_across_targets);
  c.prune = j.value("prune", c.prune);
  return c;
}

std::vector<ScanTarget> read_targets_jsonl(const std::filesystem::path& path) {
  std::vector<ScanTarget> targets;
  io::for_each_jsonl(path, [&](const nlohmann::json& rec, std::size_t line_no) {
    if (!rec.is_object() || !rec.contains("tokens")) {
      throw FormatError(fmt::format("{}:{}: expected an object with \"tokens\"", path.string(), line_no));
    }
    ScanTarget t;
    t.id = rec.contains("id") ? rec.at("id").get<std::string>() : fmt::format("t{}", targets.size());
    t.tokens = io::tokens_from_json(rec.at("tokens"), fmt::format("{}:{}", path.string(), line_no));
    targets.push_back(std::move(t));
  });
  return targets;
}

void write_targets_jsonl(std::span<const ScanTarget> targets, const std::filesystem::path& path) {
  std::string text;
  for (const auto& t : targets) {
    text += nlohmann::json{{"id", t.id}, {"tokens", t.tokens}}.dump();
    text += '\n';
  }
  io::write_text_file(path, text);
}

// ---------------------------------------------------------------------------

OverlapCounter::OverlapCounter(std::span<const ScanTarget> targets, std::size_t floor)
    : floor_(static_cast<std::uint32_t>(floor)) {
  TokenId max_token = 0;
  for (const auto& t : targets) {
    for (const auto v : t.tokens) max_token = std::max(max_token, v);
  }
  dense_ = max_token < kDenseLimit;
  if (dense_) dense_slots_.assign(static_cast<std::size_t>(max_token) + 1, kNoSlot);

  // Per target multiplicities, then grouped by slot.
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> per_slot;
  for (std::uint32_t ti = 0; ti < targets.size(); ++ti) {
    std::unordered_map<TokenId, std::uint32_t> counts;
    for (const auto v : targets[ti].tokens) ++counts[v];
    std::vector<std::pair<TokenId, std::uint32_t>> sorted(counts.begin(), counts.end());
    std::sort(sorted.begin(), sorted.end());
    for (const auto& [token, count] : sorted) {
      std::uint32_t slot = slot_of(token);
      if (slot == kNoSlot) {
        slot = static_cast<std::uint32_t>(per_slot.size());
        per_slot.emplace_back();
        if (dense_) {
          dense_slots_[token] = slot;
        } else {
          sparse_slots_.emplace(token, slot);
        }
      }
      per_slot[slot].emplace_back(ti, count);
    }
  }
  window_count_.assign(per_slot.size(), 0);
  entry_begin_.reserve(per_slot.size() + 1);
  entry_begin_.push_back(0);
  for (const auto& entries : per_slot) {
    for (const auto& [target, count] : entries) {
      entry_target_.push_back(target);
      entry_count_.push_back(count);
    }
    entry_begin_.push_back(static_cast<std::uint32_t>(entry_target_.size()));
  }
  shared_.assign(targets.size(), 0);
  active_pos_.assign(targets.size(), kNoSlot);
  if (floor_ == 0) {
    for (std::uint32_t ti = 0; ti < targets.size(); ++ti) activate(ti);
  }
}

std::uint32_t OverlapCounter::slot_of(TokenId token) const {
  if (dense_) return token < dense_slots_.size() ? dense_slots_[token] : kNoSlot;
  const auto it = sparse_slots_.find(token);
  return it == sparse_slots_.end() ? kNoSlot : it->second;
}

void OverlapCounter::activate(std::uint32_t target) {
  active_pos_[target] = static_cast<std::uint32_t>(active_.size());
  active_.push_back(target);
}

void OverlapCounter::deactivate(std::uint32_t target) {
  const auto pos = active_pos_[target];
  const auto last = active_.back();
  active_[pos] = last;
  active_pos_[last] = pos;
  active_.pop_back();
  active_pos_[target] = kNoSlot;
}

void OverlapCounter::add(TokenId token) {
  const auto slot = slot_of(token);
  if (slot == kNoSlot) return;
  const auto before = window_count_[slot]++;
  for (auto e = entry_begin_[slot]; e < entry_begin_[slot + 1]; ++e) {
    if (before < entry_count_[e]) {
      const auto t = entry_target_[e];
      if (++shared_[t] == floor_) activate(t);
    }
  }
}

void OverlapCounter::remove(TokenId token) {
  const auto slot = slot_of(token);
  if (slot == kNoSlot) return;
  const auto after = --window_count_[slot];
  for (auto e = entry_begin_[slot]; e < entry_begin_[slot + 1]; ++e) {
    if (after < entry_count_[e]) {
      const auto t = entry_target_[e];
      if (shared_[t]-- == floor_ && floor_ > 0) deactivate(t);
    }
  }
}

// ---------------------------------------------------------------------------

ScanRegion select_scan_region(const Corpus& corpus, double fraction, bool reshuffle,
                              std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw InvalidArgument(fmt::format("scan fraction must lie in (0, 1], got {}", fraction));
  }
  std::vector<std::size_t> order(corpus.docs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (reshuffle) {
    Rng rng(seed);
    rng.shuffle(order);
  }
  ScanRegion region;
  region.total_tokens = corpus.total_tokens();
  if (region.total_tokens == 0) return region;
  const double goal = fraction * static_cast<double>(region.total_tokens);
  for (const auto d : order) {
    if (static_cast<double>(region.tokens_scanned) >= goal - 1e-9) break;
    region.docs.push_back(d);
    region.tokens_scanned += corpus.docs[d].size();
  }
  region.fraction_scanned =
      static_cast<double>(region.tokens_scanned) / static_cast<double>(region.total_tokens);
  return region;
}

namespace {

class ShardScanner {
 public:
  ShardScanner(std::span<const ScanTarget> targets, const ScanConfig& config)
      : targets_(targets),
        config_(config),
        use_counter_(config.prune && config.prune_floor() > 0),
        counter_(targets, config.prune_floor()) {}

  // Windows j0..j1 (exclusive) of one document.
  void scan_doc(const TokenSeq& doc, std::size_t doc_index, std::size_t j0, std::size_t j1) {
    const std::size_t L = config_.window_length;
    const std::size_t step = config_.step;
    std::size_t prev = j0 * step;
    if (use_counter_) {
      for (std::size_t i = prev; i < prev + L; ++i) counter_.add(doc[i]);
    }
    for (std::size_t j = j0; j < j1; ++j) {
      const std::size_t off = j * step;
      if (use_counter_ && j > j0) {
        if (step < L) {
          for (std::size_t i = prev; i < off; ++i) counter_.remove(doc[i]);
          for (std::size_t i = prev + L; i < off + L; ++i) counter_.add(doc[i]);
        } else {
          for (std::size_t i = prev; i < prev + L; ++i) counter_.remove(doc[i]);
          for (std::size_t i = off; i < off + L; ++i) counter_.add(doc[i]);
        }
      }
      prev = off;
      const TokenSpan window(doc.data() + off, L);
      if (use_counter_) {
        for (const auto t : counter_.active()) evaluate(window, t, doc_index, off);
      } else {
        for (std::size_t t = 0; t < targets_.size(); ++t) evaluate(window, t, doc_index, off);
      }
    }
    if (use_counter_ && j1 > j0) {
      for (std::size_t i = prev; i < prev + L; ++i) counter_.remove(doc[i]);
    }
  }

  std::vector<Match>& matches() { return matches_; }

 private:
  void evaluate(TokenSpan window, std::size_t target, std::size_t doc_index, std::size_t offset) {
    const auto d = lev_(window, targets_[target].tokens, config_.max_distance);
    if (d) {
      matches_.push_back(Match{target, WindowRef{doc_index, offset, config_.window_length}, *d});
    }
  }

  std::span<const ScanTarget> targets_;
  const ScanConfig& config_;
  bool use_counter_;
  OverlapCounter counter_;
  BandedLevenshtein lev_;
  std::vector<Match> matches_;
};

}  // namespace

std::vector<Match> collect_matches(const Corpus& corpus, const ScanRegion& region,
                                   std::span<const ScanTarget> targets, const ScanConfig& config) {
  config.validate();
  for (const auto& t : targets) {
    if (t.tokens.size() != config.window_length) {
      throw InvalidArgument(fmt::format("target {} has {} tokens, expected {}", t.id, t.tokens.size(),
                                        config.window_length));
    }
  }
  if (targets.empty()) return {};

  // Global window index over the region, split into contiguous shards.
  std::vector<std::size_t> first_window(region.docs.size() + 1, 0);
  for (std::size_t k = 0; k < region.docs.size(); ++k) {
    first_window[k + 1] = first_window[k] +
                          windows_in_doc(corpus.docs[region.docs[k]].size(), config.window_length, config.step);
  }
  const std::size_t total = first_window.back();
  std::size_t threads = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::max<std::size_t>(1, std::min(threads, total / 4096 + 1));

  std::vector<std::vector<Match>> shard_matches(threads);
  const auto run_shard = [&](std::size_t s) {
    const std::size_t a = total * s / threads;
    const std::size_t b = total * (s + 1) / threads;
    ShardScanner scanner(targets, config);
    auto k = static_cast<std::size_t>(std::upper_bound(first_window.begin(), first_window.end(), a) -
                                      first_window.begin()) - 1;
    for (; k < region.docs.size() && first_window[k] < b; ++k) {
      const std::size_t j0 = std::max(a, first_window[k]) - first_window[k];
      const std::size_t j1 = std::min(b, first_window[k + 1]) - first_window[k];
      if (j0 < j1) scanner.scan_doc(corpus.docs[region.docs[k]], region.docs[k], j0, j1);
    }
    shard_matches[s] = std::move(scanner.matches());
  };
  if (threads == 1) {
    run_shard(0);
  } else {
    std::vector<std::jthread> workers;
    for (std::size_t s = 0; s < threads; ++s) workers.emplace_back(run_shard, s);
  }

  std::vector<Match> all;
  for (auto& m : shard_matches) all.insert(all.end(), m.begin(), m.end());
  std::sort(all.begin(), all.end());
  return all;
}

std::vector<Match> resolve_overlaps(std::vector<Match> matches, bool across_targets) {
  std::sort(matches.begin(), matches.end(), [](const Match& x, const Match& y) {
    return std::tie(x.distance, x.window.doc_index, x.window.offset, x.target) <
           std::tie(y.distance, y.window.doc_index, y.window.offset, y.target);
  });
  // (group, doc) -> accepted intervals keyed by start.
  std::map<std::pair<std::size_t, std::size_t>, std::map<std::size_t, std::size_t>> taken;
  std::vector<Match> kept;
  for (const auto& m : matches) {
    auto& intervals = taken[{across_targets ? 0 : m.target, m.window.doc_index}];
    const std::size_t start = m.window.offset;
    const std::size_t end = m.window.end();
    auto next = intervals.lower_bound(start);
    if (next != intervals.end() && next->first < end) continue;
    if (next != intervals.begin() && std::prev(next)->second > start) continue;
    intervals.emplace(start, end);
    kept.push_back(m);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

std::vector<std::uint64_t> cumulative_histogram(std::span<const std::uint64_t> raw) {
  std::vector<std::uint64_t> out(raw.size());
  std::uint64_t running = 0;
  for (std::size_t d = 0; d < raw.size(); ++d) out[d] = running += raw[d];
  return out;
}

std::vector<double> extrapolate_counts(std::span<const std::uint64_t> cumulative, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw InvalidArgument(fmt::format("fraction must lie in (0, 1], got {}", fraction));
  }
  std::vector<double> out;
  out.reserve(cumulative.size());
  for (const auto c : cumulative) out.push_back(static_cast<double>(c) / fraction);
  return out;
}

ScanReport scan_fuzzy_duplicates(const Corpus& corpus, std::span<const ScanTarget> targets,
                                 const ScanConfig& config) {
  config.validate();
  const auto region = select_scan_region(corpus, config.sample_fraction, config.reshuffle, config.seed);
  auto matches = resolve_overlaps(collect_matches(corpus, region, targets, config),
                                  config.exclusive_across_targets);

  ScanReport report;
  report.config = config;
  report.tokens_scanned = region.tokens_scanned;
  report.fraction_scanned = region.fraction_scanned;
  report.targets.resize(targets.size());
  for (std::size_t t = 0; t < targets.size(); ++t) {
    auto& tr = report.targets[t];
    tr.target_id = targets[t].id;
    tr.target_tokens = targets[t].tokens;
    tr.raw_counts.assign(config.max_distance + 1, 0);
  }
  for (const auto& m : matches) {
    auto& tr = report.targets[m.target];
    ++tr.raw_counts[m.distance];
    tr.matches.push_back(m);
    const auto span = window_tokens(corpus, m.window);
    tr.match_tokens.emplace_back(span.begin(), span.end());
  }
  // An empty corpus scans "everything" (fraction 1), so extrapolation is safe.
  const double fraction = report.fraction_scanned > 0.0 ? report.fraction_scanned : 1.0;
  for (auto& tr : report.targets) {
    tr.cumulative = cumulative_histogram(tr.raw_counts);
    tr.extrapolated = extrapolate_counts(tr.cumulative, fraction);
  }
  return report;
}

nlohmann::json to_json(const ScanReport& report) {
  nlohmann::json targets = nlohmann::json::array();
  for (const auto& tr : report.targets) {
    nlohmann::json matches = nlohmann::json::array();
    for (std::size_t i = 0; i < tr.matches.size(); ++i) {
      const auto& m = tr.matches[i];
      matches.push_back({{"doc", m.window.doc_index},
                         {"offset", m.window.offset},
                         {"distance", m.distance},
                         {"tokens", tr.match_tokens[i]}});
    }
    nlohmann::json extrapolated = nlohmann::json::array();
    for (const auto v : tr.extrapolated) extrapolated.push_back(io::round_sig6(v));
    targets.push_back({{"target_id", tr.target_id},
                       {"target_tokens", tr.target_tokens},
                       {"raw_counts", tr.raw_counts},
                       {"cumulative", tr.cumulative},
                       {"extrapolated", extrapolated},
                       {"fraction_scanned", io::round_sig6(report.fraction_scanned)},
                       {"tokens_scanned", report.tokens_scanned},
                       {"matches", matches}});
  }
  return {{"metadata", {{"config", to_json(report.config)}}},
          {"fraction_scanned", io::round_sig6(report.fraction_scanned)},
          {"tokens_scanned", report.tokens_scanned},
          {"targets", targets}};
}

ScanReport scan_report_from_json(const nlohmann::json& j) {
  try {
    ScanReport report;
    if (j.contains("metadata") && j.at("metadata").contains("config")) {
      report.config = scan_config_from_json(j.at("metadata").at("config"));
    }
    report.fraction_scanned = j.value("fraction_scanned", 1.0);
    report.tokens_scanned = j.value("tokens_scanned", std::size_t{0});
    const auto& targets = j.at("targets");
    for (std::size_t t = 0; t < targets.size(); ++t) {
      const auto& jt = targets[t];
      TargetReport tr;
      tr.target_id = jt.value("target_id", fmt::format("t{}", t));
      if (jt.contains("target_tokens")) tr.target_tokens = io::tokens_from_json(jt.at("target_tokens"), "target_tokens");
      tr.raw_counts = jt.at("raw_counts").get<std::vector<std::uint64_t>>();
      tr.cumulative = jt.value("cumulative", cumulative_histogram(tr.raw_counts));
      tr.extrapolated = jt.value("extrapolated", std::vector<double>{});
      if (jt.contains("matches")) {
        for (const auto& jm : jt.at("matches")) {
          Match m;
          m.target = t;
          m.window.doc_index = jm.at("doc").get<std::size_t>();
          m.window.offset = jm.at("offset").get<std::size_t>();
          m.distance = jm.at("distance").get<std::size_t>();
          auto tokens = io::tokens_from_json(jm.at("tokens"), "match tokens");
          m.window.length = tokens.size();
          tr.matches.push_back(m);
          tr.match_tokens.push_back(std::move(tokens));
        }
      }
      report.targets.push_back(std::move(tr));
    }
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(fmt::format("malformed scan report: {}", e.what()));
  }
}

}  // namespace mosaic
