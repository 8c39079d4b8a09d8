#include "mosaic/canarygen.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include <fmt/format.h>
#include <httplib.h>

#include "mosaic/distances.hpp"
#include "mosaic/error.hpp"
#include "mosaic/io.hpp"
#include "mosaic/rng.hpp"

namespace mosaic {

namespace {

void require_n_dup(std::size_t n_dup) {
  if (n_dup == 0) throw InvalidArgument("n_dup must be >= 1");
}

FuzzyDupSet start_set(const Canary& canary, std::string algo, nlohmann::json params, std::uint64_t seed) {
  FuzzyDupSet set;
  set.canary_id = canary.id;
  set.ref = canary.tokens;
  set.member = canary.member;
  set.generator = GeneratorInfo{std::move(algo), std::move(params), seed};
  set.dups.push_back(canary.tokens);
  return set;
}

}  // namespace

std::vector<Canary> read_canaries_jsonl(const std::filesystem::path& path) {
  std::vector<Canary> canaries;
  io::for_each_jsonl(path, [&](const nlohmann::json& rec, std::size_t line_no) {
    if (!rec.is_object() || !rec.contains("tokens")) {
      throw FormatError(fmt::format("{}:{}: expected an object with \"tokens\"", path.string(), line_no));
    }
    Canary c;
    c.id = rec.contains("id") ? rec.at("id").get<std::string>() : fmt::format("c{}", canaries.size());
    c.tokens = io::tokens_from_json(rec.at("tokens"), fmt::format("{}:{}", path.string(), line_no));
    if (rec.contains("member")) {
      if (!rec.at("member").is_boolean()) {
        throw FormatError(fmt::format("{}:{}: \"member\" must be a boolean", path.string(), line_no));
      }
      c.member = rec.at("member").get<bool>();
    }
    for (const auto& [key, value] : rec.items()) {
      if (key != "id" && key != "tokens" && key != "member") c.metadata[key] = value;
    }
    canaries.push_back(std::move(c));
  });
  return canaries;
}

void write_canaries_jsonl(std::span<const Canary> canaries, const std::filesystem::path& path) {
  std::string text;
  for (const auto& c : canaries) {
    nlohmann::json rec = {{"id", c.id}, {"tokens", c.tokens}, {"member", c.member}};
    for (const auto& [key, value] : c.metadata.items()) rec[key] = value;
    text += rec.dump();
    text += '\n';
  }
  io::write_text_file(path, text);
}

std::vector<Canary> random_canaries(std::size_t count, std::size_t length, std::uint32_t vocab_size,
                                    std::uint64_t seed) {
  if (vocab_size == 0) throw InvalidArgument("vocab_size must be >= 1");
  Rng rng(seed);
  std::vector<Canary> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i].id = fmt::format("c{}", i);
    out[i].member = false;
    out[i].tokens.resize(length);
    for (auto& t : out[i].tokens) t = static_cast<TokenId>(rng.uniform(vocab_size));
  }
  for (const auto i : rng.sample_indices(count, (count + 1) / 2)) out[i].member = true;
  return out;
}

std::string_view to_string(PositionStrategy s) {
  switch (s) {
    case PositionStrategy::evenly_consistent: return "evenly_consistent";
    case PositionStrategy::random_consistent: return "random_consistent";
    case PositionStrategy::random_inconsistent: return "random_inconsistent";
  }
  return "?";
}

PositionStrategy position_strategy_from_string(std::string_view name) {
  if (name == "evenly_consistent") return PositionStrategy::evenly_consistent;
  if (name == "random_consistent") return PositionStrategy::random_consistent;
  if (name == "random_inconsistent") return PositionStrategy::random_inconsistent;
  throw InvalidArgument(fmt::format("unknown position strategy '{}'", name));
}

std::vector<std::vector<std::size_t>> select_positions(std::size_t length, std::size_t R,
                                                       PositionStrategy strategy, std::size_t n_dup,
                                                       std::uint64_t seed) {
  require_n_dup(n_dup);
  if (R > length) throw InvalidArgument(fmt::format("cannot pick {} positions out of {}", R, length));
  Rng rng(seed);
  const auto draw_subset = [&] {
    auto s = rng.sample_indices(length, R);
    std::sort(s.begin(), s.end());
    return s;
  };
  std::vector<std::vector<std::size_t>> sets(n_dup - 1);
  switch (strategy) {
    case PositionStrategy::evenly_consistent: {
      std::vector<std::size_t> shared;
      for (std::size_t r = 0; r < R; ++r) {
        const std::size_t lo = r * length / R;
        const std::size_t hi = (r + 1) * length / R;
        shared.push_back(lo + static_cast<std::size_t>(rng.uniform(hi - lo)));
      }
      for (auto& s : sets) s = shared;
      break;
    }
    case PositionStrategy::random_consistent: {
      const auto shared = draw_subset();
      for (auto& s : sets) s = shared;
      break;
    }
    case PositionStrategy::random_inconsistent:
      for (auto& s : sets) s = draw_subset();
      break;
  }
  return sets;
}

// ---------------------------------------------------------------------------

HttpCandidateSource::HttpCandidateSource(std::string endpoint, double timeout_seconds)
    : timeout_(timeout_seconds) {
  std::string_view rest = endpoint;
  if (rest.starts_with("http://")) {
    rest.remove_prefix(7);
  } else if (rest.find("://") != std::string_view::npos) {
    throw InvalidArgument(fmt::format("only http:// endpoints are supported, got '{}'", endpoint));
  }
  rest = rest.substr(0, rest.find('/'));
  const auto colon = rest.rfind(':');
  host_ = std::string(rest.substr(0, colon));
  if (colon != std::string_view::npos) {
    try {
      port_ = std::stoi(std::string(rest.substr(colon + 1)));
    } catch (const std::exception&) {
      throw InvalidArgument(fmt::format("bad port in endpoint '{}'", endpoint));
    }
  }
  if (host_.empty()) throw InvalidArgument(fmt::format("bad endpoint '{}'", endpoint));
}

bool HttpCandidateSource::healthy() {
  httplib::Client client(host_, port_);
  client.set_connection_timeout(std::chrono::duration<double>(timeout_));
  client.set_read_timeout(std::chrono::duration<double>(timeout_));
  const auto res = client.Get("/health");
  return res && res->status == 200;
}

std::vector<std::vector<TokenId>> HttpCandidateSource::candidates(TokenSpan tokens,
                                                                  std::span<const std::size_t> positions,
                                                                  std::size_t k) {
  httplib::Client client(host_, port_);
  client.set_connection_timeout(std::chrono::duration<double>(timeout_));
  client.set_read_timeout(std::chrono::duration<double>(timeout_));
  const nlohmann::json request = {{"tokens", TokenSeq(tokens.begin(), tokens.end())},
                                  {"positions", std::vector<std::size_t>(positions.begin(), positions.end())},
                                  {"k", k},
                                  {"exclude_original", true}};
  const auto res = client.Post("/topk", request.dump(), "application/json");
  if (!res) {
    throw Error(fmt::format("top-k provider at {}:{} unreachable: {}", host_, port_, httplib::to_string(res.error())));
  }
  if (res->status != 200) {
    throw Error(fmt::format("top-k provider returned HTTP {}: {}", res->status, res->body));
  }
  try {
    const auto body = nlohmann::json::parse(res->body);
    const auto& lists = body.at("candidates");
    if (lists.size() != positions.size()) {
      throw Error(fmt::format("top-k provider answered {} positions, asked {}", lists.size(), positions.size()));
    }
    std::vector<std::vector<TokenId>> out;
    for (const auto& list : lists) {
      std::vector<TokenId> ids;
      for (const auto& cand : list) {
        const auto& id = cand.at("token_id");
        // Candidates without an id in the target vocabulary cannot be used.
        if (id.is_null()) continue;
        const auto v = id.get<std::int64_t>();
        if (v < 0 || v > std::numeric_limits<TokenId>::max()) continue;
        ids.push_back(static_cast<TokenId>(v));
      }
      out.push_back(std::move(ids));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(fmt::format("malformed top-k response: {}", e.what()));
  }
}

// ---------------------------------------------------------------------------

FuzzyDupSet gen_replace(const Canary& canary, const ReplaceConfig& config, std::size_t n_dup,
                        std::uint64_t seed, CandidateSource* source) {
  require_n_dup(n_dup);
  const auto& ref = canary.tokens;
  if (config.R > ref.size()) {
    throw InvalidArgument(fmt::format("R = {} exceeds the canary length {}", config.R, ref.size()));
  }
  if (config.k == 0) throw InvalidArgument("k must be >= 1");

  nlohmann::json params = {{"R", config.R},
                           {"strategy", to_string(config.strategy)},
                           {"n_dup", n_dup}};
  if (config.provider == ProviderKind::uniform_vocab) {
    params["provider"] = "uniform_vocab";
    params["vocab_size"] = config.vocab_size;
  } else {
    params["provider"] = "external_topk";
    params["k"] = config.k;
    params["endpoint"] = config.endpoint;
  }
  auto set = start_set(canary, "replace", params, seed);
  const auto positions = select_positions(ref.size(), config.R, config.strategy, n_dup, derive_seed(seed, 0));
  Rng rng(derive_seed(seed, 1));

  if (config.provider == ProviderKind::uniform_vocab) {
    if (config.vocab_size < 2) throw InvalidArgument("uniform replacement needs vocab_size >= 2");
    for (const auto t : ref) {
      if (t >= config.vocab_size) {
        throw InvalidArgument(fmt::format("canary token {} outside vocab_size {}", t, config.vocab_size));
      }
    }
    for (const auto& pos : positions) {
      TokenSeq dup = ref;
      for (const auto p : pos) {
        auto v = static_cast<TokenId>(rng.uniform(config.vocab_size - 1));
        if (v >= ref[p]) ++v;
        dup[p] = v;
      }
      set.dups.push_back(std::move(dup));
    }
    return set;
  }

  if (source == nullptr) throw InvalidArgument("external_topk replacement needs a candidate source");
  std::vector<std::size_t> all;
  for (const auto& pos : positions) all.insert(all.end(), pos.begin(), pos.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  std::map<std::size_t, std::vector<TokenId>> pool;
  if (!all.empty()) {
    const auto lists = source->candidates(ref, all, config.k);
    if (lists.size() != all.size()) throw Error("candidate source answered the wrong number of positions");
    for (std::size_t i = 0; i < all.size(); ++i) {
      std::vector<TokenId> usable;
      for (const auto id : lists[i]) {
        if (id != ref[all[i]] && usable.size() < config.k) usable.push_back(id);
      }
      if (usable.empty()) {
        throw Error(fmt::format("no replacement other than the original token at position {}", all[i]));
      }
      pool.emplace(all[i], std::move(usable));
    }
  }
  for (const auto& pos : positions) {
    TokenSeq dup = ref;
    for (const auto p : pos) {
      const auto& cands = pool.at(p);
      dup[p] = cands[rng.uniform(cands.size())];
    }
    set.dups.push_back(std::move(dup));
  }
  return set;
}

FuzzyDupSet gen_insert(const Canary& canary, std::size_t n, std::optional<std::size_t> x_insert,
                       std::uint32_t vocab_size, std::size_t n_dup, std::uint64_t seed) {
  require_n_dup(n_dup);
  const auto& ref = canary.tokens;
  if (n == 0 || n > ref.size()) {
    throw InvalidArgument(fmt::format("gram size {} must lie in 1..{}", n, ref.size()));
  }
  if (vocab_size == 0) throw InvalidArgument("vocab_size must be >= 1");
  nlohmann::json params = {{"n", n}, {"vocab_size", vocab_size}, {"n_dup", n_dup}};
  if (x_insert) {
    params["x_insert"] = *x_insert;
  } else {
    params["x_insert"] = "inf";
  }
  auto set = start_set(canary, "insert", params, seed);
  if (!x_insert) {
    set.scatter_n = n;
    for (std::size_t j = 1; j < n_dup; ++j) set.dups.push_back(ref);
    return set;
  }
  Rng rng(seed);
  const std::size_t grams = (ref.size() + n - 1) / n;
  for (std::size_t j = 1; j < n_dup; ++j) {
    TokenSeq dup;
    dup.reserve(ref.size() + *x_insert * (grams - 1));
    for (std::size_t c = 0; c < grams; ++c) {
      if (c > 0) {
        for (std::size_t x = 0; x < *x_insert; ++x) dup.push_back(static_cast<TokenId>(rng.uniform(vocab_size)));
      }
      const auto begin = ref.begin() + static_cast<std::ptrdiff_t>(c * n);
      const auto end = ref.begin() + static_cast<std::ptrdiff_t>(std::min(ref.size(), (c + 1) * n));
      dup.insert(dup.end(), begin, end);
    }
    set.dups.push_back(std::move(dup));
  }
  return set;
}

std::vector<std::size_t> induced_position_permutation(std::span<const std::size_t> gram_order,
                                                      std::size_t n, std::size_t length) {
  std::vector<std::size_t> perm;
  perm.reserve(length);
  for (const auto g : gram_order) {
    for (std::size_t p = g * n; p < std::min(length, (g + 1) * n); ++p) perm.push_back(p);
  }
  if (perm.size() != length) throw InvalidArgument("gram order does not cover the sequence");
  return perm;
}

FuzzyDupSet gen_shuffle(const Canary& canary, std::size_t n, double target_tau, double tolerance,
                        std::size_t n_dup, std::uint64_t seed, std::size_t max_attempts) {
  require_n_dup(n_dup);
  const auto& ref = canary.tokens;
  const std::size_t L = ref.size();
  if (L < 2) throw InvalidArgument("shuffling needs at least 2 tokens");
  if (n == 0 || n > L) throw InvalidArgument(fmt::format("gram size {} must lie in 1..{}", n, L));
  if (!(target_tau >= 0.0 && target_tau <= 1.0)) throw InvalidArgument("target tau must lie in [0, 1]");
  if (!(tolerance >= 0.0)) throw InvalidArgument("tolerance must be >= 0");
  if (max_attempts == 0) throw InvalidArgument("max_attempts must be >= 1");

  auto set = start_set(canary, "shuffle",
                       {{"n", n}, {"tau", target_tau}, {"tolerance", tolerance},
                        {"max_attempts", max_attempts}, {"n_dup", n_dup}},
                       seed);
  set.achieved_tau.push_back(0.0);

  const std::size_t C = (L + n - 1) / n;
  std::vector<std::uint64_t> size(C);
  for (std::size_t g = 0; g < C; ++g) size[g] = std::min(L, (g + 1) * n) - g * n;
  std::uint64_t max_inv = 0;
  {
    std::uint64_t before = 0;
    for (std::size_t g = 0; g < C; ++g) {
      max_inv += before * size[g];
      before += size[g];
    }
  }
  const double pairs = static_cast<double>(L) * static_cast<double>(L - 1) / 2.0;
  const auto within = [&](std::uint64_t inv) {
    return std::abs(static_cast<double>(inv) / pairs - target_tau) <= tolerance + 1e-12;
  };
  const bool from_reversal = target_tau > 0.5;
  const std::size_t step_cap = C * C * C + 16;

  for (std::size_t j = 1; j < n_dup; ++j) {
    Rng rng(derive_seed(seed, j));
    std::vector<std::size_t> order;
    bool found = false;
    for (std::size_t attempt = 0; attempt < max_attempts && !found; ++attempt) {
      order.resize(C);
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::uint64_t inv = 0;
      if (from_reversal) {
        std::reverse(order.begin(), order.end());
        inv = max_inv;
      }
      found = within(inv);
      for (std::size_t s = 0; s < step_cap && !found && C >= 2; ++s) {
        const auto i = static_cast<std::size_t>(rng.uniform(C - 1));
        const auto a = order[i];
        const auto b = order[i + 1];
        if (a < b) {
          inv += size[a] * size[b];
        } else {
          inv -= size[a] * size[b];
        }
        std::swap(order[i], order[i + 1]);
        found = within(inv);
      }
    }
    if (!found) {
      throw Error(fmt::format("could not reach tau {} +- {} with {}-grams after {} attempts", target_tau,
                              tolerance, n, max_attempts));
    }
    const auto perm = induced_position_permutation(order, n, L);
    TokenSeq dup;
    dup.reserve(L);
    for (const auto p : perm) dup.push_back(ref[p]);
    set.dups.push_back(std::move(dup));
    set.achieved_tau.push_back(kendall_tau(perm));
  }
  return set;
}

std::string_view to_string(RemoveMode m) {
  switch (m) {
    case RemoveMode::prefix: return "prefix";
    case RemoveMode::suffix: return "suffix";
    case RemoveMode::random_even: return "random_even";
  }
  return "?";
}

RemoveMode remove_mode_from_string(std::string_view name) {
  if (name == "prefix") return RemoveMode::prefix;
  if (name == "suffix") return RemoveMode::suffix;
  if (name == "random_even") return RemoveMode::random_even;
  throw InvalidArgument(fmt::format("unknown remove mode '{}'", name));
}

FuzzyDupSet gen_remove(const Canary& canary, std::size_t R, RemoveMode mode, std::size_t n_dup,
                       std::uint64_t seed) {
  require_n_dup(n_dup);
  const auto& ref = canary.tokens;
  if (R >= ref.size() && !(R == 0 && ref.empty())) {
    throw InvalidArgument(fmt::format("cannot remove {} of {} tokens", R, ref.size()));
  }
  auto set = start_set(canary, "remove", {{"R", R}, {"mode", to_string(mode)}, {"n_dup", n_dup}}, seed);
  TokenSeq dup;
  switch (mode) {
    case RemoveMode::prefix:
      dup.assign(ref.begin() + static_cast<std::ptrdiff_t>(R), ref.end());
      break;
    case RemoveMode::suffix:
      dup.assign(ref.begin(), ref.end() - static_cast<std::ptrdiff_t>(R));
      break;
    case RemoveMode::random_even: {
      const auto drop = select_positions(ref.size(), R, PositionStrategy::evenly_consistent, 2, seed)[0];
      std::size_t next = 0;
      for (std::size_t i = 0; i < ref.size(); ++i) {
        if (next < drop.size() && drop[next] == i) {
          ++next;
          continue;
        }
        dup.push_back(ref[i]);
      }
      break;
    }
  }
  for (std::size_t j = 1; j < n_dup; ++j) set.dups.push_back(dup);
  return set;
}

FuzzyDupSet generate(const Canary& canary, std::string_view algo, const nlohmann::json& params,
                     std::uint64_t seed, CandidateSource* source) {
  try {
    const std::size_t n_dup = params.value("n_dup", std::size_t{10});
    if (algo == "replace") {
      ReplaceConfig c;
      c.R = params.value("R", c.R);
      c.strategy = position_strategy_from_string(params.value("strategy", std::string(to_string(c.strategy))));
      const auto provider = params.value("provider", std::string("uniform_vocab"));
      if (provider == "uniform_vocab") {
        c.provider = ProviderKind::uniform_vocab;
      } else if (provider == "external_topk") {
        c.provider = ProviderKind::external_topk;
      } else {
        throw InvalidArgument(fmt::format("unknown provider '{}'", provider));
      }
      c.vocab_size = params.value("vocab_size", c.vocab_size);
      c.k = params.value("k", static_cast<std::size_t>(c.vocab_size));
      c.endpoint = params.value("endpoint", std::string());
      std::unique_ptr<HttpCandidateSource> http;
      if (c.provider == ProviderKind::external_topk && source == nullptr) {
        if (c.endpoint.empty()) throw InvalidArgument("external_topk needs an endpoint");
        http = std::make_unique<HttpCandidateSource>(c.endpoint);
        source = http.get();
      }
      return gen_replace(canary, c, n_dup, seed, source);
    }
    if (algo == "insert") {
      std::optional<std::size_t> x;
      const auto& jx = params.at("x_insert");
      if (jx.is_string()) {
        const auto s = jx.get<std::string>();
        if (s != "inf" && s != "infinity") throw InvalidArgument(fmt::format("bad x_insert '{}'", s));
      } else {
        x = jx.get<std::size_t>();
      }
      return gen_insert(canary, params.at("n").get<std::size_t>(), x, params.value("vocab_size", 50257u), n_dup,
                        seed);
    }
    if (algo == "shuffle") {
      return gen_shuffle(canary, params.at("n").get<std::size_t>(), params.at("tau").get<double>(),
                         params.value("tolerance", 0.01), n_dup, seed,
                         params.value("max_attempts", std::size_t{100}));
    }
    if (algo == "remove") {
      return gen_remove(canary, params.at("R").get<std::size_t>(),
                        remove_mode_from_string(params.value("mode", std::string("suffix"))), n_dup, seed);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(fmt::format("bad {} parameters: {}", algo, e.what()));
  }
  throw InvalidArgument(fmt::format("unknown generator '{}'", algo));
}

// ---------------------------------------------------------------------------

void write_dups_jsonl(std::span<const FuzzyDupSet> sets, std::ostream& out) {
  for (const auto& set : sets) {
    for (std::size_t j = 0; j < set.dups.size(); ++j) {
      nlohmann::json rec = {
          {"canary_id", set.canary_id},
          {"dup_index", j},
          {"tokens", set.dups[j]},
          {"member", set.member},
          {"generator",
           {{"algo", set.generator.algo}, {"params", set.generator.params}, {"seed", set.generator.seed}}},
      };
      if (j < set.achieved_tau.size()) rec["achieved_tau"] = set.achieved_tau[j];
      if (set.scatter_n) rec["scatter_n"] = *set.scatter_n;
      out << rec.dump() << '\n';
    }
  }
}

void write_dups_jsonl(std::span<const FuzzyDupSet> sets, const std::filesystem::path& path) {
  std::ostringstream out;
  write_dups_jsonl(sets, out);
  io::write_text_file(path, out.str());
}

std::vector<FuzzyDupSet> read_dups_jsonl(const std::filesystem::path& path) {
  std::vector<FuzzyDupSet> sets;
  std::map<std::string, std::size_t> index;
  std::vector<std::map<std::size_t, std::pair<TokenSeq, std::optional<double>>>> pending;
  io::for_each_jsonl(path, [&](const nlohmann::json& rec, std::size_t line_no) {
    const auto where = fmt::format("{}:{}", path.string(), line_no);
    try {
      const auto id = rec.at("canary_id").get<std::string>();
      auto [it, fresh] = index.emplace(id, sets.size());
      if (fresh) {
        FuzzyDupSet set;
        set.canary_id = id;
        set.member = rec.value("member", true);
        if (rec.contains("generator")) {
          const auto& g = rec.at("generator");
          set.generator.algo = g.value("algo", std::string());
          set.generator.params = g.value("params", nlohmann::json::object());
          set.generator.seed = g.value("seed", std::uint64_t{0});
        }
        if (rec.contains("scatter_n")) set.scatter_n = rec.at("scatter_n").get<std::size_t>();
        sets.push_back(std::move(set));
        pending.emplace_back();
      }
      const auto j = rec.at("dup_index").get<std::size_t>();
      std::optional<double> tau;
      if (rec.contains("achieved_tau")) tau = rec.at("achieved_tau").get<double>();
      auto tokens = io::tokens_from_json(rec.at("tokens"), where);
      if (!pending[it->second].emplace(j, std::make_pair(std::move(tokens), tau)).second) {
        throw FormatError(fmt::format("{}: duplicate dup_index {} for {}", where, j, id));
      }
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(fmt::format("{}: {}", where, e.what()));
    }
  });
  for (std::size_t s = 0; s < sets.size(); ++s) {
    std::size_t expect = 0;
    bool any_tau = false;
    for (auto& [j, entry] : pending[s]) {
      if (j != expect++) {
        throw FormatError(fmt::format("{}: dup indices of {} are not 0..n-1", path.string(), sets[s].canary_id));
      }
      sets[s].dups.push_back(std::move(entry.first));
      any_tau = any_tau || entry.second.has_value();
    }
    if (any_tau) {
      for (auto& [j, entry] : pending[s]) sets[s].achieved_tau.push_back(entry.second.value_or(0.0));
    }
    sets[s].ref = sets[s].dups.front();
  }
  return sets;
}

// ---------------------------------------------------------------------------

InjectionResult inject_into_corpus(const Corpus& corpus, std::span<const FuzzyDupSet> sets,
                                   std::uint64_t seed) {
  struct Pending {
    std::size_t original_offset;
    TokenSpan tokens;
    std::size_t placement;
  };
  const std::size_t D = corpus.docs.size();
  InjectionResult result;
  std::vector<std::vector<Pending>> per_doc(D);

  // Slot s of the whole corpus: doc d owns len(d) + 1 insertion points.
  std::vector<std::size_t> slot_start(D + 1, 0);
  for (std::size_t d = 0; d < D; ++d) slot_start[d + 1] = slot_start[d] + corpus.docs[d].size() + 1;

  const auto queue = [&](std::size_t doc, std::size_t offset, TokenSpan tokens, Placement p) {
    p.doc_index = doc;
    p.length = tokens.size();
    per_doc[doc].push_back(Pending{offset, tokens, result.placements.size()});
    result.placements.push_back(std::move(p));
  };

  for (std::size_t si = 0; si < sets.size(); ++si) {
    const auto& set = sets[si];
    if (!set.member || set.dups.empty()) continue;
    if (D == 0) throw InvalidArgument("cannot inject into an empty corpus");
    Rng rng(derive_seed(seed, si));
    const auto doc = static_cast<std::size_t>(rng.uniform(D));
    const std::size_t whole = set.scatter_n ? 1 : set.dups.size();
    for (std::size_t j = 0; j < whole; ++j) {
      const auto off = static_cast<std::size_t>(rng.uniform(corpus.docs[doc].size() + 1));
      queue(doc, off, set.dups[j], Placement{set.canary_id, j, 0, 0, 0, 0});
    }
    if (set.scatter_n) {
      const std::size_t n = *set.scatter_n;
      if (n == 0) throw InvalidArgument("scatter gram size must be >= 1");
      for (std::size_t j = 1; j < set.dups.size(); ++j) {
        const TokenSpan dup = set.dups[j];
        for (std::size_t g = 0; g * n < dup.size(); ++g) {
          const auto slot = static_cast<std::size_t>(rng.uniform(slot_start[D]));
          const auto d = static_cast<std::size_t>(
              std::upper_bound(slot_start.begin(), slot_start.end(), slot) - slot_start.begin() - 1);
          queue(d, slot - slot_start[d], dup.subspan(g * n, std::min(n, dup.size() - g * n)),
                Placement{set.canary_id, j, g, 0, 0, 0});
        }
      }
    }
  }

  result.corpus = corpus;
  for (std::size_t d = 0; d < D; ++d) {
    auto& pending = per_doc[d];
    if (pending.empty()) continue;
    std::stable_sort(pending.begin(), pending.end(),
                     [](const Pending& a, const Pending& b) { return a.original_offset < b.original_offset; });
    const auto& original = corpus.docs[d];
    TokenSeq merged;
    std::size_t extra = 0;
    for (const auto& p : pending) extra += p.tokens.size();
    merged.reserve(original.size() + extra);
    std::size_t consumed = 0;
    for (const auto& p : pending) {
      merged.insert(merged.end(), original.begin() + static_cast<std::ptrdiff_t>(consumed),
                    original.begin() + static_cast<std::ptrdiff_t>(p.original_offset));
      consumed = p.original_offset;
      result.placements[p.placement].offset = merged.size();
      merged.insert(merged.end(), p.tokens.begin(), p.tokens.end());
    }
    merged.insert(merged.end(), original.begin() + static_cast<std::ptrdiff_t>(consumed), original.end());
    result.corpus.docs[d] = std::move(merged);
  }
  return result;
}

}  // namespace mosaic
