#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mosaic/corpus.hpp"

namespace mosaic {

struct Canary {
  std::string id;
  TokenSeq tokens;
  bool member = true;
  /// Free-form provenance fields carried through from the input record.
  nlohmann::json metadata = nlohmann::json::object();
};

/// {"id", "tokens", "member"?, ...}; unknown fields land in metadata.
std::vector<Canary> read_canaries_jsonl(const std::filesystem::path& path);
void write_canaries_jsonl(std::span<const Canary> canaries, const std::filesystem::path& path);

/// Seeded uniform-random canaries; members are a random half (rounded up).
std::vector<Canary> random_canaries(std::size_t count, std::size_t length, std::uint32_t vocab_size,
                                    std::uint64_t seed);

enum class PositionStrategy { evenly_consistent, random_consistent, random_inconsistent };

std::string_view to_string(PositionStrategy s);
PositionStrategy position_strategy_from_string(std::string_view name);

/// Position sets (each sorted) for the n_dup - 1 modified duplicates.
/// evenly_consistent draws one position from each segment
/// [floor(r*L/R), floor((r+1)*L/R)) and shares it; random_consistent shares
/// one uniform R-subset; random_inconsistent draws a fresh subset per set.
std::vector<std::vector<std::size_t>> select_positions(std::size_t length, std::size_t R,
                                                       PositionStrategy strategy, std::size_t n_dup,
                                                       std::uint64_t seed);

/// Supplies replacement candidates for masked positions.
class CandidateSource {
 public:
  virtual ~CandidateSource() = default;
  /// For each position, up to k candidate token ids ordered by preference.
  virtual std::vector<std::vector<TokenId>> candidates(TokenSpan tokens,
                                                       std::span<const std::size_t> positions,
                                                       std::size_t k) = 0;
};

/// Client for the masked-LM top-k service (POST /topk, GET /health).
class HttpCandidateSource : public CandidateSource {
 public:
  /// `endpoint` like "http://127.0.0.1:8000".
  explicit HttpCandidateSource(std::string endpoint, double timeout_seconds = 30.0);

  bool healthy();
  std::vector<std::vector<TokenId>> candidates(TokenSpan tokens, std::span<const std::size_t> positions,
                                               std::size_t k) override;

 private:
  std::string host_;
  int port_ = 80;
  double timeout_;
};

enum class ProviderKind { uniform_vocab, external_topk };

struct ReplaceConfig {
  std::size_t R = 10;
  PositionStrategy strategy = PositionStrategy::evenly_consistent;
  ProviderKind provider = ProviderKind::uniform_vocab;
  std::uint32_t vocab_size = 50257;
  std::size_t k = 50257;
  std::string endpoint;
};

struct GeneratorInfo {
  std::string algo;
  nlohmann::json params = nlohmann::json::object();
  std::uint64_t seed = 0;
};

struct FuzzyDupSet {
  std::string canary_id;
  TokenSeq ref;
  bool member = true;
  /// dups[0] is always the exact reference.
  std::vector<TokenSeq> dups;
  GeneratorInfo generator;
  /// Shuffle only: achieved tau per duplicate.
  std::vector<double> achieved_tau;
  /// Insert with x_insert = infinity: duplicates past the first are split into
  /// grams of this size and scattered independently on injection.
  std::optional<std::size_t> scatter_n;
};

FuzzyDupSet gen_replace(const Canary& canary, const ReplaceConfig& config, std::size_t n_dup,
                        std::uint64_t seed, CandidateSource* source = nullptr);

/// C_n = ceil(|ref| / n) grams with C_n - 1 gaps of x_insert random tokens,
/// resampled per duplicate. No x_insert means scatter mode.
FuzzyDupSet gen_insert(const Canary& canary, std::size_t n, std::optional<std::size_t> x_insert,
                       std::uint32_t vocab_size, std::size_t n_dup, std::uint64_t seed);

/// Position permutation of the gram order: perm[i] is the reference position
/// of the token at duplicate position i.
std::vector<std::size_t> induced_position_permutation(std::span<const std::size_t> gram_order,
                                                      std::size_t n, std::size_t length);

/// Random walk of adjacent gram swaps per duplicate until the position Kendall
/// tau lies within tolerance of target_tau. Each attempt is capped; throws
/// once max_attempts walks fail.
FuzzyDupSet gen_shuffle(const Canary& canary, std::size_t n, double target_tau, double tolerance,
                        std::size_t n_dup, std::uint64_t seed, std::size_t max_attempts = 100);

enum class RemoveMode { prefix, suffix, random_even };

std::string_view to_string(RemoveMode m);
RemoveMode remove_mode_from_string(std::string_view name);

FuzzyDupSet gen_remove(const Canary& canary, std::size_t R, RemoveMode mode, std::size_t n_dup,
                       std::uint64_t seed);

/// Runs one generator from a JSON parameter block; `algo` is replace, insert,
/// shuffle or remove. n_dup comes from params (default 10).
FuzzyDupSet generate(const Canary& canary, std::string_view algo, const nlohmann::json& params,
                     std::uint64_t seed, CandidateSource* source = nullptr);

/// One line per duplicate: {canary_id, dup_index, tokens, member, generator,
/// achieved_tau?, scatter_n?}.
void write_dups_jsonl(std::span<const FuzzyDupSet> sets, std::ostream& out);
void write_dups_jsonl(std::span<const FuzzyDupSet> sets, const std::filesystem::path& path);
std::vector<FuzzyDupSet> read_dups_jsonl(const std::filesystem::path& path);

struct Placement {
  std::string canary_id;
  std::size_t dup_index = 0;
  /// Gram index inside a scattered duplicate, otherwise 0.
  std::size_t piece = 0;
  std::size_t doc_index = 0;
  /// Offset in the output document.
  std::size_t offset = 0;
  std::size_t length = 0;
};

struct InjectionResult {
  Corpus corpus;
  std::vector<Placement> placements;
};

/// Inserts every member set's duplicates at seeded offsets of one seeded
/// document (scattered grams go anywhere in the corpus). Non-members are
/// skipped. Throws if there is something to inject into an empty corpus.
InjectionResult inject_into_corpus(const Corpus& corpus, std::span<const FuzzyDupSet> sets,
                                   std::uint64_t seed);

}  // namespace mosaic
