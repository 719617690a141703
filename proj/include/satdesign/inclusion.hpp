#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "satdesign/core.hpp"
#include "satdesign/design.hpp"
#include "satdesign/exposure.hpp"
#include "satdesign/network.hpp"

namespace satdesign {

inline constexpr std::size_t kNumCellPairs = kNumCells * kNumCells;
// Joint probabilities for a unit pair (i < j), indexed [cell_i * 8 + cell_j].
using PairArray = std::array<double, kNumCellPairs>;
using UnitPair = std::pair<std::uint32_t, std::uint32_t>;

enum class InclusionMode { MonteCarlo, Exact };

struct InclusionMeta {
  InclusionMode mode = InclusionMode::Exact;
  std::uint64_t draws = 0;
  std::uint64_t seed = 0;
  std::size_t order = 1;  // dependency order m of the stored pairs
  ExposureMode exposure_mode = ExposureMode::Full;
  std::string policy_digest;
  std::string exposure_digest;
  std::string network_digest;
};

// First-order probabilities pi_i(a,s,h) for every unit and joint
// probabilities for dependency-adjacent pairs. Pairs that are not stored are
// independent: their joint probability is the product of the marginals.
class InclusionTable {
 public:
  InclusionTable() = default;
  InclusionTable(std::vector<std::string> unit_ids,
                 std::vector<CellArray> first, std::vector<UnitPair> pairs,
                 std::vector<PairArray> second, InclusionMeta meta);

  std::size_t size() const { return first_.size(); }
  const std::vector<std::string>& unit_ids() const { return unit_ids_; }
  const InclusionMeta& meta() const { return meta_; }

  double first(std::size_t i, std::size_t cell) const { return first_[i][cell]; }
  const CellArray& first_row(std::size_t i) const { return first_[i]; }

  // pr(d_i = cell_i, d_j = cell_j).
  double joint(std::size_t i, std::size_t cell_i, std::size_t j,
               std::size_t cell_j) const;

  const std::vector<UnitPair>& pairs() const { return pairs_; }
  const PairArray& pair_row(std::size_t p) const { return second_[p]; }
  std::optional<std::size_t> pair_index(std::size_t i, std::size_t j) const;

  // Sub-table over the listed units (in the given order).
  InclusionTable restrict_to(std::span<const std::size_t> keep) const;

  // Throws DigestMismatchError naming the first differing component.
  void require_compatible(const std::string& policy_digest,
                          const std::string& exposure_digest,
                          const std::string& network_digest,
                          std::size_t order) const;

 private:
  static std::uint64_t key(std::size_t i, std::size_t j) {
    return (static_cast<std::uint64_t>(i) << 32) | j;
  }

  std::vector<std::string> unit_ids_;
  std::vector<CellArray> first_;
  std::vector<UnitPair> pairs_;
  std::vector<PairArray> second_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
  InclusionMeta meta_;
};

struct McOptions {
  unsigned threads = 0;  // 0 = hardware concurrency
};

// Frequencies over draws 0..B-1 of the (seed, draw) assignment stream.
// Second-order tallies cover graph->pairs; pass nullptr for first order only.
// Counts are integers merged per worker, so the result does not depend on
// the thread count.
InclusionTable estimate_inclusion_mc(const SaturationPolicy& policy,
                                     const Network& network,
                                     const DependencyGraph* graph,
                                     const ExposureConfig& cfg,
                                     std::uint64_t draws, std::uint64_t seed,
                                     McOptions options = {});

// Exact probabilities by enumerating the policy support.
InclusionTable exact_inclusion(const SaturationPolicy& policy,
                               const Network& network,
                               const DependencyGraph* graph,
                               const ExposureConfig& cfg,
                               std::uint64_t cap = kDefaultEnumerationCap);

// ---------------------------------------------------------------------------
// Policy weights gamma_i(a,s,h).
// ---------------------------------------------------------------------------
enum class WeightKind { DE, WIE, BIE };

std::string to_string(WeightKind kind);
WeightKind parse_weight_kind(const std::string& text);

struct WeightScheme {
  WeightKind kind = WeightKind::DE;
  std::vector<CellArray> gamma;
  // 1 where the conditioning event had zero probability (gamma set to 0).
  std::vector<std::array<std::uint8_t, kNumCells>> zero_conditioning;
  std::string policy_digest;
  std::string exposure_digest;
  std::string network_digest;
  std::uint64_t draws = 0;
  std::uint64_t seed = 0;

  std::size_t size() const { return gamma.size(); }
  double at(std::size_t i, std::size_t cell) const { return gamma[i][cell]; }
  std::size_t flagged_cells() const;
  WeightScheme restrict_to(std::span<const std::size_t> keep) const;
};

struct PolicyWeights {
  WeightScheme de;
  WeightScheme wie;
  WeightScheme bie;

  const WeightScheme& get(WeightKind kind) const;
};

// Conditional probabilities from a table's first-order cells:
//   DE : pr(S=s, H=h | A=a)   WIE: pr(H=h | A=a, S=s)   BIE: pr(S=s | A=a, H=h)
WeightScheme derive_policy_weights(const InclusionTable& table, WeightKind kind);
PolicyWeights derive_policy_weights(const InclusionTable& table);

// Weights for a (possibly counterfactual) policy psi, from B draws of psi.
WeightScheme estimate_policy_weights(const SaturationPolicy& psi,
                                     const Network& network,
                                     const ExposureConfig& cfg, WeightKind kind,
                                     std::uint64_t draws, std::uint64_t seed,
                                     McOptions options = {});

// ---------------------------------------------------------------------------
// Positivity diagnostics.
// ---------------------------------------------------------------------------
struct PositivityViolation {
  std::size_t unit = 0;
  Cell cell;
  double prob = 0.0;
  bool structural_zero = false;
};

struct CellSummary {
  Cell cell;
  double min = 0, q05 = 0, q25 = 0, median = 0, mean = 0, q75 = 0, max = 0;
  std::size_t below_floor = 0;
  std::size_t zeros = 0;
  // max_i (1/pi_i) / sum_i (1/pi_i) over units with pi_i > 0.
  double max_weight_share = 0.0;
};

struct PositivityReport {
  double floor = 0.0;
  std::vector<PositivityViolation> violations;
  std::vector<CellSummary> cells;
  // Means over units of the marginal probabilities.
  double mean_pr_a1 = 0.0;
  double mean_pr_s1 = 0.0;
  double mean_pr_h1 = 0.0;
  // max_i |sum_cells pi_i - 1|
  double max_row_sum_error = 0.0;
};

PositivityReport positivity_report(const InclusionTable& table, double floor);

}  // namespace satdesign
