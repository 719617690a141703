#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "satdesign/network.hpp"

namespace satdesign {

struct WithinRule {
  enum class Kind { FixedFraction, Bernoulli };
  Kind kind = Kind::FixedFraction;
  double value = 0.5;

  // Treated count for a FixedFraction rule on a cluster of size n
  // (round half up).
  std::size_t fixed_count(std::size_t n) const;
};

struct SaturationLevel {
  std::string label;
  double prob = 1.0;
  WithinRule rule;
};

// Two-stage law: every cluster independently draws a level, then treats
// units within the cluster according to that level's rule.
struct SaturationPolicy {
  std::vector<SaturationLevel> levels;

  void validate() const;
  std::string canonical() const;
  std::string digest() const;
};

struct AssignmentVector {
  std::vector<std::uint8_t> treatment;
  // Index into SaturationPolicy::levels per cluster; empty when unknown.
  std::vector<std::uint32_t> cluster_level;
};

// Draw number `draw` of the stream keyed by `seed`. Cluster c uses the random
// stream (seed, draw, c) and nothing else, so draws can be generated in any
// order or in parallel with identical results.
AssignmentVector sample_assignment(const SaturationPolicy& policy,
                                   const Network& network, std::uint64_t seed,
                                   std::uint64_t draw = 0);

// Allocation-free variant for hot loops. `scratch` is resized as needed.
void sample_assignment_into(const SaturationPolicy& policy,
                            const Network& network, std::uint64_t seed,
                            std::uint64_t draw, std::span<std::uint8_t> out,
                            std::vector<std::size_t>& scratch);

// Cluster/level combinations whose FixedFraction count is 0 or the full
// cluster (legal, but a positivity hazard for exposure cells).
std::vector<std::string> policy_hazards(const SaturationPolicy& policy,
                                        const Network& network);

struct WeightedAssignment {
  AssignmentVector assignment;
  double probability = 0.0;
};

inline constexpr std::uint64_t kDefaultEnumerationCap = 1'000'000;

// Exact support of the policy with probabilities. Refuses (EnumerationCapError)
// when the support exceeds `cap` vectors.
std::vector<WeightedAssignment> enumerate_assignments(
    const SaturationPolicy& policy, const Network& network,
    std::uint64_t cap = kDefaultEnumerationCap);

// Number of support vectors, saturating at UINT64_MAX.
std::uint64_t policy_support_size(const SaturationPolicy& policy,
                                  const Network& network);

}  // namespace satdesign
