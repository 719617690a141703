#include "satdesign/design.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "satdesign/core.hpp"

namespace satdesign {

std::size_t WithinRule::fixed_count(std::size_t n) const {
  // The small epsilon keeps exact halves (e.g. 0.5 * 5) from rounding down
  // after floating-point error.
  const double raw = std::floor(value * static_cast<double>(n) + 0.5 + 1e-9);
  return static_cast<std::size_t>(
      std::clamp(raw, 0.0, static_cast<double>(n)));
}

void SaturationPolicy::validate() const {
  if (levels.empty()) throw ValidationError("policy has no saturation levels");
  double total = 0.0;
  for (const auto& lvl : levels) {
    if (!(lvl.prob >= 0.0 && lvl.prob <= 1.0))
      throw ValidationError("level '" + lvl.label + "' probability outside [0,1]");
    if (!(lvl.rule.value >= 0.0 && lvl.rule.value <= 1.0))
      throw ValidationError("level '" + lvl.label + "' rule value outside [0,1]");
    total += lvl.prob;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw ValidationError("level probabilities sum to " + format_double(total) +
                          ", expected 1");
}

std::string SaturationPolicy::canonical() const {
  std::ostringstream os;
  os << "policy";
  for (const auto& lvl : levels) {
    os << '|' << lvl.label << ':' << format_double(lvl.prob) << ':'
       << (lvl.rule.kind == WithinRule::Kind::FixedFraction ? "fixed" : "bernoulli")
       << ':' << format_double(lvl.rule.value);
  }
  return os.str();
}

std::string SaturationPolicy::digest() const { return digest_of(canonical()); }

namespace {

std::size_t pick_level(const SaturationPolicy& policy, double u) {
  double cum = 0.0;
  for (std::size_t l = 0; l + 1 < policy.levels.size(); ++l) {
    cum += policy.levels[l].prob;
    if (u < cum) return l;
  }
  // Skip trailing zero-probability levels.
  std::size_t l = policy.levels.size() - 1;
  while (l > 0 && policy.levels[l].prob == 0.0) --l;
  return l;
}

void assign_cluster(const SaturationLevel& level,
                    const std::vector<std::size_t>& members,
                    RandomStream& rng, std::span<std::uint8_t> out,
                    std::vector<std::size_t>& scratch) {
  if (level.rule.kind == WithinRule::Kind::Bernoulli) {
    for (std::size_t i : members)
      out[i] = rng.uniform() < level.rule.value ? 1 : 0;
    return;
  }
  const std::size_t n = members.size();
  const std::size_t t = level.rule.fixed_count(n);
  // Partial Fisher-Yates: the first t slots become the treated set.
  scratch.assign(members.begin(), members.end());
  for (std::size_t k = 0; k < t; ++k) {
    const std::size_t pick = k + static_cast<std::size_t>(rng.below(n - k));
    std::swap(scratch[k], scratch[pick]);
  }
  for (std::size_t k = 0; k < n; ++k) out[scratch[k]] = k < t ? 1 : 0;
}

}  // namespace

void sample_assignment_into(const SaturationPolicy& policy,
                            const Network& network, std::uint64_t seed,
                            std::uint64_t draw, std::span<std::uint8_t> out,
                            std::vector<std::size_t>& scratch) {
  for (std::size_t c = 0; c < network.num_clusters(); ++c) {
    RandomStream rng(seed, draw, c);
    const std::size_t l = pick_level(policy, rng.uniform());
    assign_cluster(policy.levels[l], network.members[c], rng, out, scratch);
  }
}

AssignmentVector sample_assignment(const SaturationPolicy& policy,
                                   const Network& network, std::uint64_t seed,
                                   std::uint64_t draw) {
  AssignmentVector result;
  result.treatment.assign(network.size(), 0);
  result.cluster_level.resize(network.num_clusters());
  std::vector<std::size_t> scratch;
  for (std::size_t c = 0; c < network.num_clusters(); ++c) {
    if (network.members[c].empty())
      throw ValidationError("cluster '" + network.cluster_ids[c] + "' is empty");
    RandomStream rng(seed, draw, c);
    const std::size_t l = pick_level(policy, rng.uniform());
    result.cluster_level[c] = static_cast<std::uint32_t>(l);
    assign_cluster(policy.levels[l], network.members[c], rng, result.treatment,
                   scratch);
  }
  return result;
}

std::vector<std::string> policy_hazards(const SaturationPolicy& policy,
                                        const Network& network) {
  std::vector<std::string> out;
  for (std::size_t c = 0; c < network.num_clusters(); ++c) {
    const std::size_t n = network.members[c].size();
    for (const auto& lvl : policy.levels) {
      if (lvl.prob == 0.0 || lvl.rule.kind != WithinRule::Kind::FixedFraction)
        continue;
      const std::size_t t = lvl.rule.fixed_count(n);
      if (t == 0 || t == n)
        out.push_back("cluster '" + network.cluster_ids[c] + "' level '" +
                      lvl.label + "' treats " + std::to_string(t) + " of " +
                      std::to_string(n));
    }
  }
  return out;
}

namespace {

constexpr std::uint64_t kSaturated = std::numeric_limits<std::uint64_t>::max();

std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) {
  return a > kSaturated - b ? kSaturated : a + b;
}

std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b) {
  if (a == 0 || b == 0) return 0;
  return a > kSaturated / b ? kSaturated : a * b;
}

std::uint64_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  // C(n, j) = C(n, j-1) * (n - j + 1) / j is exact at every step.
  unsigned __int128 acc = 1;
  for (std::size_t j = 1; j <= k; ++j) {
    acc = acc * (n - j + 1) / j;
    if (acc > kSaturated) return kSaturated;
  }
  return static_cast<std::uint64_t>(acc);
}

// Treated counts with positive probability in a cluster of size n.
std::set<std::size_t> support_counts(const SaturationPolicy& policy,
                                     std::size_t n) {
  std::set<std::size_t> counts;
  for (const auto& lvl : policy.levels) {
    if (lvl.prob == 0.0) continue;
    if (lvl.rule.kind == WithinRule::Kind::FixedFraction) {
      counts.insert(lvl.rule.fixed_count(n));
    } else if (lvl.rule.value == 0.0) {
      counts.insert(0);
    } else if (lvl.rule.value == 1.0) {
      counts.insert(n);
    } else {
      for (std::size_t t = 0; t <= n; ++t) counts.insert(t);
    }
  }
  return counts;
}

std::uint64_t cluster_support(const SaturationPolicy& policy, std::size_t n) {
  std::uint64_t total = 0;
  for (std::size_t t : support_counts(policy, n)) total = sat_add(total, binomial(n, t));
  return total;
}

struct LocalOutcome {
  std::uint64_t mask;  // bit k set: k-th member treated
  double prob;
};

std::vector<LocalOutcome> cluster_outcomes(const SaturationPolicy& policy,
                                           std::size_t n) {
  std::map<std::uint64_t, double> probs;
  for (std::size_t t : support_counts(policy, n)) {
    // Gosper's hack over all n-bit masks with popcount t.
    const std::uint64_t limit = n == 64 ? 0 : (std::uint64_t{1} << n);
    std::uint64_t mask = t == 0 ? 0 : ((std::uint64_t{1} << t) - 1);
    while (true) {
      double p = 0.0;
      for (const auto& lvl : policy.levels) {
        if (lvl.prob == 0.0) continue;
        if (lvl.rule.kind == WithinRule::Kind::FixedFraction) {
          if (lvl.rule.fixed_count(n) == t)
            p += lvl.prob / static_cast<double>(binomial(n, t));
        } else {
          const double q = lvl.rule.value;
          p += lvl.prob * std::pow(q, static_cast<double>(t)) *
               std::pow(1.0 - q, static_cast<double>(n - t));
        }
      }
      if (p > 0.0) probs[mask] += p;
      if (t == 0) break;
      const std::uint64_t c = mask & (~mask + 1);
      const std::uint64_t r = mask + c;
      if (r == 0 || (limit != 0 && r >= limit)) break;
      mask = (((r ^ mask) >> 2) / c) | r;
      if (limit != 0 && mask >= limit) break;
    }
  }
  std::vector<LocalOutcome> out;
  out.reserve(probs.size());
  for (auto [mask, p] : probs) out.push_back({mask, p});
  return out;
}

}  // namespace

std::uint64_t policy_support_size(const SaturationPolicy& policy,
                                  const Network& network) {
  std::uint64_t total = 1;
  for (const auto& members : network.members)
    total = sat_mul(total, cluster_support(policy, members.size()));
  return total;
}

std::vector<WeightedAssignment> enumerate_assignments(
    const SaturationPolicy& policy, const Network& network, std::uint64_t cap) {
  policy.validate();
  const std::uint64_t size = policy_support_size(policy, network);
  if (size > cap)
    throw EnumerationCapError(
        "policy support has " +
        (size == kSaturated ? std::string("more than 2^64")
                            : std::to_string(size)) +
        " assignment vectors, above the enumeration cap of " +
        std::to_string(cap));
  for (const auto& members : network.members)
    if (members.size() > 63)
      throw EnumerationCapError("cluster with " + std::to_string(members.size()) +
                                " units is too large to enumerate");

  const std::size_t num_clusters = network.num_clusters();
  std::vector<std::vector<LocalOutcome>> per_cluster(num_clusters);
  for (std::size_t c = 0; c < num_clusters; ++c)
    per_cluster[c] = cluster_outcomes(policy, network.members[c].size());

  std::vector<WeightedAssignment> out;
  out.reserve(size);
  // Odometer over the per-cluster outcome lists; the last cluster varies
  // fastest.
  std::vector<std::size_t> digit(num_clusters, 0);
  while (true) {
    WeightedAssignment wa;
    wa.assignment.treatment.assign(network.size(), 0);
    wa.probability = 1.0;
    for (std::size_t c = 0; c < num_clusters; ++c) {
      const auto& outcome = per_cluster[c][digit[c]];
      wa.probability *= outcome.prob;
      const auto& members = network.members[c];
      for (std::size_t k = 0; k < members.size(); ++k)
        wa.assignment.treatment[members[k]] = (outcome.mask >> k) & 1;
    }
    out.push_back(std::move(wa));

    std::size_t c = num_clusters;
    while (c > 0) {
      --c;
      if (++digit[c] < per_cluster[c].size()) break;
      digit[c] = 0;
      if (c == 0) return out;
    }
    if (num_clusters == 0) return out;
  }
}

}  // namespace satdesign
