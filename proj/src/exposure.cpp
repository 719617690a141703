#include "satdesign/exposure.hpp"

#include <cmath>
#include <cstdlib>
#include <numeric>

namespace satdesign {

Cutoff Cutoff::from_double(double value) {
  if (!(value > 0.0 && value < 1.0))
    throw ValidationError("cutoff must lie strictly between 0 and 1");
  for (std::int64_t den = 1; den <= 1000; ++den) {
    const double num = std::round(value * static_cast<double>(den));
    if (std::abs(num / static_cast<double>(den) - value) <= 1e-9) {
      const auto n = static_cast<std::int64_t>(num);
      const std::int64_t g = std::gcd(n, den);
      return Cutoff{n / g, den / g};
    }
  }
  // Not a small fraction: keep ~12 significant digits.
  const std::int64_t den = 1'000'000'000'000LL;
  const auto num = static_cast<std::int64_t>(std::llround(value * static_cast<double>(den)));
  const std::int64_t g = std::gcd(num, den);
  return Cutoff{num / g, den / g};
}

Cutoff Cutoff::parse(const std::string& text) {
  const auto slash = text.find('/');
  if (slash == std::string::npos) {
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end == text.c_str() || *end != '\0')
      throw ValidationError("cannot parse cutoff '" + text + "'");
    return from_double(v);
  }
  try {
    const std::int64_t num = std::stoll(text.substr(0, slash));
    const std::int64_t den = std::stoll(text.substr(slash + 1));
    if (den <= 0 || num <= 0 || num >= den)
      throw ValidationError("cutoff '" + text + "' must lie strictly between 0 and 1");
    const std::int64_t g = std::gcd(num, den);
    return Cutoff{num / g, den / g};
  } catch (const std::logic_error&) {
    throw ValidationError("cannot parse cutoff '" + text + "'");
  }
}

std::string Cutoff::to_string() const {
  return std::to_string(num) + "/" + std::to_string(den);
}

void ExposureConfig::validate() const {
  if (!(cutoff.num > 0 && cutoff.num < cutoff.den))
    throw ValidationError("cutoff must lie strictly between 0 and 1");
  if (empty_within > 1 || empty_between > 1)
    throw ValidationError("degenerate-denominator conventions must be 0 or 1");
}

std::string ExposureConfig::canonical() const {
  return "exposure|" + cutoff.to_string() + "|" + std::to_string(empty_within) +
         "|" + std::to_string(empty_between) + "|" +
         (mode == ExposureMode::Full ? "full" : "reduced");
}

std::string ExposureConfig::digest() const { return digest_of(canonical()); }

void compute_cells(std::span<const std::uint8_t> assignment,
                   const Network& network, const ExposureConfig& cfg,
                   std::span<std::uint8_t> cells,
                   std::vector<std::size_t>& scratch) {
  const std::size_t n = network.size();
  scratch.assign(network.num_clusters(), 0);
  for (std::size_t i = 0; i < n; ++i)
    scratch[network.cluster_of[i]] += assignment[i];

  const bool full = cfg.mode == ExposureMode::Full;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t a = assignment[i];
    const std::size_t peers = network.peers(i);
    std::uint8_t s = cfg.empty_within;
    if (peers > 0)
      s = cfg.cutoff.exceeded_by(scratch[network.cluster_of[i]] - a, peers) ? 1 : 0;
    std::uint8_t h = 0;
    if (full) {
      const auto& g = network.geo[i];
      if (g.empty()) {
        h = cfg.empty_between;
      } else {
        std::size_t treated = 0;
        for (std::size_t j : g) treated += assignment[j];
        h = cfg.cutoff.exceeded_by(treated, g.size()) ? 1 : 0;
      }
    }
    cells[i] = static_cast<std::uint8_t>(a * 4 + s * 2 + h);
  }
}

ExposureMatrix compute_exposures(std::span<const std::uint8_t> assignment,
                                 const Network& network,
                                 const ExposureConfig& cfg) {
  if (assignment.size() != network.size())
    throw ValidationError("assignment length " + std::to_string(assignment.size()) +
                          " does not match network size " +
                          std::to_string(network.size()));
  ExposureMatrix out;
  out.mode = cfg.mode;
  out.cells.assign(network.size(), 0);
  out.within_degenerate.assign(network.size(), 0);
  out.between_degenerate.assign(network.size(), 0);
  std::vector<std::size_t> scratch;
  compute_cells(assignment, network, cfg, out.cells, scratch);
  for (std::size_t i = 0; i < network.size(); ++i) {
    out.within_degenerate[i] = network.peers(i) == 0 ? 1 : 0;
    out.between_degenerate[i] =
        cfg.mode == ExposureMode::Full && network.geo[i].empty() ? 1 : 0;
  }
  return out;
}

std::vector<Cell> CellCounts::reported_cells() const {
  std::vector<Cell> out;
  for (std::size_t c = 0; c < kNumCells; ++c) {
    const Cell cell = Cell::from_index(c);
    if (mode == ExposureMode::Reduced && cell.h == 1) continue;
    out.push_back(cell);
  }
  return out;
}

CellCounts cell_counts(const ExposureMatrix& exposures) {
  CellCounts out;
  out.mode = exposures.mode;
  for (std::size_t i = 0; i < exposures.size(); ++i) {
    ++out.counts[exposures.cells[i]];
    out.within_degenerate += exposures.within_degenerate[i];
    out.between_degenerate += exposures.between_degenerate[i];
  }
  return out;
}

}  // namespace satdesign
