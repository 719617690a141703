#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "satdesign/core.hpp"
#include "satdesign/network.hpp"

namespace satdesign {

// Exact rational cutoff num/den in (0, 1). Fractions are compared with
// integer cross-multiplication so thirds are never subject to rounding.
struct Cutoff {
  std::int64_t num = 1;
  std::int64_t den = 2;

  // Parses "p/q" or a decimal; decimals are snapped to the nearest fraction
  // with denominator <= 1000 when within 1e-9.
  static Cutoff parse(const std::string& text);
  static Cutoff from_double(double value);
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string to_string() const;
  // treated / total > num / den
  bool exceeded_by(std::size_t treated, std::size_t total) const {
    return static_cast<std::int64_t>(treated) * den >
           num * static_cast<std::int64_t>(total);
  }
  friend bool operator==(const Cutoff&, const Cutoff&) = default;
};

enum class ExposureMode { Full, Reduced };

struct ExposureConfig {
  Cutoff cutoff;
  std::uint8_t empty_within = 0;   // S_i when the unit has no cluster peers
  std::uint8_t empty_between = 0;  // H_i when G_i is empty
  ExposureMode mode = ExposureMode::Full;

  void validate() const;
  std::string canonical() const;
  std::string digest() const;
};

struct ExposureMatrix {
  ExposureMode mode = ExposureMode::Full;
  std::vector<std::uint8_t> cells;  // Cell::index() per unit
  std::vector<std::uint8_t> within_degenerate;
  std::vector<std::uint8_t> between_degenerate;

  std::size_t size() const { return cells.size(); }
  Cell at(std::size_t i) const { return Cell::from_index(cells[i]); }
};

ExposureMatrix compute_exposures(std::span<const std::uint8_t> assignment,
                                 const Network& network,
                                 const ExposureConfig& cfg);

// Hot-loop kernel: writes Cell::index() per unit into `cells`. `scratch` holds
// per-cluster treated counts.
void compute_cells(std::span<const std::uint8_t> assignment,
                   const Network& network, const ExposureConfig& cfg,
                   std::span<std::uint8_t> cells,
                   std::vector<std::size_t>& scratch);

struct CellCounts {
  ExposureMode mode = ExposureMode::Full;
  std::array<std::size_t, kNumCells> counts{};
  std::size_t within_degenerate = 0;
  std::size_t between_degenerate = 0;

  // Cells reported for the mode: all 8 in full mode, the 4 with h = 0 in
  // reduced mode.
  std::vector<Cell> reported_cells() const;
};

CellCounts cell_counts(const ExposureMatrix& exposures);

}  // namespace satdesign
