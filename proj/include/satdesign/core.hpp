#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace satdesign {

inline constexpr const char* kSchemaVersion = "satdesign/1";

// ---------------------------------------------------------------------------
// Exposure cells. A cell is the triple (a, s, h) in {0,1}^3, packed as
// a*4 + s*2 + h so that per-unit tables are plain arrays of eight entries.
// ---------------------------------------------------------------------------
inline constexpr std::size_t kNumCells = 8;
using CellArray = std::array<double, kNumCells>;

struct Cell {
  std::uint8_t a = 0;
  std::uint8_t s = 0;
  std::uint8_t h = 0;

  constexpr std::uint8_t index() const {
    return static_cast<std::uint8_t>(a * 4 + s * 2 + h);
  }
  static constexpr Cell from_index(std::size_t idx) {
    return Cell{static_cast<std::uint8_t>((idx >> 2) & 1),
                static_cast<std::uint8_t>((idx >> 1) & 1),
                static_cast<std::uint8_t>(idx & 1)};
  }
  friend constexpr bool operator==(Cell, Cell) = default;
};

// "(a,s,h)" label used in reports.
std::string cell_label(Cell c);

// ---------------------------------------------------------------------------
// Errors. Each class maps to one CLI exit status.
// ---------------------------------------------------------------------------
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const { return 1; }
};

class SchemaError : public Error {
 public:
  using Error::Error;
  int exit_code() const override { return 2; }
};

class ValidationError : public Error {
 public:
  using Error::Error;
  int exit_code() const override { return 2; }
};

class EnumerationCapError : public Error {
 public:
  using Error::Error;
  int exit_code() const override { return 2; }
};

class PositivityError : public Error {
 public:
  using Error::Error;
  int exit_code() const override { return 3; }
};

class EmptyCellError : public Error {
 public:
  using Error::Error;
  int exit_code() const override { return 3; }
};

class DigestMismatchError : public Error {
 public:
  using Error::Error;
  int exit_code() const override { return 4; }
};

// ---------------------------------------------------------------------------
// Digests: 64-bit FNV-1a over a canonical serialization, printed as hex.
// Only used to bind artifacts together, not for security.
// ---------------------------------------------------------------------------
std::string digest_of(std::string_view canonical);

// ---------------------------------------------------------------------------
// Counter-based random streams.
//
// A stream is keyed by (seed, a, b); e.g. (master seed, draw index, cluster
// index). Output is a SplitMix64 sequence from the mixed key, and all
// conversions to uniforms and bounded integers are done here so the mapping
// seed -> output does not depend on the standard library implementation.
// ---------------------------------------------------------------------------
std::uint64_t mix64(std::uint64_t x);

class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  // Uniform integer in [0, bound). bound > 0.
  std::uint64_t below(std::uint64_t bound);
  // Standard normal (Box-Muller; one value per call).
  double normal();

 private:
  std::uint64_t state_;
};

// Derives an independent sub-seed for a named purpose.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t purpose);

// ---------------------------------------------------------------------------
// Misc helpers.
// ---------------------------------------------------------------------------

// Shortest round-trip decimal representation.
std::string format_double(double v);

// Resolves 0 to the hardware concurrency (at least 1).
unsigned resolve_threads(unsigned requested);

// Runs body(worker, begin, end) over [0, n) split into contiguous chunks, one
// per worker. Chunk boundaries depend only on (n, workers).
void parallel_chunks(std::size_t n, unsigned workers,
                     const std::function<void(unsigned, std::size_t,
                                              std::size_t)>& body);

}  // namespace satdesign
