#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "cogen/geometry.hpp"
#include "cogen/motion.hpp"

namespace cogen {

/// One (row, col, weight) entry of a correlation matrix.
struct Triplet {
  CellIndex row;
  CellIndex col;
  double weight;
};

/// Sparse stationary-cell x moving-vertex dwell-time weights, stored in
/// compressed rows with columns sorted inside each row.
///
/// weight(i, j) is the fraction of the motion during which moving vertex j
/// lies inside stationary cell i; it is a multiple of delta = 1 / steps.
class CorrelationMatrix {
 public:
  CorrelationMatrix() = default;
  /// Triplets must be unique per (row, col); they are sorted here.
  CorrelationMatrix(std::size_t rows, std::size_t cols, int steps, std::vector<Triplet> entries);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  int steps() const { return steps_; }
  double delta() const { return steps_ > 0 ? 1.0 / steps_ : 0.0; }
  std::size_t nnz() const { return col_index_.size(); }

  std::span<const std::uint64_t> row_offsets() const { return row_offsets_; }
  std::span<const CellIndex> col_indices() const { return col_index_; }
  std::span<const double> weights() const { return weights_; }

  std::vector<Triplet> triplets() const;
  std::vector<double> column_sums() const;
  /// Transposed copy (rows and columns swapped).
  CorrelationMatrix transposed() const;

  bool operator==(const CorrelationMatrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  int steps_ = 0;
  std::vector<std::uint64_t> row_offsets_{0};
  std::vector<CellIndex> col_index_;
  std::vector<double> weights_;
};

/// Riemann-sum assembly. leg[k] maps moving-grid points into the stationary
/// frame; each moving cell center is displaced once per step and located
/// directly on the stationary grid, so the cost is O(n_moving * K).
CorrelationMatrix assemble(const Grid& stationary, const Grid& moving, std::span<const Pose> leg);

/// Keeps entries whose row and column are both selected.
CorrelationMatrix restrict(const CorrelationMatrix& w, const Mask& row_mask, const Mask& col_mask);

std::vector<double> matvec(const CorrelationMatrix& w, std::span<const double> v);
std::vector<double> matvec_transposed(const CorrelationMatrix& w, std::span<const double> v);

/// u^T W v.
double bilinear(const CorrelationMatrix& w, std::span<const double> u, std::span<const double> v);

// ---------------------------------------------------------------------------
// Binary cache ("COGW1")
//
// Header (little-endian, 48 bytes):
//   char[8]  magic "COGW1\0\0\0"
//   u32      d
//   u32      rows
//   u32      cols
//   u32      K
//   f64      delta
//   u64      entry count
//   u64      content hash of (grids, motion, K)
// followed by entry-count records of (u32 row, u32 col, f64 weight) sorted
// by (row, col).

struct CacheHeader {
  std::uint32_t dimension = 0;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::uint32_t steps = 0;
  double delta = 0.0;
  std::uint64_t entries = 0;
  std::uint64_t content_hash = 0;
};

void write_correlation_cache(const std::filesystem::path& path, const CorrelationMatrix& w,
                             int dimension, std::uint64_t content_hash);
CacheHeader read_cache_header(const std::filesystem::path& path);
/// Throws ConfigError when the file is malformed or its header disagrees with
/// `expected` (every field, including the content hash).
CorrelationMatrix read_correlation_cache(const std::filesystem::path& path, const CacheHeader& expected);

}  // namespace cogen
