#include "cogen/correlation.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <string>

#include "cogen/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cogen {

CorrelationMatrix::CorrelationMatrix(std::size_t rows, std::size_t cols, int steps,
                                     std::vector<Triplet> entries)
    : rows_(rows), cols_(cols), steps_(steps) {
  // Stable counting sort by row; columns are then sorted inside each row.
  row_offsets_.assign(rows + 1, 0);
  for (const auto& e : entries) {
    if (e.row >= rows || e.col >= cols) throw DimensionError("correlation entry out of range");
    ++row_offsets_[e.row + 1];
  }
  for (std::size_t r = 0; r < rows; ++r) row_offsets_[r + 1] += row_offsets_[r];
  col_index_.resize(entries.size());
  weights_.resize(entries.size());
  std::vector<std::uint64_t> cursor(row_offsets_.begin(), row_offsets_.end() - 1);
  for (const auto& e : entries) {
    const auto at = cursor[e.row]++;
    col_index_[at] = e.col;
    weights_[at] = e.weight;
  }
  for (std::size_t r = 0; r < rows; ++r) {
    const auto b = row_offsets_[r];
    const auto n = row_offsets_[r + 1] - b;
    if (n < 2) continue;
    if (std::is_sorted(col_index_.begin() + b, col_index_.begin() + b + n)) continue;
    std::vector<std::pair<CellIndex, double>> tmp(n);
    for (std::size_t k = 0; k < n; ++k) tmp[k] = {col_index_[b + k], weights_[b + k]};
    std::sort(tmp.begin(), tmp.end(), [](auto& x, auto& y) { return x.first < y.first; });
    for (std::size_t k = 0; k < n; ++k) {
      col_index_[b + k] = tmp[k].first;
      weights_[b + k] = tmp[k].second;
    }
  }
  for (std::size_t r = 0; r < rows; ++r) {
    for (auto k = row_offsets_[r] + 1; k < row_offsets_[r + 1]; ++k) {
      if (col_index_[k] == col_index_[k - 1]) throw DimensionError("duplicate correlation entry");
    }
  }
}

std::vector<Triplet> CorrelationMatrix::triplets() const {
  std::vector<Triplet> out;
  out.reserve(nnz());
  for (std::size_t r = 0; r < rows_; ++r) {
    for (auto k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
      out.push_back({static_cast<CellIndex>(r), col_index_[k], weights_[k]});
    }
  }
  return out;
}

std::vector<double> CorrelationMatrix::column_sums() const {
  std::vector<double> s(cols_, 0.0);
  for (std::size_t k = 0; k < nnz(); ++k) s[col_index_[k]] += weights_[k];
  return s;
}

CorrelationMatrix CorrelationMatrix::transposed() const {
  std::vector<Triplet> t;
  t.reserve(nnz());
  for (std::size_t r = 0; r < rows_; ++r) {
    for (auto k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
      t.push_back({col_index_[k], static_cast<CellIndex>(r), weights_[k]});
    }
  }
  return CorrelationMatrix(cols_, rows_, steps_, std::move(t));
}

// ---------------------------------------------------------------------------

namespace {

struct Visit {
  CellIndex row;
  CellIndex col;
  std::uint32_t count;
};

// Appends the (row, count) visits of one moving vertex.
void visits_of(const Grid& stationary, const Point& x, CellIndex col, std::span<const Pose> leg,
               std::vector<CellIndex>& scratch, std::vector<Visit>& out) {
  scratch.clear();
  for (const Pose& p : leg) {
    if (auto cell = locate_cell(stationary, p.apply(x))) scratch.push_back(*cell);
  }
  if (scratch.empty()) return;
  std::sort(scratch.begin(), scratch.end());
  std::uint32_t run = 1;
  for (std::size_t k = 1; k <= scratch.size(); ++k) {
    if (k < scratch.size() && scratch[k] == scratch[k - 1]) {
      ++run;
      continue;
    }
    out.push_back({scratch[k - 1], col, run});
    run = 1;
  }
}

}  // namespace

CorrelationMatrix assemble(const Grid& stationary, const Grid& moving, std::span<const Pose> leg) {
  if (leg.empty()) throw ConfigError("trajectory leg must contain at least one pose");
  if (stationary.dimension() != moving.dimension()) {
    throw DimensionError("stationary and moving grids differ in dimension");
  }
  const auto n_mov = static_cast<std::int64_t>(moving.size());
  const int steps = static_cast<int>(leg.size());

  int workers = 1;
#ifdef _OPENMP
  workers = omp_get_max_threads();
#endif
  // Worker-local visit lists over contiguous column blocks, concatenated in
  // block order so the result does not depend on scheduling.
  std::vector<std::vector<Visit>> partial(static_cast<std::size_t>(workers));
#pragma omp parallel num_threads(workers)
  {
    int w = 0;
#ifdef _OPENMP
    w = omp_get_thread_num();
#endif
    const std::int64_t begin = n_mov * w / workers;
    const std::int64_t end = n_mov * (w + 1) / workers;
    std::vector<CellIndex> scratch;
    scratch.reserve(leg.size());
    auto& out = partial[static_cast<std::size_t>(w)];
    for (std::int64_t j = begin; j < end; ++j) {
      const auto col = static_cast<CellIndex>(j);
      visits_of(stationary, moving.center(col), col, leg, scratch, out);
    }
  }

  std::size_t total = 0;
  for (const auto& p : partial) total += p.size();
  std::vector<Triplet> entries;
  entries.reserve(total);
  for (auto& p : partial) {
    for (const Visit& v : p) {
      entries.push_back({v.row, v.col, static_cast<double>(v.count) / steps});
    }
    std::vector<Visit>().swap(p);
  }
  return CorrelationMatrix(stationary.size(), moving.size(), steps, std::move(entries));
}

CorrelationMatrix restrict(const CorrelationMatrix& w, const Mask& row_mask, const Mask& col_mask) {
  if (row_mask.size() != w.rows() || col_mask.size() != w.cols()) {
    throw DimensionError("restriction masks do not match the matrix shape");
  }
  std::vector<Triplet> kept;
  const auto off = w.row_offsets();
  const auto cols = w.col_indices();
  const auto vals = w.weights();
  for (std::size_t r = 0; r < w.rows(); ++r) {
    if (!row_mask[r]) continue;
    for (auto k = off[r]; k < off[r + 1]; ++k) {
      if (col_mask[cols[k]]) kept.push_back({static_cast<CellIndex>(r), cols[k], vals[k]});
    }
  }
  return CorrelationMatrix(w.rows(), w.cols(), w.steps(), std::move(kept));
}

std::vector<double> matvec(const CorrelationMatrix& w, std::span<const double> v) {
  if (v.size() != w.cols()) {
    throw DimensionError("matvec: vector has " + std::to_string(v.size()) + " entries, matrix has " +
                         std::to_string(w.cols()) + " columns");
  }
  std::vector<double> out(w.rows(), 0.0);
  const auto off = w.row_offsets();
  const auto cols = w.col_indices();
  const auto vals = w.weights();
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < static_cast<std::int64_t>(w.rows()); ++r) {
    double acc = 0.0;
    for (auto k = off[r]; k < off[r + 1]; ++k) acc += vals[k] * v[cols[k]];
    out[r] = acc;
  }
  return out;
}

std::vector<double> matvec_transposed(const CorrelationMatrix& w, std::span<const double> v) {
  if (v.size() != w.rows()) {
    throw DimensionError("matvec_transposed: vector has " + std::to_string(v.size()) +
                         " entries, matrix has " + std::to_string(w.rows()) + " rows");
  }
  // Sequential scatter keeps the summation order fixed.
  std::vector<double> out(w.cols(), 0.0);
  const auto off = w.row_offsets();
  const auto cols = w.col_indices();
  const auto vals = w.weights();
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const double x = v[r];
    if (x == 0.0) continue;
    for (auto k = off[r]; k < off[r + 1]; ++k) out[cols[k]] += vals[k] * x;
  }
  return out;
}

double bilinear(const CorrelationMatrix& w, std::span<const double> u, std::span<const double> v) {
  if (u.size() != w.rows()) throw DimensionError("bilinear: left vector does not match rows");
  const auto wv = matvec(w, v);
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) acc += u[i] * wv[i];
  return acc;
}

// ---------------------------------------------------------------------------

namespace {

static_assert(std::endian::native == std::endian::little, "cache IO assumes a little-endian host");

constexpr char kMagic[8] = {'C', 'O', 'G', 'W', '1', 0, 0, 0};

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw ConfigError("correlation cache is truncated");
  return v;
}

CacheHeader read_header(std::istream& is) {
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw ConfigError("not a COGW1 correlation cache");
  }
  CacheHeader h;
  h.dimension = get<std::uint32_t>(is);
  h.rows = get<std::uint32_t>(is);
  h.cols = get<std::uint32_t>(is);
  h.steps = get<std::uint32_t>(is);
  h.delta = get<double>(is);
  h.entries = get<std::uint64_t>(is);
  h.content_hash = get<std::uint64_t>(is);
  return h;
}

}  // namespace

void write_correlation_cache(const std::filesystem::path& path, const CorrelationMatrix& w,
                             int dimension, std::uint64_t content_hash) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open '" + path.string() + "' for writing");
  os.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(dimension));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(w.rows()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(w.cols()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(w.steps()));
  put<double>(os, w.delta());
  put<std::uint64_t>(os, w.nnz());
  put<std::uint64_t>(os, content_hash);
  const auto off = w.row_offsets();
  const auto cols = w.col_indices();
  const auto vals = w.weights();
  for (std::size_t r = 0; r < w.rows(); ++r) {
    for (auto k = off[r]; k < off[r + 1]; ++k) {
      put<std::uint32_t>(os, static_cast<std::uint32_t>(r));
      put<std::uint32_t>(os, cols[k]);
      put<double>(os, vals[k]);
    }
  }
  if (!os) throw ConfigError("failed writing '" + path.string() + "'");
}

CacheHeader read_cache_header(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open correlation cache '" + path.string() + "'");
  return read_header(is);
}

CorrelationMatrix read_correlation_cache(const std::filesystem::path& path, const CacheHeader& expected) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open correlation cache '" + path.string() + "'");
  const CacheHeader h = read_header(is);
  auto mismatch = [&](const char* field) {
    throw ConfigError("stale correlation cache '" + path.string() + "': " + field +
                      " does not match the scene");
  };
  if (h.dimension != expected.dimension) mismatch("dimension");
  if (h.rows != expected.rows) mismatch("rows");
  if (h.cols != expected.cols) mismatch("cols");
  if (h.steps != expected.steps) mismatch("K");
  if (h.delta != expected.delta) mismatch("delta");
  if (h.content_hash != expected.content_hash) mismatch("content hash");
  std::vector<Triplet> entries;
  entries.reserve(h.entries);
  for (std::uint64_t e = 0; e < h.entries; ++e) {
    Triplet t{};
    t.row = get<std::uint32_t>(is);
    t.col = get<std::uint32_t>(is);
    t.weight = get<double>(is);
    if (!(t.weight > 0.0 && t.weight <= 1.0)) throw ConfigError("correlation cache has invalid weight");
    entries.push_back(t);
  }
  return CorrelationMatrix(h.rows, h.cols, static_cast<int>(h.steps), std::move(entries));
}

}  // namespace cogen
