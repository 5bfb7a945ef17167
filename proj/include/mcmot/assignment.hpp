#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "mcmot/error.hpp"
#include "mcmot/geometry.hpp"

namespace mcmot {

/// Cost of a forbidden pairing. Never counted as a match.
inline constexpr double kInfeasible = 1e18;

inline bool is_infeasible(double c) { return !(c < kInfeasible); }

/// Dense row-major matrix.
template <class T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<T>> init) {
    rows_ = init.size();
    cols_ = rows_ ? init.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& row : init) {
      if (row.size() != cols_) fail(ErrorCategory::domain, "ragged matrix initializer");
      data_.insert(data_.end(), row.begin(), row.end());
    }
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using CostMatrix = Matrix<double>;
using FeasibilityMask = Matrix<std::uint8_t>;

struct Matching {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<std::size_t> unmatched_rows;
  std::vector<std::size_t> unmatched_cols;
};

/// Sum of the costs of the selected pairs.
inline double total_cost(const CostMatrix& c, const Matching& m) {
  double sum = 0.0;
  for (auto [r, k] : m.pairs) sum += c(r, k);
  return sum;
}

/// Minimum-cost bipartite matching on a possibly rectangular matrix.
///
/// Infeasible cells are replaced by a penalty larger than any sum of finite
/// entries, so the solver first maximizes the number of feasible pairs and
/// then minimizes their cost. Pairs that land on a penalty cell are reported
/// as unmatched. Shortest augmenting path (Hungarian) in O(n^3); rows are
/// inserted in index order and column scans keep the lowest index on ties,
/// so the result is deterministic.
inline Matching solve_assignment(const CostMatrix& c) {
  const std::size_t nr = c.rows();
  const std::size_t nc = c.cols();
  Matching m;
  if (nr == 0 || nc == 0) {
    for (std::size_t r = 0; r < nr; ++r) m.unmatched_rows.push_back(r);
    for (std::size_t k = 0; k < nc; ++k) m.unmatched_cols.push_back(k);
    return m;
  }

  const std::size_t n = std::max(nr, nc);
  double max_finite = 0.0;
  for (double v : c.data()) {
    if (!is_infeasible(v)) max_finite = std::max(max_finite, v);
  }
  const double penalty = (max_finite + 1.0) * static_cast<double>(n + 1);

  auto cost = [&](std::size_t i, std::size_t j) -> double {
    if (i >= nr || j >= nc) return 0.0;
    const double v = c(i, j);
    return is_infeasible(v) ? penalty : v;
  };

  // 1-based potentials; p[j] = row assigned to column j, way[] = augmenting path.
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<std::size_t> row_to_col(nr, nc);
  for (std::size_t j = 1; j <= n; ++j) {
    const std::size_t i = p[j] - 1;
    const std::size_t k = j - 1;
    if (i < nr && k < nc && !is_infeasible(c(i, k))) row_to_col[i] = k;
  }
  std::vector<char> col_used(nc, 0);
  for (std::size_t r = 0; r < nr; ++r) {
    if (row_to_col[r] < nc) {
      m.pairs.emplace_back(r, row_to_col[r]);
      col_used[row_to_col[r]] = 1;
    } else {
      m.unmatched_rows.push_back(r);
    }
  }
  for (std::size_t k = 0; k < nc; ++k) {
    if (!col_used[k]) m.unmatched_cols.push_back(k);
  }
  return m;
}

/// Marks cells whose mask entry is zero as infeasible.
inline CostMatrix gate(const CostMatrix& c, const FeasibilityMask& feasible) {
  if (c.rows() != feasible.rows() || c.cols() != feasible.cols()) {
    fail(ErrorCategory::domain, "gate: cost matrix and mask shapes differ");
  }
  CostMatrix out = c;
  for (std::size_t r = 0; r < c.rows(); ++r) {
    for (std::size_t k = 0; k < c.cols(); ++k) {
      if (!feasible(r, k)) out(r, k) = kInfeasible;
    }
  }
  return out;
}

/// Solves one assignment round over a subset of rows/cols. `cost_fn(rows, cols)`
/// returns a rows.size() x cols.size() matrix; entries above `threshold` are
/// infeasible. Indices in the result refer to the caller's numbering.
template <class CostFn>
Matching min_cost_matching(CostFn&& cost_fn, double threshold, const std::vector<std::size_t>& rows,
                           const std::vector<std::size_t>& cols) {
  Matching m;
  if (rows.empty() || cols.empty()) {
    m.unmatched_rows = rows;
    m.unmatched_cols = cols;
    return m;
  }
  CostMatrix c = cost_fn(rows, cols);
  if (c.rows() != rows.size() || c.cols() != cols.size()) {
    fail(ErrorCategory::domain, "cost function returned a matrix of the wrong shape");
  }
  for (double& v : c.data()) {
    if (v > threshold) v = kInfeasible;
  }
  const Matching local = solve_assignment(c);
  for (auto [r, k] : local.pairs) m.pairs.emplace_back(rows[r], cols[k]);
  for (auto r : local.unmatched_rows) m.unmatched_rows.push_back(rows[r]);
  for (auto k : local.unmatched_cols) m.unmatched_cols.push_back(cols[k]);
  return m;
}

/// Age-prioritized matching: at depth d only the rows whose time since last
/// update equals d compete for the columns left over by shallower depths.
/// Rows never reached (time since update > max_depth) end up unmatched.
template <class CostFn>
Matching matching_cascade(CostFn&& cost_fn, std::span<const int> time_since_update,
                          std::size_t num_cols, int max_depth, double threshold) {
  Matching m;
  std::vector<std::size_t> cols(num_cols);
  std::iota(cols.begin(), cols.end(), std::size_t{0});
  std::vector<char> row_matched(time_since_update.size(), 0);

  for (int depth = 1; depth <= max_depth && !cols.empty(); ++depth) {
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < time_since_update.size(); ++r) {
      if (time_since_update[r] == depth) rows.push_back(r);
    }
    if (rows.empty()) continue;
    const Matching level = min_cost_matching(cost_fn, threshold, rows, cols);
    for (const auto& pr : level.pairs) {
      m.pairs.push_back(pr);
      row_matched[pr.first] = 1;
    }
    cols = level.unmatched_cols;
  }
  for (std::size_t r = 0; r < time_since_update.size(); ++r) {
    if (!row_matched[r]) m.unmatched_rows.push_back(r);
  }
  m.unmatched_cols = cols;
  std::sort(m.pairs.begin(), m.pairs.end());
  return m;
}

/// 1 - IoU between each row box and each column box.
inline CostMatrix iou_cost(std::span<const BoundingBox> rows, std::span<const BoundingBox> cols) {
  CostMatrix c(rows.size(), cols.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t k = 0; k < cols.size(); ++k) c(r, k) = 1.0 - iou(rows[r], cols[k]);
  }
  return c;
}

/// Matches predicted track boxes to detection boxes on 1 - IoU; pairs with a
/// distance above `max_iou_distance` are infeasible.
inline Matching iou_matching(std::span<const BoundingBox> track_boxes,
                             std::span<const BoundingBox> det_boxes, double max_iou_distance) {
  std::vector<std::size_t> rows(track_boxes.size()), cols(det_boxes.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  std::iota(cols.begin(), cols.end(), std::size_t{0});
  auto cost_fn = [&](const std::vector<std::size_t>& rs, const std::vector<std::size_t>& cs) {
    CostMatrix c(rs.size(), cs.size());
    for (std::size_t r = 0; r < rs.size(); ++r) {
      for (std::size_t k = 0; k < cs.size(); ++k) {
        c(r, k) = 1.0 - iou(track_boxes[rs[r]], det_boxes[cs[k]]);
      }
    }
    return c;
  };
  return min_cost_matching(cost_fn, max_iou_distance, rows, cols);
}

}  // namespace mcmot
