#pragma once

#include <cmath>
#include <deque>
#include <stdexcept>
#include <vector>

#include "mqs/la.hpp"
#include "mqs/sparse.hpp"

namespace mqs {

// Orthonormal subspace of recent solution snapshots. For a sequence of slowly
// drifting right-hand sides, projecting onto this subspace gives an initial
// guess that is optimal in the operator norm over the stored span, which cuts
// the iteration count of the subsequent conjugate-gradient solve.
class PodBasis {
 public:
  PodBasis(const SparseMatrix* op, int max_vectors = 10) : op_(op), max_vectors_(max_vectors) {
    if (max_vectors < 0) throw std::invalid_argument("PodBasis: negative basis size");
  }

  int size() const { return static_cast<int>(basis_.size()); }
  int capacity() const { return max_vectors_; }
  const std::vector<Vector>& vectors() const { return basis_; }
  const std::vector<double>& reduced_operator() const { return reduced_; }

  // Stores the snapshot (oldest evicted beyond capacity) and rebuilds the
  // orthonormal basis. Zero and linearly dependent snapshots are dropped.
  void add_snapshot(const Vector& x) {
    if (max_vectors_ == 0) return;
    if (norm2(x) == 0.0) return;
    snapshots_.push_back(x);
    while (static_cast<int>(snapshots_.size()) > max_vectors_) snapshots_.pop_front();
    rebuild();
  }

  // x0 = Q z with (Q^T A Q) z = Q^T r; returns zeros for an empty basis or a
  // degenerate reduced system.
  Vector initial_guess(const Vector& r) const {
    Vector x0(r.size(), 0.0);
    const int m = size();
    if (m == 0) return x0;
    Vector rhs(m);
    for (int i = 0; i < m; ++i) rhs[i] = dot(basis_[i], r);
    Vector z = rhs;
    if (!solve_reduced(z)) return x0;
    for (int i = 0; i < m; ++i) axpy(z[i], basis_[i], x0);
    return x0;
  }

 private:
  void rebuild() {
    basis_.clear();
    for (const Vector& s : snapshots_) {
      Vector v = s;
      const double original = norm2(v);
      // modified Gram-Schmidt with one re-orthogonalization pass
      for (int pass = 0; pass < 2; ++pass)
        for (const Vector& q : basis_) axpy(-dot(q, v), q, v);
      const double residual = norm2(v);
      if (residual < 1e-12 * original) continue;  // no rank inflation
      scale(1.0 / residual, v);
      basis_.push_back(std::move(v));
    }
    refresh_reduced();
  }

  void refresh_reduced() {
    const int m = size();
    reduced_.assign(static_cast<std::size_t>(m) * m, 0.0);
    Vector av;
    for (int j = 0; j < m; ++j) {
      op_->multiply(basis_[j], av);
      for (int i = 0; i <= j; ++i) {
        const double v = dot(basis_[i], av);
        reduced_[i * m + j] = v;
        reduced_[j * m + i] = v;
      }
    }
  }

  // dense symmetric solve with pivot guard; false on rank deficiency
  bool solve_reduced(Vector& rhs) const {
    const int m = size();
    std::vector<double> a = reduced_;
    double max_diag = 0.0;
    for (int i = 0; i < m; ++i) max_diag = std::max(max_diag, std::abs(a[i * m + i]));
    if (max_diag == 0.0) return false;
    // Cholesky on the reduced operator (symmetric positive semidefinite)
    for (int k = 0; k < m; ++k) {
      double d = a[k * m + k];
      for (int j = 0; j < k; ++j) d -= a[k * m + j] * a[k * m + j];
      if (d <= 1e-14 * max_diag) return false;
      const double l = std::sqrt(d);
      a[k * m + k] = l;
      for (int i = k + 1; i < m; ++i) {
        double v = a[i * m + k];
        for (int j = 0; j < k; ++j) v -= a[i * m + j] * a[k * m + j];
        a[i * m + k] = v / l;
      }
    }
    for (int i = 0; i < m; ++i) {
      double v = rhs[i];
      for (int j = 0; j < i; ++j) v -= a[i * m + j] * rhs[j];
      rhs[i] = v / a[i * m + i];
    }
    for (int i = m - 1; i >= 0; --i) {
      double v = rhs[i];
      for (int j = i + 1; j < m; ++j) v -= a[j * m + i] * rhs[j];
      rhs[i] = v / a[i * m + i];
    }
    return true;
  }

  const SparseMatrix* op_;
  int max_vectors_;
  std::deque<Vector> snapshots_;
  std::vector<Vector> basis_;
  std::vector<double> reduced_;  // Q^T A Q, row-major m x m
};

}  // namespace mqs
