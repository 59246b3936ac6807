#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mqs/la.hpp"
#include "mqs/parallel.hpp"

namespace mqs {

struct Triplet {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

// Compressed-row sparse matrix. Symmetric matrices are stored with both
// triangles so that row access never needs a transpose pass.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(int rows, int cols) : rows_(rows), cols_(cols), row_offsets_(rows + 1, 0) {}

  static SparseMatrix from_triplets(int rows, int cols, std::vector<Triplet> trips) {
    for (const Triplet& t : trips) {
      if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
        throw std::invalid_argument("from_triplets: index out of range");
    }
    // stable sort keeps the insertion order of duplicates, so the summation
    // order below is reproducible for a fixed triplet sequence
    std::stable_sort(trips.begin(), trips.end(), [](const Triplet& a, const Triplet& b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    SparseMatrix m(rows, cols);
    m.col_indices_.reserve(trips.size());
    m.values_.reserve(trips.size());
    std::size_t i = 0;
    for (int r = 0; r < rows; ++r) {
      while (i < trips.size() && trips[i].row == r) {
        const int c = trips[i].col;
        double v = 0.0;
        while (i < trips.size() && trips[i].row == r && trips[i].col == c) v += trips[i++].value;
        m.col_indices_.push_back(c);
        m.values_.push_back(v);
      }
      m.row_offsets_[r + 1] = static_cast<int>(m.col_indices_.size());
    }
    return m;
  }

  static SparseMatrix identity(int n) {
    std::vector<Triplet> t(n);
    for (int i = 0; i < n; ++i) t[i] = {i, i, 1.0};
    return from_triplets(n, n, std::move(t));
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t nnz() const { return values_.size(); }

  void multiply(const Vector& x, Vector& y) const {
    if (static_cast<int>(x.size()) != cols_) throw std::invalid_argument("multiply: size mismatch");
    y.assign(rows_, 0.0);
    for (int r = 0; r < rows_; ++r) {
      double sum = 0.0;
      for (int k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) sum += values_[k] * x[col_indices_[k]];
      y[r] = sum;
    }
  }

  Vector multiply(const Vector& x) const {
    Vector y;
    multiply(x, y);
    return y;
  }

  // y = A^T x (scatter over rows)
  void multiply_transpose(const Vector& x, Vector& y) const {
    if (static_cast<int>(x.size()) != rows_) throw std::invalid_argument("multiply_transpose: size mismatch");
    y.assign(cols_, 0.0);
    for (int r = 0; r < rows_; ++r) {
      const double xr = x[r];
      if (xr == 0.0) continue;
      for (int k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) y[col_indices_[k]] += values_[k] * xr;
    }
  }

  Vector multiply_transpose(const Vector& x) const {
    Vector y;
    multiply_transpose(x, y);
    return y;
  }

  double coeff(int r, int c) const {
    const auto begin = col_indices_.begin() + row_offsets_[r];
    const auto end = col_indices_.begin() + row_offsets_[r + 1];
    const auto it = std::lower_bound(begin, end, c);
    if (it == end || *it != c) return 0.0;
    return values_[static_cast<std::size_t>(it - col_indices_.begin())];
  }

  Vector diagonal() const {
    const int n = std::min(rows_, cols_);
    Vector d(n, 0.0);
    for (int i = 0; i < n; ++i) d[i] = coeff(i, i);
    return d;
  }

  // u^T A v
  double bilinear(const Vector& u, const Vector& v) const {
    Vector av;
    multiply(v, av);
    return dot(u, av);
  }

  double max_asymmetry() const {
    if (rows_ != cols_) throw std::invalid_argument("max_asymmetry: square matrix required");
    double worst = 0.0;
    for (int r = 0; r < rows_; ++r)
      for (int k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
        const double a = values_[k];
        const double b = coeff(col_indices_[k], r);
        const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
        worst = std::max(worst, std::abs(a - b) / scale);
      }
    return worst;
  }

  const std::vector<int>& row_offsets() const { return row_offsets_; }
  const std::vector<int>& col_indices() const { return col_indices_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  // locate the storage slot of (r, c); -1 when the entry is not present
  int value_slot(int r, int c) const {
    const auto begin = col_indices_.begin() + row_offsets_[r];
    const auto end = col_indices_.begin() + row_offsets_[r + 1];
    const auto it = std::lower_bound(begin, end, c);
    if (it == end || *it != c) return -1;
    return static_cast<int>(it - col_indices_.begin());
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<int> row_offsets_{0};
  std::vector<int> col_indices_;
  std::vector<double> values_;
};

struct SolveStats {
  int iterations = 0;
  double rel_residual = 0.0;
  bool converged = false;
  double seconds = 0.0;
};

struct PcgOptions {
  double rel_tol = 1e-10;
  int max_iter = 10000;
  bool record_history = false;
};

struct PcgResult {
  Vector x;
  SolveStats stats;
  std::vector<double> residual_history;  // preconditioned norms, when recorded
};

// Conjugate gradients with Jacobi (diagonal) preconditioning. Works on any
// symmetric positive semidefinite operator given its action and diagonal;
// singular systems are accepted as long as the right-hand side is
// range-compatible.
template <class Apply>
PcgResult pcg_jacobi(int n, Apply&& apply, const Vector& diag, const Vector& b, const Vector& x0,
                     const PcgOptions& opts = {}) {
  if (static_cast<int>(b.size()) != n || static_cast<int>(x0.size()) != n || static_cast<int>(diag.size()) != n)
    throw std::invalid_argument("pcg_jacobi: size mismatch");
  const auto t0 = std::chrono::steady_clock::now();
  PcgResult res;
  Vector inv_diag(n);
  for (int i = 0; i < n; ++i) {
    if (diag[i] > 0.0) {
      inv_diag[i] = 1.0 / diag[i];
    } else if (diag[i] == 0.0) {
      inv_diag[i] = 1.0;  // structurally empty row; load must vanish there
    } else {
      throw std::invalid_argument("pcg_jacobi: negative diagonal entry at row " + std::to_string(i));
    }
  }

  res.x = x0;
  Vector r(n), z(n), p(n), ap(n);
  apply(res.x, ap);
  for (int i = 0; i < n; ++i) r[i] = b[i] - ap[i];

  const double norm_b = norm2(b);
  const double stop = opts.rel_tol * (norm_b > 0.0 ? norm_b : 1.0);
  double norm_r = norm2(r);

  auto finish = [&](bool converged) {
    res.stats.converged = converged;
    res.stats.rel_residual = norm_b > 0.0 ? norm_r / norm_b : norm_r;
    res.stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
  };

  if (norm_r <= stop) return finish(true);

  for (int i = 0; i < n; ++i) p[i] = z[i] = inv_diag[i] * r[i];
  double rho = dot(r, z);
  if (opts.record_history) res.residual_history.push_back(std::sqrt(std::max(rho, 0.0)));

  for (int it = 1; it <= opts.max_iter; ++it) {
    apply(p, ap);
    const double p_ap = dot(p, ap);
    if (!(p_ap > 0.0)) {
      // breakdown: operator not positive on the current direction
      res.stats.iterations = it - 1;
      return finish(false);
    }
    const double alpha = rho / p_ap;
    axpy(alpha, p, res.x);
    axpy(-alpha, ap, r);
    norm_r = norm2(r);
    res.stats.iterations = it;
    if (norm_r <= stop) return finish(true);
    for (int i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    const double rho_next = dot(r, z);
    if (opts.record_history) res.residual_history.push_back(std::sqrt(std::max(rho_next, 0.0)));
    const double beta = rho_next / rho;
    rho = rho_next;
    axpby(1.0, z, beta, p);
  }
  return finish(false);
}

inline PcgResult pcg_jacobi(const SparseMatrix& a, const Vector& b, const Vector& x0, const PcgOptions& opts = {}) {
  if (a.rows() != a.cols()) throw std::invalid_argument("pcg_jacobi: square matrix required");
  const Vector diag = a.diagonal();
  for (int i = 0; i < a.rows(); ++i) {
    if (diag[i] <= 0.0 && a.row_offsets()[i + 1] > a.row_offsets()[i])
      throw std::invalid_argument("pcg_jacobi: non-positive diagonal on populated row " + std::to_string(i));
  }
  return pcg_jacobi(
      a.rows(), [&a](const Vector& x, Vector& y) { a.multiply(x, y); }, diag, b, x0, opts);
}

namespace detail {

// Reverse Cuthill-McKee ordering of the sparsity graph, used to keep the
// Cholesky envelope tight.
inline std::vector<int> reverse_cuthill_mckee(const SparseMatrix& a) {
  const int n = a.rows();
  std::vector<int> degree(n);
  for (int i = 0; i < n; ++i) degree[i] = a.row_offsets()[i + 1] - a.row_offsets()[i];
  std::vector<int> order;
  order.reserve(n);
  std::vector<char> visited(n, 0);
  std::vector<int> queue;
  for (;;) {
    int start = -1;
    for (int i = 0; i < n; ++i)
      if (!visited[i] && (start == -1 || degree[i] < degree[start])) start = i;
    if (start == -1) break;
    queue.assign(1, start);
    visited[start] = 1;
    std::size_t head = 0;
    while (head < queue.size()) {
      const int u = queue[head++];
      order.push_back(u);
      std::vector<int> nbrs;
      for (int k = a.row_offsets()[u]; k < a.row_offsets()[u + 1]; ++k) {
        const int v = a.col_indices()[k];
        if (v != u && !visited[v]) {
          visited[v] = 1;
          nbrs.push_back(v);
        }
      }
      std::sort(nbrs.begin(), nbrs.end(), [&](int x, int y) { return degree[x] < degree[y]; });
      queue.insert(queue.end(), nbrs.begin(), nbrs.end());
    }
  }
  std::reverse(order.begin(), order.end());
  return order;  // order[k] = original index placed at position k
}

}  // namespace detail

// Symmetric positive definite factorization: RCM reordering followed by an
// envelope (skyline) Cholesky. The factorization is computed once and reused
// for every subsequent solve.
class EnvelopeCholesky {
 public:
  explicit EnvelopeCholesky(const SparseMatrix& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("EnvelopeCholesky: square matrix required");
    n_ = a.rows();
    perm_ = detail::reverse_cuthill_mckee(a);
    inv_perm_.resize(n_);
    for (int k = 0; k < n_; ++k) inv_perm_[perm_[k]] = k;

    // envelope start per permuted row
    first_.assign(n_, 0);
    for (int k = 0; k < n_; ++k) {
      const int orig = perm_[k];
      int lo = k;
      for (int s = a.row_offsets()[orig]; s < a.row_offsets()[orig + 1]; ++s)
        lo = std::min(lo, inv_perm_[a.col_indices()[s]]);
      first_[k] = lo;
    }
    offsets_.assign(n_ + 1, 0);
    for (int k = 0; k < n_; ++k) offsets_[k + 1] = offsets_[k] + (k - first_[k] + 1);
    data_.assign(offsets_[n_], 0.0);
    for (int k = 0; k < n_; ++k) {
      const int orig = perm_[k];
      for (int s = a.row_offsets()[orig]; s < a.row_offsets()[orig + 1]; ++s) {
        const int j = inv_perm_[a.col_indices()[s]];
        if (j <= k) data_[offsets_[k] + (j - first_[k])] = a.values()[s];
      }
    }
    factorize();
  }

  int dim() const { return n_; }

  void solve(const Vector& b, Vector& x) const {
    if (static_cast<int>(b.size()) != n_) throw std::invalid_argument("EnvelopeCholesky::solve: size mismatch");
    Vector y(n_);
    for (int k = 0; k < n_; ++k) y[k] = b[perm_[k]];
    // forward substitution L y' = y
    for (int k = 0; k < n_; ++k) {
      double sum = y[k];
      const int f = first_[k];
      const double* row = &data_[offsets_[k]];
      for (int j = f; j < k; ++j) sum -= row[j - f] * y[j];
      y[k] = sum / row[k - f];
    }
    // back substitution L^T x' = y'
    for (int k = n_ - 1; k >= 0; --k) {
      const int f = first_[k];
      const double* row = &data_[offsets_[k]];
      const double xk = y[k] / row[k - f];
      y[k] = xk;
      for (int j = f; j < k; ++j) y[j] -= row[j - f] * xk;
    }
    x.assign(n_, 0.0);
    for (int k = 0; k < n_; ++k) x[perm_[k]] = y[k];
  }

  Vector solve(const Vector& b) const {
    Vector x;
    solve(b, x);
    return x;
  }

 private:
  void factorize() {
    for (int k = 0; k < n_; ++k) {
      const int fk = first_[k];
      double* rowk = &data_[offsets_[k]];
      for (int j = fk; j < k; ++j) {
        const int fj = first_[j];
        const double* rowj = &data_[offsets_[j]];
        double sum = rowk[j - fk];
        const int lo = std::max(fk, fj);
        for (int m = lo; m < j; ++m) sum -= rowk[m - fk] * rowj[m - fj];
        rowk[j - fk] = sum / rowj[j - fj];
      }
      double diag = rowk[k - fk];
      for (int m = fk; m < k; ++m) diag -= rowk[m - fk] * rowk[m - fk];
      if (!(diag > 0.0))
        throw std::runtime_error("EnvelopeCholesky: loss of positive definiteness at pivot " +
                                 std::to_string(k) + " (original row " + std::to_string(perm_[k]) + ")");
      rowk[k - fk] = std::sqrt(diag);
    }
  }

  int n_ = 0;
  std::vector<int> perm_, inv_perm_;
  std::vector<int> first_;     // envelope start column per permuted row
  std::vector<int> offsets_;   // row offsets into data_
  std::vector<double> data_;   // packed lower envelope (holds L after factorize)
};

struct PowerIterationOptions {
  double rel_tol = 1e-3;
  int max_iter = 200;
};

struct PowerIterationResult {
  double lambda = 0.0;
  int iterations = 0;
  bool converged = false;
  Vector eigenvector;
  std::vector<double> history;  // Rayleigh quotient per iteration
};

inline Vector random_unit_vector(int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Vector v(dim);
  for (double& x : v) x = dist(rng);
  const double n = norm2(v);
  if (n == 0.0) {
    v.assign(dim, 0.0);
    if (dim > 0) v[0] = 1.0;
    return v;
  }
  scale(1.0 / n, v);
  return v;
}

// Dominant-eigenvalue estimate by power iteration. `inner` defines the inner
// product of the Rayleigh quotient; for an operator that is self-adjoint in
// that inner product the quotient increases monotonically, so the returned
// value approaches the true maximum from below.
template <class Apply, class Inner>
PowerIterationResult power_iteration_lambda_max(int dim, Apply&& apply, Inner&& inner, Vector start,
                                                const PowerIterationOptions& opts = {}) {
  PowerIterationResult res;
  if (dim == 0) {
    res.converged = true;
    return res;
  }
  if (static_cast<int>(start.size()) != dim) throw std::invalid_argument("power_iteration: bad start vector");
  {
    const double n = norm2(start);
    if (n == 0.0) throw std::invalid_argument("power_iteration: zero start vector");
    scale(1.0 / n, start);
  }
  Vector q = std::move(start), aq(dim);
  double prev = std::numeric_limits<double>::quiet_NaN();
  for (int it = 1; it <= opts.max_iter; ++it) {
    apply(q, aq);
    const double den = inner(q, q);
    const double num = inner(q, aq);
    const double lambda = num / den;
    res.lambda = lambda;
    res.iterations = it;
    res.history.push_back(lambda);
    const double norm_aq = norm2(aq);
    if (norm_aq == 0.0) {
      res.lambda = 0.0;
      res.converged = true;
      res.eigenvector = q;
      return res;
    }
    if (it > 1 && std::abs(lambda - prev) <= opts.rel_tol * std::abs(lambda)) {
      res.converged = true;
      res.eigenvector = q;
      return res;
    }
    prev = lambda;
    q = aq;
    scale(1.0 / norm_aq, q);
  }
  res.eigenvector = q;
  return res;  // best estimate, flagged unconverged
}

template <class Apply>
PowerIterationResult power_iteration_lambda_max(int dim, Apply&& apply, Vector start,
                                                const PowerIterationOptions& opts = {}) {
  return power_iteration_lambda_max(
      dim, std::forward<Apply>(apply), [](const Vector& u, const Vector& v) { return dot(u, v); },
      std::move(start), opts);
}

// --- Matrix Market I/O (coordinate format for matrices, array for vectors) ---

inline void write_matrix_market(const SparseMatrix& a, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << a.rows() << " " << a.cols() << " " << a.nnz() << "\n";
  char buf[64];
  for (int r = 0; r < a.rows(); ++r)
    for (int k = a.row_offsets()[r]; k < a.row_offsets()[r + 1]; ++k) {
      std::snprintf(buf, sizeof(buf), "%.17g", a.values()[k]);
      out << (r + 1) << " " << (a.col_indices()[k] + 1) << " " << buf << "\n";
    }
}

inline SparseMatrix read_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  do {
    if (!std::getline(in, line)) throw std::runtime_error(path + ": missing header");
  } while (!line.empty() && line[0] == '%');
  std::istringstream header(line);
  int rows = 0, cols = 0;
  std::size_t nnz = 0;
  if (!(header >> rows >> cols >> nnz)) throw std::runtime_error(path + ": malformed size line");
  std::vector<Triplet> trips;
  trips.reserve(nnz);
  for (std::size_t k = 0; k < nnz; ++k) {
    int i = 0, j = 0;
    double v = 0.0;
    if (!(in >> i >> j >> v)) throw std::runtime_error(path + ": truncated entry list");
    trips.push_back({i - 1, j - 1, v});
  }
  return SparseMatrix::from_triplets(rows, cols, std::move(trips));
}

inline void write_matrix_market_vector(const Vector& v, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "%%MatrixMarket matrix array real general\n";
  out << v.size() << " 1\n";
  char buf[64];
  for (double x : v) {
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    out << buf << "\n";
  }
}

inline Vector read_matrix_market_vector(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  do {
    if (!std::getline(in, line)) throw std::runtime_error(path + ": missing header");
  } while (!line.empty() && line[0] == '%');
  std::istringstream header(line);
  std::size_t n = 0;
  int one = 0;
  if (!(header >> n >> one)) throw std::runtime_error(path + ": malformed size line");
  Vector v(n);
  for (std::size_t i = 0; i < n; ++i)
    if (!(in >> v[i])) throw std::runtime_error(path + ": truncated entries");
  return v;
}

}  // namespace mqs
