#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mqs/fem.hpp"
#include "mqs/la.hpp"
#include "mqs/pod.hpp"
#include "mqs/sparse.hpp"

namespace mqs {

struct SchurCounters {
  long f_evaluations = 0;
  long pcg_solves = 0;
  long pcg_iterations = 0;
  long lambda_estimations = 0;
};

struct DaeResiduals {
  double differential = 0.0;  // conductor block row
  double algebraic = 0.0;     // non-conductor block row
};

struct SchurOperatorOptions {
  PcgOptions pcg;
  int pod_size = 10;
  PowerIterationOptions lambda;
  std::uint64_t seed = 1234;
};

// Right-hand-side evaluator of the reduced system
//   d/dt a_c = f(t, a_c) = -M_c^{-1} [ K_cn K_n^+ j(t) + K_S(a_c) a_c ],
//   K_S(a_c) = K_c(a_c) - K_cn K_n^+ K_cn^T.
// K_S is never formed; its action costs one conjugate-gradient solve on K_n.
// The magnetostatic unit-current solve K_n^+ j_unit happens once at
// construction and is rescaled by the source current afterwards. One instance
// serves one integration run (internal scratch state is not reentrant).
class SchurOdeOperator {
 public:
  SchurOdeOperator(const BlockSystem* block, const EnvelopeCholesky* mc_factor,
                   std::function<double(double)> source_current, SchurOperatorOptions opts = {})
      : block_(block),
        mc_(mc_factor),
        i_s_(std::move(source_current)),
        opts_(opts),
        kn_diag_(block->k_n.diagonal()),
        pod_(&block->k_n, opts.pod_size) {
    precompute_unit_source();
  }

  int dim() const { return block_->part.nc(); }
  const BlockSystem& block() const { return *block_; }
  std::uint64_t kc_version() const { return block_->kc_version; }
  const SchurCounters& counters() const { return counters_; }
  double source_current(double t) const { return i_s_(t); }
  const Vector& unit_source_solution() const { return x_unit_; }
  int last_inner_iterations() const { return last_inner_iterations_; }
  const PodBasis& pod() const { return pod_; }

  // da_c/dt; exactly one inner pseudo-inverse solve per call
  void apply_f(double t, const Vector& a_c, Vector& out) {
    if (static_cast<int>(a_c.size()) != dim()) throw std::invalid_argument("apply_f: state size mismatch");
    block_->k_cn.multiply_transpose(a_c, scratch_rhs_);
    const Vector y = solve_kn(scratch_rhs_, pod_.initial_guess(scratch_rhs_), "apply_f");
    pod_.add_snapshot(y);

    block_->k_c.multiply(a_c, scratch_g_);
    block_->k_cn.multiply(y, scratch_tmp_);
    axpy(-1.0, scratch_tmp_, scratch_g_);
    axpy(i_s_(t), kcn_x_unit_, scratch_g_);
    mc_->solve(scratch_g_, out);
    scale(-1.0, out);
    ++counters_.f_evaluations;
  }

  Vector apply_f(double t, const Vector& a_c) {
    Vector out;
    apply_f(t, a_c, out);
    return out;
  }

  // a_n = K_n^+ j(t) - K_n^+ K_cn^T a_c  (post-processing of the reduced state)
  Vector recover_an(const Vector& a_c, double t) {
    if (static_cast<int>(a_c.size()) != dim()) throw std::invalid_argument("recover_an: state size mismatch");
    block_->k_cn.multiply_transpose(a_c, scratch_rhs_);
    const Vector y = solve_kn(scratch_rhs_, pod_.initial_guess(scratch_rhs_), "recover_an");
    pod_.add_snapshot(y);
    Vector a_n = x_unit_;
    scale(i_s_(t), a_n);
    axpy(-1.0, y, a_n);
    return a_n;
  }

  // K_S(a_c) v with the currently frozen K_c
  void apply_schur(const Vector& v, Vector& out) {
    block_->k_cn.multiply_transpose(v, scratch_rhs_);
    if (static_cast<int>(eig_warm_.size()) != block_->part.nn()) eig_warm_.assign(block_->part.nn(), 0.0);
    const Vector y = solve_kn(scratch_rhs_, eig_warm_, "apply_schur");
    eig_warm_ = y;  // next application starts from here
    block_->k_c.multiply(v, out);
    block_->k_cn.multiply(y, scratch_tmp_);
    axpy(-1.0, scratch_tmp_, out);
  }

  // Residual norms of both rows of the unreduced system, each relative to the
  // magnitude of the terms entering that row.
  DaeResiduals dae_residual(const Vector& a_c, const Vector& a_n, const Vector& da_c_dt, double t) const {
    Vector m_da = block_->m_c.multiply(da_c_dt);
    Vector kc_a = block_->k_c.multiply(a_c);
    Vector kcn_an = block_->k_cn.multiply(a_n);
    Vector r1 = m_da;
    axpy(1.0, kc_a, r1);
    axpy(1.0, kcn_an, r1);
    const double s1 = std::max({norm2(m_da), norm2(kc_a), norm2(kcn_an), 1e-300});

    Vector kcnt_a = block_->k_cn.multiply_transpose(a_c);
    Vector kn_an = block_->k_n.multiply(a_n);
    Vector j = block_->j_unit;
    scale(i_s_(t), j);
    Vector r2 = kcnt_a;
    axpy(1.0, kn_an, r2);
    axpy(-1.0, j, r2);
    const double s2 = std::max({norm2(kcnt_a), norm2(kn_an), norm2(j), 1e-300});

    DaeResiduals res;
    res.differential = norm2(r1) / s1;
    res.algebraic = norm2(r2) / s2;
    return res;
  }

  // Dominant eigenvalue of M_c^{-1} K_S by power iteration. The Rayleigh
  // quotient uses the M_c inner product, in which the operator is
  // self-adjoint, so the estimate increases monotonically and approaches the
  // true value from below. Warm-started from the previous eigenvector when a
  // refreshed K_c shifts the spectrum slightly.
  double estimate_lambda_max() {
    const int n = dim();
    if (n == 0) return 0.0;
    Vector start = eigenvector_.empty() ? random_unit_vector(n, opts_.seed) : eigenvector_;
    auto apply = [this](const Vector& v, Vector& out) {
      apply_schur(v, scratch_ks_);
      mc_->solve(scratch_ks_, out);
    };
    auto m_inner = [this](const Vector& u, const Vector& v) {
      Vector t;
      block_->m_c.multiply(v, t);
      return dot(u, t);
    };
    last_lambda_ = power_iteration_lambda_max(n, apply, m_inner, std::move(start), opts_.lambda);
    eigenvector_ = last_lambda_.eigenvector;
    ++counters_.lambda_estimations;
    return last_lambda_.lambda;
  }

  const PowerIterationResult& last_lambda_result() const { return last_lambda_; }

 private:
  void precompute_unit_source() {
    const int nn = block_->part.nn();
    x_unit_.assign(nn, 0.0);
    if (nn > 0 && norm2(block_->j_unit) > 0.0)
      x_unit_ = solve_kn(block_->j_unit, Vector(nn, 0.0), "unit source precompute");
    block_->k_cn.multiply(x_unit_, kcn_x_unit_);
  }

  Vector solve_kn(const Vector& rhs, Vector x0, const char* context) {
    const int nn = block_->part.nn();
    auto res = pcg_jacobi(
        nn, [this](const Vector& x, Vector& y) { block_->k_n.multiply(x, y); }, kn_diag_, rhs,
        std::move(x0), opts_.pcg);
    ++counters_.pcg_solves;
    counters_.pcg_iterations += res.stats.iterations;
    last_inner_iterations_ = res.stats.iterations;
    if (!res.stats.converged)
      throw std::runtime_error(std::string("SchurOdeOperator: inner PCG did not converge in ") + context +
                               " (rel residual " + std::to_string(res.stats.rel_residual) + " after " +
                               std::to_string(res.stats.iterations) + " iterations)");
    return std::move(res.x);
  }

  const BlockSystem* block_;
  const EnvelopeCholesky* mc_;
  std::function<double(double)> i_s_;
  SchurOperatorOptions opts_;
  Vector kn_diag_;
  PodBasis pod_;
  SchurCounters counters_;
  Vector x_unit_;       // K_n^+ j_unit
  Vector kcn_x_unit_;   // K_cn K_n^+ j_unit
  Vector eigenvector_;  // warm start across lambda estimates
  Vector eig_warm_;     // warm start across K_S applications
  PowerIterationResult last_lambda_;
  int last_inner_iterations_ = 0;
  Vector scratch_rhs_, scratch_g_, scratch_tmp_, scratch_ks_;
};

}  // namespace mqs
