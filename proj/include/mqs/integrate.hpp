#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mqs/fem.hpp"
#include "mqs/la.hpp"
#include "mqs/schur.hpp"
#include "mqs/sparse.hpp"

namespace mqs {

class InstabilityError : public std::runtime_error {
 public:
  InstabilityError(long step, const std::string& what) : std::runtime_error(what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

// ---------------------------------------------------------------------------
// Runge-Kutta-Chebyshev coefficients
// ---------------------------------------------------------------------------

// All scalars of the s-stage scheme with damping eps = 2/13:
//   w0 = 1 + eps / s^2,            w1 = T_s'(w0) / T_s''(w0),
//   b_j = T_j''(w0) / T_j'(w0)^2   (j >= 2),  b_0 = b_1 = b_2,
//   mu~_1 = b_1 w1,
//   mu_j  = 2 b_j w0 / b_{j-1},    nu_j = -b_j / b_{j-2},
//   mu~_j = 2 b_j w1 / b_{j-1},    gamma~_j = -(1 - b_{j-1} T_{j-1}(w0)) mu~_j,
//   c_j = w1 T_j''(w0) / T_j'(w0)  (2 <= j <= s-1),  c_1 = c_2 / T_2'(w0),  c_s = 1.
// Chebyshev values come from the three-term recurrences for T, T', T'' so the
// formulas stay exact for any stage count.
struct RkcCoefficients {
  int s = 0;
  double eps = 2.0 / 13.0;
  double w0 = 0.0, w1 = 0.0;
  std::vector<double> b;            // 0..s
  std::vector<double> c;            // 0..s, c[0] = 0
  double mu1_tilde = 0.0;
  std::vector<double> mu, nu, mu_tilde, gamma_tilde;  // valid for 2..s

  static RkcCoefficients compute(int stages) {
    if (stages < 2) throw std::invalid_argument("RkcCoefficients: stage count must be >= 2");
    const int s = stages;
    RkcCoefficients k;
    k.s = s;
    const long double eps = 2.0L / 13.0L;
    const long double w0 = 1.0L + eps / (static_cast<long double>(s) * s);

    std::vector<long double> t(s + 1), tp(s + 1), tpp(s + 1);
    t[0] = 1.0L;
    tp[0] = 0.0L;
    tpp[0] = 0.0L;
    t[1] = w0;
    tp[1] = 1.0L;
    tpp[1] = 0.0L;
    for (int j = 2; j <= s; ++j) {
      t[j] = 2.0L * w0 * t[j - 1] - t[j - 2];
      tp[j] = 2.0L * t[j - 1] + 2.0L * w0 * tp[j - 1] - tp[j - 2];
      tpp[j] = 4.0L * tp[j - 1] + 2.0L * w0 * tpp[j - 1] - tpp[j - 2];
    }
    const long double w1 = tp[s] / tpp[s];

    std::vector<long double> b(s + 1);
    for (int j = 2; j <= s; ++j) b[j] = tpp[j] / (tp[j] * tp[j]);
    b[0] = b[1] = b[2];

    k.w0 = static_cast<double>(w0);
    k.w1 = static_cast<double>(w1);
    k.b.resize(s + 1);
    for (int j = 0; j <= s; ++j) k.b[j] = static_cast<double>(b[j]);
    k.mu1_tilde = static_cast<double>(b[1] * w1);
    k.mu.assign(s + 1, 0.0);
    k.nu.assign(s + 1, 0.0);
    k.mu_tilde.assign(s + 1, 0.0);
    k.gamma_tilde.assign(s + 1, 0.0);
    for (int j = 2; j <= s; ++j) {
      k.mu[j] = static_cast<double>(2.0L * b[j] * w0 / b[j - 1]);
      k.nu[j] = static_cast<double>(-b[j] / b[j - 2]);
      k.mu_tilde[j] = static_cast<double>(2.0L * b[j] * w1 / b[j - 1]);
      k.gamma_tilde[j] = static_cast<double>(-(1.0L - b[j - 1] * t[j - 1]) * (2.0L * b[j] * w1 / b[j - 1]));
    }
    k.c.assign(s + 1, 0.0);
    k.c[s] = 1.0;
    for (int j = 2; j <= s - 1; ++j) k.c[j] = static_cast<double>(w1 * tpp[j] / tp[j]);
    k.c[1] = static_cast<double>(static_cast<long double>(k.c[2]) / tp[2]);
    return k;
  }
};

// ---------------------------------------------------------------------------
// stability bounds and the matrix freeze criterion
// ---------------------------------------------------------------------------

// largest stable explicit Euler step, tau <= 2 / lambda_max
inline double euler_max_step(double lambda_max) {
  if (!(lambda_max > 0.0)) throw std::invalid_argument("euler_max_step: lambda_max must be positive");
  return 2.0 / lambda_max;
}

// largest stable s-stage step, tau <= 0.653 s^2 / lambda_max
inline double rkc_max_step(int s, double lambda_max) {
  if (s < 2) throw std::invalid_argument("rkc_max_step: stage count must be >= 2");
  if (!(lambda_max > 0.0)) throw std::invalid_argument("rkc_max_step: lambda_max must be positive");
  return 0.653 * static_cast<double>(s) * s / lambda_max;
}

// true when the state has drifted more than tol (relative, Euclidean) from
// the reference the frozen matrix was assembled at
inline bool needs_matrix_update(const Vector& a_star, const Vector& a_i, double tol) {
  const double ref = norm2(a_star);
  if (ref == 0.0) return true;  // degenerate reference: always refresh
  Vector diff = a_i;
  axpy(-1.0, a_star, diff);
  return norm2(diff) / ref > tol;
}

// ---------------------------------------------------------------------------
// single-step kernels (templated on the right-hand side: rhs(t, a, out))
// ---------------------------------------------------------------------------

template <class Rhs>
void euler_step(double& t, Vector& a, double tau, Rhs&& rhs, Vector& work, long step_index = 0) {
  if (!(tau > 0.0)) throw std::invalid_argument("euler_step: tau must be positive");
  rhs(t, a, work);
  axpy(tau, work, a);
  t += tau;
  if (!all_finite(a)) throw InstabilityError(step_index, "non-finite state after explicit Euler step");
}

struct RkcWorkspace {
  Vector yjm1, yjm2, ynew, f0, fj;
};

// One s-stage step:
//   y_0 = a,  y_1 = y_0 + mu~_1 tau f(t, y_0),
//   y_j = (1 - mu_j - nu_j) y_0 + mu_j y_{j-1} + nu_j y_{j-2}
//         + mu~_j tau f(t + c_{j-1} tau, y_{j-1}) + gamma~_j tau f(t, y_0),
//   a <- y_s.
// The right-hand side sees the same frozen stiffness matrix at every stage.
template <class Rhs>
void rkc_step(double& t, Vector& a, double tau, const RkcCoefficients& k, Rhs&& rhs, RkcWorkspace& ws,
              long step_index = 0) {
  if (!(tau > 0.0)) throw std::invalid_argument("rkc_step: tau must be positive");
  const std::size_t n = a.size();
  rhs(t, a, ws.f0);
  ws.yjm2 = a;
  ws.yjm1 = a;
  axpy(k.mu1_tilde * tau, ws.f0, ws.yjm1);
  if (!all_finite(ws.yjm1)) throw InstabilityError(step_index, "non-finite stage value in step stage 1");
  ws.ynew.resize(n);
  for (int j = 2; j <= k.s; ++j) {
    rhs(t + k.c[j - 1] * tau, ws.yjm1, ws.fj);
    const double c0 = 1.0 - k.mu[j] - k.nu[j];
    const double cm = k.mu[j], cn = k.nu[j];
    const double cf = k.mu_tilde[j] * tau, cg = k.gamma_tilde[j] * tau;
    for (std::size_t i = 0; i < n; ++i)
      ws.ynew[i] = c0 * a[i] + cm * ws.yjm1[i] + cn * ws.yjm2[i] + cf * ws.fj[i] + cg * ws.f0[i];
    if (!all_finite(ws.ynew))
      throw InstabilityError(step_index, "non-finite stage value in step stage " + std::to_string(j));
    std::swap(ws.yjm2, ws.yjm1);
    std::swap(ws.yjm1, ws.ynew);
  }
  a = ws.yjm1;
  t += tau;
}

// ---------------------------------------------------------------------------
// run drivers
// ---------------------------------------------------------------------------

enum class SchemeKind { Euler, Rkc, Implicit };

struct Scheme {
  SchemeKind kind = SchemeKind::Euler;
  int stages = 10;

  static Scheme euler() { return {SchemeKind::Euler, 0}; }
  static Scheme rkc(int s) { return {SchemeKind::Rkc, s}; }
  static Scheme implicit() { return {SchemeKind::Implicit, 0}; }

  std::string name() const {
    switch (kind) {
      case SchemeKind::Euler: return "euler";
      case SchemeKind::Rkc: return "rkc" + std::to_string(stages);
      case SchemeKind::Implicit: return "implicit";
    }
    return "?";
  }
};

struct StepRecord {
  long step = 0;
  double t = 0.0;
  double tau = 0.0;
  double i_source = 0.0;
  std::vector<double> probes;
  long f_evals = 0;     // cumulative
  long pcg_iters = 0;   // cumulative
  long updates_since_last = 0;
  double lambda_max = 0.0;
};

struct RunSummary {
  long steps = 0;
  long f_evaluations = 0;
  long pcg_iterations = 0;
  long matrix_updates = 0;
  long lambda_estimations = 0;
  double wall_seconds = 0.0;
  bool completed = true;
  long failed_step = -1;
  std::string error;
};

struct Trajectory {
  std::vector<StepRecord> records;
  RunSummary summary;
};

using ProbeFn = std::function<std::vector<double>(double t, const Vector& a_c, const Vector& a_n)>;
using KcUpdateFn = std::function<void(const Vector& a_c)>;

struct ExplicitRunConfig {
  double end_time = 0.15;     // s
  double output_dt = 0.005;   // probe cadence; records land on the first step past each mark
  double update_tol = 0.005;  // matrix freeze criterion
  double safety = 0.9;        // applied to the raw stability bound
  double lambda_inflation = 1.05;  // guards against an underestimated spectrum
};

// Fixed-step explicit integration of the reduced system. Per iteration:
// re-estimate the spectral bound if stale, take one step with the frozen
// stiffness matrix, evaluate the freeze criterion on the full step, refresh
// the matrix (and mark the bound stale) when it trips, record probes at
// output marks. `update_kc` may be empty for state-independent materials, in
// which case no updates ever happen.
inline Trajectory run_explicit(const ExplicitRunConfig& cfg, SchurOdeOperator& op, Scheme scheme,
                               const ProbeFn& probe = {}, const KcUpdateFn& update_kc = {}) {
  if (scheme.kind == SchemeKind::Implicit) throw std::invalid_argument("run_explicit: scheme must be explicit");
  const auto wall0 = std::chrono::steady_clock::now();
  Trajectory traj;
  RunSummary& sum = traj.summary;
  const int n = op.dim();
  Vector a(n, 0.0), a_star = a;
  double t = 0.0;
  double lambda = 0.0, tau = 0.0;
  bool lambda_stale = true;
  long step = 0;
  long updates_since_record = 0;
  RkcCoefficients coeffs;
  if (scheme.kind == SchemeKind::Rkc) coeffs = RkcCoefficients::compute(scheme.stages);
  RkcWorkspace ws;
  Vector work;

  const SchurCounters& ctr = op.counters();
  auto record = [&] {
    StepRecord r;
    r.step = step;
    r.t = t;
    r.tau = tau;
    r.i_source = op.source_current(t);
    Vector a_n = op.recover_an(a, t);
    if (probe) r.probes = probe(t, a, a_n);
    r.f_evals = ctr.f_evaluations;
    r.pcg_iters = ctr.pcg_iterations;
    r.updates_since_last = updates_since_record;
    updates_since_record = 0;
    r.lambda_max = lambda;
    traj.records.push_back(std::move(r));
  };

  try {
    if (cfg.end_time <= 0.0) {
      record();
    } else {
      const double end = cfg.end_time;
      double next_output = cfg.output_dt > 0.0 ? cfg.output_dt : std::numeric_limits<double>::infinity();
      bool emitted_initial = false;
      while (t < end * (1.0 - 1e-12)) {
        if (lambda_stale) {
          lambda = op.estimate_lambda_max();
          const double inflated = cfg.lambda_inflation * lambda;
          double tau_max = std::numeric_limits<double>::infinity();
          if (inflated > 0.0)
            tau_max = scheme.kind == SchemeKind::Euler ? euler_max_step(inflated)
                                                       : rkc_max_step(scheme.stages, inflated);
          tau = std::min(cfg.safety * tau_max, end);
          lambda_stale = false;
        }
        if (!emitted_initial) {
          record();
          emitted_initial = true;
        }
        const double tau_step = std::min(tau, end - t);
        const std::uint64_t frozen_version = op.kc_version();
        auto rhs = [&op, frozen_version](double tt, const Vector& aa, Vector& out) {
          if (op.kc_version() != frozen_version)
            throw std::logic_error("stiffness matrix was replaced inside a time step");
          op.apply_f(tt, aa, out);
        };
        if (scheme.kind == SchemeKind::Euler) {
          euler_step(t, a, tau_step, rhs, work, step);
        } else {
          rkc_step(t, a, tau_step, coeffs, rhs, ws, step);
        }
        ++step;
        ++sum.steps;
        if (update_kc && needs_matrix_update(a_star, a, cfg.update_tol)) {
          update_kc(a);
          a_star = a;
          ++sum.matrix_updates;
          ++updates_since_record;
          lambda_stale = true;
        }
        if (t >= next_output * (1.0 - 1e-12) || t >= end * (1.0 - 1e-12)) {
          record();
          while (next_output <= t * (1.0 + 1e-12)) next_output += cfg.output_dt;
        }
      }
    }
  } catch (const InstabilityError& e) {
    sum.completed = false;
    sum.failed_step = e.step();
    sum.error = e.what();
  }
  sum.f_evaluations = ctr.f_evaluations;
  sum.pcg_iterations = ctr.pcg_iterations;
  sum.lambda_estimations = ctr.lambda_estimations;
  sum.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  return traj;
}

struct ImplicitOracleConfig {
  double end_time = 0.15;
  double output_dt = 0.005;
  double tau = 1e-3;
  double picard_tol = 1e-8;
  int picard_max_iter = 50;
  PcgOptions pcg;
  bool nonlinear = true;
  Vector initial_a_c;  // zeros when empty
  Vector initial_a_n;
};

// Backward Euler on the unreduced block system
//   [M/tau + K_c(a_c)  K_cn ] [a_c]   [M a_c^i / tau ]
//   [K_cn^T            K_n  ] [a_n] = [j(t^{i+1})    ]
// with Picard iteration on the material state (stiffness refreshed from the
// latest iterate each pass). Serves as the in-repo reference solution the
// explicit schemes are compared against; it shares no code path with the
// reduced-system evaluator.
inline Trajectory implicit_euler_oracle(const ImplicitOracleConfig& cfg, BlockSystem& block,
                                        const Materials& mats, const std::function<double(double)>& i_s,
                                        const ProbeFn& probe = {}) {
  if (!(cfg.tau > 0.0)) throw std::invalid_argument("implicit_euler_oracle: tau must be positive");
  const auto wall0 = std::chrono::steady_clock::now();
  Trajectory traj;
  RunSummary& sum = traj.summary;
  const int nc = block.part.nc();
  const int nn = block.part.nn();
  Vector a_c = cfg.initial_a_c.empty() ? Vector(nc, 0.0) : cfg.initial_a_c;
  Vector a_n = cfg.initial_a_n.empty() && nn > 0 ? Vector(nn, 0.0) : cfg.initial_a_n;
  if (static_cast<int>(a_c.size()) != nc || static_cast<int>(a_n.size()) != nn)
    throw std::invalid_argument("implicit_euler_oracle: initial state dimension mismatch");
  double t = 0.0;
  long step = 0;
  long solves = 0, pcg_iters = 0;
  long updates_since_record = 0;

  auto record = [&](double tau_used) {
    StepRecord r;
    r.step = step;
    r.t = t;
    r.tau = tau_used;
    r.i_source = i_s(t);
    if (probe) r.probes = probe(t, a_c, a_n);
    r.f_evals = solves;
    r.pcg_iters = pcg_iters;
    r.updates_since_last = updates_since_record;
    updates_since_record = 0;
    r.lambda_max = 0.0;
    traj.records.push_back(std::move(r));
  };

  record(cfg.tau);
  if (cfg.end_time > 0.0) {
    double next_output = cfg.output_dt > 0.0 ? cfg.output_dt : std::numeric_limits<double>::infinity();
    Vector sol(nc + nn, 0.0), rhs(nc + nn, 0.0), xc(nc), xn(nn), yc(nc), yn(nn), tmp;
    while (t < cfg.end_time * (1.0 - 1e-12)) {
      const double tau = std::min(cfg.tau, cfg.end_time - t);
      const double t_next = t + tau;
      block.m_c.multiply(a_c, yc);
      for (int i = 0; i < nc; ++i) rhs[i] = yc[i] / tau;
      const double source = i_s(t_next);
      for (int i = 0; i < nn; ++i) rhs[nc + i] = source * block.j_unit[i];

      Vector prev = sol;  // previous step's solution is the initial iterate
      for (int i = 0; i < nc; ++i) prev[i] = a_c[i];
      for (int i = 0; i < nn; ++i) prev[nc + i] = a_n[i];
      sol = prev;

      std::vector<double> change_history;
      int picard = 0;
      for (;;) {
        ++picard;
        if (cfg.nonlinear) {
          for (int i = 0; i < nc; ++i) xc[i] = sol[i];
          reassemble_kc(block, mats, xc);
          ++updates_since_record;
          ++sum.matrix_updates;
        }
        Vector diag(nc + nn);
        {
          const Vector dm = block.m_c.diagonal();
          const Vector dk = block.k_c.diagonal();
          for (int i = 0; i < nc; ++i) diag[i] = dm[i] / tau + dk[i];
          const Vector dn = block.k_n.diagonal();
          for (int i = 0; i < nn; ++i) diag[nc + i] = dn[i];
        }
        auto apply = [&](const Vector& x, Vector& y) {
          y.assign(nc + nn, 0.0);
          for (int i = 0; i < nc; ++i) xc[i] = x[i];
          for (int i = 0; i < nn; ++i) xn[i] = x[nc + i];
          block.m_c.multiply(xc, yc);
          block.k_c.multiply(xc, tmp);
          for (int i = 0; i < nc; ++i) y[i] = yc[i] / tau + tmp[i];
          block.k_cn.multiply(xn, tmp);
          for (int i = 0; i < nc; ++i) y[i] += tmp[i];
          block.k_cn.multiply_transpose(xc, tmp);
          for (int i = 0; i < nn; ++i) y[nc + i] = tmp[i];
          block.k_n.multiply(xn, yn);
          for (int i = 0; i < nn; ++i) y[nc + i] += yn[i];
        };
        auto res = pcg_jacobi(nc + nn, apply, diag, rhs, sol, cfg.pcg);
        ++solves;
        pcg_iters += res.stats.iterations;
        if (!res.stats.converged)
          throw std::runtime_error("implicit_euler_oracle: block PCG did not converge at t = " +
                                   std::to_string(t_next) + " (rel residual " +
                                   std::to_string(res.stats.rel_residual) + ")");
        sol = std::move(res.x);
        if (!cfg.nonlinear) break;
        Vector diff = sol;
        axpy(-1.0, prev, diff);
        const double change = norm2(diff) / std::max(norm2(sol), 1e-300);
        change_history.push_back(change);
        prev = sol;
        if (change <= cfg.picard_tol) break;
        if (picard >= cfg.picard_max_iter) {
          std::string history;
          char item[32];
          for (double ch : change_history) {
            std::snprintf(item, sizeof(item), " %.3e", ch);
            history += item;
          }
          throw std::runtime_error("implicit_euler_oracle: Picard iteration did not converge at t = " +
                                   std::to_string(t_next) + "; relative changes per iterate:" + history);
        }
      }
      for (int i = 0; i < nc; ++i) a_c[i] = sol[i];
      for (int i = 0; i < nn; ++i) a_n[i] = sol[nc + i];
      t = t_next;
      ++step;
      ++sum.steps;
      if (t >= next_output * (1.0 - 1e-12) || t >= cfg.end_time * (1.0 - 1e-12)) {
        record(tau);
        while (next_output <= t * (1.0 + 1e-12)) next_output += cfg.output_dt;
      }
    }
  }
  sum.f_evaluations = solves;
  sum.pcg_iterations = pcg_iters;
  sum.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  return traj;
}

// ---------------------------------------------------------------------------
// trajectory comparison
// ---------------------------------------------------------------------------

// probe value at time t by linear interpolation between records
inline double interpolate_probe(const Trajectory& traj, std::size_t probe_index, double t) {
  const auto& recs = traj.records;
  if (recs.empty()) throw std::invalid_argument("interpolate_probe: empty trajectory");
  if (t <= recs.front().t) return recs.front().probes.at(probe_index);
  if (t >= recs.back().t) return recs.back().probes.at(probe_index);
  std::size_t hi = 1;
  while (recs[hi].t < t) ++hi;
  const auto& p = recs[hi - 1];
  const auto& q = recs[hi];
  const double w = (t - p.t) / (q.t - p.t);
  return p.probes.at(probe_index) + w * (q.probes.at(probe_index) - p.probes.at(probe_index));
}

// max over probes of  sup_t |ref - other| / sup_t |ref|, evaluated at the
// sample times the `other` trajectory actually computed (only the reference
// is interpolated, so a coarsely stepped trajectory is not penalized for the
// curvature between its own records)
inline double max_relative_deviation(const Trajectory& ref, const Trajectory& other) {
  if (ref.records.empty() || other.records.empty())
    throw std::invalid_argument("max_relative_deviation: empty trajectory");
  const std::size_t np = ref.records.front().probes.size();
  if (np == 0 || other.records.front().probes.size() != np)
    throw std::invalid_argument("max_relative_deviation: probe layout mismatch");
  const double t_end = std::min(ref.records.back().t, other.records.back().t) * (1.0 + 1e-12);
  double worst = 0.0;
  for (std::size_t p = 0; p < np; ++p) {
    double sup_ref = 0.0, sup_diff = 0.0;
    for (const StepRecord& rec : other.records) {
      if (rec.t > t_end) break;
      const double r = interpolate_probe(ref, p, rec.t);
      sup_ref = std::max(sup_ref, std::abs(r));
      sup_diff = std::max(sup_diff, std::abs(r - rec.probes.at(p)));
    }
    if (sup_ref > 0.0) worst = std::max(worst, sup_diff / sup_ref);
  }
  return worst;
}

}  // namespace mqs
