#pragma once

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mqs/config.hpp"
#include "mqs/fem.hpp"
#include "mqs/integrate.hpp"
#include "mqs/mesh.hpp"
#include "mqs/schur.hpp"
#include "mqs/sparse.hpp"

namespace mqs {

// Everything a run needs, built once per configuration: mesh, materials,
// block operators, conductivity factorization, probe layout. One instance can
// serve several schemes in sequence; each run starts from the zero-state
// stiffness matrix again.
struct Simulation {
  RunConfig config;
  Mesh mesh;
  Materials materials;
  Excitation excitation;
  std::vector<ProbeSpec> probes;
  BlockSystem block;
  std::unique_ptr<EnvelopeCholesky> mc_factor;

  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;
  Simulation(Simulation&&) = default;
  Simulation() = default;
};

inline Simulation build_simulation(const RunConfig& cfg) {
  cfg.validate();
  Simulation sim;
  sim.config = cfg;
  sim.mesh = generate_benchmark_mesh(cfg.resolution, cfg.make_geometry());
  sim.materials = cfg.make_materials();
  sim.excitation = cfg.make_excitation();
  sim.probes = cfg.make_probes();
  sim.block = assemble_block_system(sim.mesh, cfg.order, sim.materials, {}, Gauge::DirichletBoundary,
                                    cfg.coil_turns);
  if (sim.block.part.nc() > 0) sim.mc_factor = std::make_unique<EnvelopeCholesky>(sim.block.m_c);
  return sim;
}

inline ProbeFn make_probe_fn(const Simulation& sim) {
  return [&sim](double, const Vector& a_c, const Vector& a_n) {
    const Vector full = expand_state(sim.block.part, a_c, a_n);
    const auto b = compute_flux_density(sim.mesh, sim.block.part, full);
    std::vector<double> values;
    values.reserve(sim.probes.size());
    for (const ProbeSpec& p : sim.probes) values.push_back(probe_average(sim.mesh, b, p.rect));
    return values;
  };
}

// empty for state-independent materials: the assembly would reproduce the
// same matrix, so no refresh is ever scheduled
inline KcUpdateFn make_update_fn(Simulation& sim) {
  if (!sim.materials.nonlinear()) return {};
  return [&sim](const Vector& a_c) { reassemble_kc(sim.block, sim.materials, a_c); };
}

inline void reset_matrix_state(Simulation& sim) {
  reassemble_kc(sim.block, sim.materials, Vector(sim.block.part.nc(), 0.0));
}

inline Trajectory run_scheme(Simulation& sim, Scheme scheme) {
  const RunConfig& cfg = sim.config;
  reset_matrix_state(sim);
  if (scheme.kind == SchemeKind::Implicit) {
    ImplicitOracleConfig oc;
    oc.end_time = cfg.end_time;
    oc.output_dt = cfg.output_dt;
    oc.tau = cfg.implicit_dt;
    oc.picard_tol = cfg.picard_tol;
    oc.picard_max_iter = cfg.picard_max_iter;
    oc.pcg.rel_tol = cfg.pcg_tol;
    oc.pcg.max_iter = cfg.pcg_max_iter;
    oc.nonlinear = sim.materials.nonlinear();
    return implicit_euler_oracle(oc, sim.block, sim.materials, sim.excitation, make_probe_fn(sim));
  }
  SchurOdeOperator op(&sim.block, sim.mc_factor.get(), sim.excitation, cfg.make_operator_options());
  ExplicitRunConfig rc;
  rc.end_time = cfg.end_time;
  rc.output_dt = cfg.output_dt;
  rc.update_tol = cfg.update_tol;
  rc.safety = cfg.safety;
  rc.lambda_inflation = cfg.lambda_inflation;
  return run_explicit(rc, op, scheme, make_probe_fn(sim), make_update_fn(sim));
}

// ---------------------------------------------------------------------------
// stability survey: spectral estimate, step bounds and predicted effort
// ---------------------------------------------------------------------------

struct StabilityReport {
  double lambda_raw = 0.0;
  double lambda_inflated = 0.0;
  double end_time = 0.0;
  double safety = 0.0;
  struct Row {
    std::string scheme;
    double tau_raw = 0.0;   // bound at the inflated spectral estimate
    double tau_safe = 0.0;  // with the safety factor applied
    long steps = 0;
    long f_evaluations = 0;
  };
  std::vector<Row> rows;
};

inline StabilityReport make_stability_report(Simulation& sim, const std::vector<int>& stage_counts = {2, 5, 10,
                                                                                                      20, 50}) {
  const RunConfig& cfg = sim.config;
  reset_matrix_state(sim);
  SchurOdeOperator op(&sim.block, sim.mc_factor.get(), sim.excitation, cfg.make_operator_options());
  StabilityReport rep;
  rep.lambda_raw = op.estimate_lambda_max();
  rep.lambda_inflated = cfg.lambda_inflation * rep.lambda_raw;
  rep.end_time = cfg.end_time;
  rep.safety = cfg.safety;
  auto add = [&](const std::string& name, double tau_raw, long evals_per_step) {
    StabilityReport::Row row;
    row.scheme = name;
    row.tau_raw = tau_raw;
    row.tau_safe = cfg.safety * tau_raw;
    row.steps = cfg.end_time > 0 ? static_cast<long>(std::ceil(cfg.end_time / row.tau_safe - 1e-12)) : 0;
    row.f_evaluations = row.steps * evals_per_step;
    rep.rows.push_back(row);
  };
  if (rep.lambda_inflated > 0.0) {
    add("euler", euler_max_step(rep.lambda_inflated), 1);
    for (int s : stage_counts) add("rkc" + std::to_string(s), rkc_max_step(s, rep.lambda_inflated), s);
  }
  return rep;
}

inline std::string format_stability_report(const StabilityReport& rep) {
  std::ostringstream out;
  out << "lambda_max estimate:  " << rep.lambda_raw << "\n"
      << "inflated for bounds:  " << rep.lambda_inflated << "\n"
      << "end time [s]:         " << rep.end_time << "\n"
      << "safety factor:        " << rep.safety << "\n\n";
  out << "scheme      tau_max_raw     tau_safe        steps      f_evals\n";
  char line[160];
  for (const auto& r : rep.rows) {
    std::snprintf(line, sizeof(line), "%-10s  %-14.6g  %-14.6g  %-9ld  %-9ld\n", r.scheme.c_str(), r.tau_raw,
                  r.tau_safe, r.steps, r.f_evaluations);
    out << line;
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// multi-scheme comparison against a reference trajectory
// ---------------------------------------------------------------------------

struct CompareReport {
  struct Entry {
    std::string name;
    Trajectory trajectory;
    double err_vs_ref = 0.0;
  };
  std::vector<Entry> entries;
  int reference = 0;  // index into entries
};

inline CompareReport run_compare(Simulation& sim, const std::vector<Scheme>& schemes) {
  if (schemes.size() < 2) throw std::invalid_argument("run_compare: need at least two schemes");
  CompareReport rep;
  for (const Scheme& s : schemes) {
    CompareReport::Entry e;
    e.name = s.name();
    e.trajectory = run_scheme(sim, s);
    rep.entries.push_back(std::move(e));
  }
  rep.reference = 0;
  for (std::size_t i = 0; i < schemes.size(); ++i)
    if (schemes[i].kind == SchemeKind::Implicit) {
      rep.reference = static_cast<int>(i);
      break;
    }
  const Trajectory& ref = rep.entries[rep.reference].trajectory;
  for (auto& e : rep.entries) e.err_vs_ref = max_relative_deviation(ref, e.trajectory);
  return rep;
}

inline std::string format_compare_report(const CompareReport& rep) {
  std::ostringstream out;
  out << "reference: " << rep.entries[rep.reference].name << "\n\n";
  out << "scheme      err_vs_ref      steps      f_evals    pcg_iters    updates    wall_s\n";
  char line[200];
  for (const auto& e : rep.entries) {
    const RunSummary& s = e.trajectory.summary;
    std::snprintf(line, sizeof(line), "%-10s  %-14.6g  %-9ld  %-9ld  %-11ld  %-9ld  %.3f\n", e.name.c_str(),
                  e.err_vs_ref, s.steps, s.f_evaluations, s.pcg_iterations, s.matrix_updates, s.wall_seconds);
    out << line;
  }
  out << "\npairwise max-norm relative deviations:\n";
  for (std::size_t i = 0; i < rep.entries.size(); ++i)
    for (std::size_t j = i + 1; j < rep.entries.size(); ++j) {
      const double err = max_relative_deviation(rep.entries[i].trajectory, rep.entries[j].trajectory);
      std::snprintf(line, sizeof(line), "  %-10s vs %-10s : %.6g\n", rep.entries[i].name.c_str(),
                    rep.entries[j].name.c_str(), err);
      out << line;
    }
  return out.str();
}

}  // namespace mqs
