// Command-line front end for the 2D transient magneto-quasistatic solver.
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mqs/io.hpp"
#include "mqs/simulation.hpp"

namespace fs = std::filesystem;
using namespace mqs;

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::string scheme;
  int stages = -1;
  int order = -1;
  int resolution = -1;
  std::int64_t seed = -1;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "configuration file (TOML subset)");
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--scheme", scheme, "time integration scheme: euler | rkc | rkc<s> | implicit");
    cmd->add_option("--stages", stages, "stage count for rkc");
    cmd->add_option("--order", order, "finite element order (1 or 2)");
    cmd->add_option("--resolution", resolution, "cells across the plate's short side");
    cmd->add_option("--seed", seed, "random seed for the spectral estimator");
  }

  RunConfig build_config() const {
    RunConfig cfg;
    if (!config_path.empty()) cfg = RunConfig::from_file(config_path);
    if (!scheme.empty()) cfg.scheme = parse_scheme(scheme, stages > 0 ? stages : 10);
    if (stages > 0 && cfg.scheme.kind == SchemeKind::Rkc) cfg.scheme.stages = stages;
    if (order > 0) cfg.order = order;
    if (resolution > 0) cfg.resolution = resolution;
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    cfg.validate();
    return cfg;
  }
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
}

void dump_matrices(const Simulation& sim, const fs::path& dir) {
  write_matrix_market(sim.block.m_c, (dir / "m_c.mtx").string());
  write_matrix_market(sim.block.k_n, (dir / "k_n.mtx").string());
  write_matrix_market(sim.block.k_cn, (dir / "k_cn.mtx").string());
  write_matrix_market(sim.block.k_c, (dir / "k_c.mtx").string());
  write_matrix_market_vector(sim.block.j_unit, (dir / "j_unit.mtx").string());
}

int cmd_run(const CommonFlags& flags) {
  RunConfig cfg = flags.build_config();
  const fs::path dir(cfg.out_dir);
  fs::create_directories(dir);
  Simulation sim = build_simulation(cfg);
  if (cfg.write_matrices) dump_matrices(sim, dir);
  if (cfg.write_vtk) write_mesh_vtk(sim.mesh, (dir / "mesh.vtk").string());

  Trajectory traj;
  if (cfg.scheme.kind == SchemeKind::Implicit || !cfg.write_vtk) {
    traj = run_scheme(sim, cfg.scheme);
  } else {
    // wrap the probe callback so each output record also lands on disk
    reset_matrix_state(sim);
    SchurOdeOperator op(&sim.block, sim.mc_factor.get(), sim.excitation, cfg.make_operator_options());
    ExplicitRunConfig rc{cfg.end_time, cfg.output_dt, cfg.update_tol, cfg.safety, cfg.lambda_inflation};
    const ProbeFn base = make_probe_fn(sim);
    int snapshot = 0;
    ProbeFn probe = [&](double t, const Vector& a_c, const Vector& a_n) {
      const Vector full = expand_state(sim.block.part, a_c, a_n);
      const auto b = compute_flux_density(sim.mesh, sim.block.part, full);
      char name[64];
      std::snprintf(name, sizeof(name), "field_%04d.vtk", snapshot++);
      write_field_vtk(sim.mesh, sim.block.part, full, b, (dir / name).string());
      return base(t, a_c, a_n);
    };
    traj = run_explicit(rc, op, cfg.scheme, probe, make_update_fn(sim));
  }

  write_trajectory_csv(traj, (dir / "run.csv").string());
  const std::string summary = format_summary(cfg.scheme.name(), traj.summary);
  write_text(dir / "summary.txt", summary);
  std::cout << summary;
  std::cout << "csv: " << (dir / "run.csv").string() << "\n";
  return traj.summary.completed ? 0 : 1;
}

int cmd_stability(const CommonFlags& flags) {
  RunConfig cfg = flags.build_config();
  Simulation sim = build_simulation(cfg);
  const StabilityReport rep = make_stability_report(sim);
  const std::string text = format_stability_report(rep);
  std::cout << text;
  if (!cfg.out_dir.empty()) {
    fs::create_directories(cfg.out_dir);
    write_text(fs::path(cfg.out_dir) / "stability.txt", text);
  }
  return 0;
}

int cmd_compare(const CommonFlags& flags) {
  RunConfig cfg = flags.build_config();
  if (cfg.compare_schemes.size() < 2)
    throw std::runtime_error("compare: configure at least two schemes under [compare] schemes");
  std::vector<Scheme> schemes;
  for (const std::string& s : cfg.compare_schemes) schemes.push_back(parse_scheme(s));
  const fs::path dir(cfg.out_dir);
  fs::create_directories(dir);
  Simulation sim = build_simulation(cfg);
  const CompareReport rep = run_compare(sim, schemes);
  for (const auto& e : rep.entries) write_trajectory_csv(e.trajectory, (dir / (e.name + ".csv")).string());
  const std::string text = format_compare_report(rep);
  write_text(dir / "compare.txt", text);
  std::cout << text;
  for (const auto& e : rep.entries)
    if (!e.trajectory.summary.completed) return 1;
  return 0;
}

int cmd_mesh_dump(const CommonFlags& flags) {
  RunConfig cfg = flags.build_config();
  const fs::path dir(cfg.out_dir);
  fs::create_directories(dir);
  const Mesh mesh = generate_benchmark_mesh(cfg.resolution, cfg.make_geometry());
  write_mesh_vtk(mesh, (dir / "mesh.vtk").string());
  std::cout << "vertices:   " << mesh.num_vertices() << "\n"
            << "triangles:  " << mesh.num_triangles() << "\n"
            << "conductor:  " << mesh.count_region(Region::Conductor) << "\n"
            << "air:        " << mesh.count_region(Region::Air) << "\n"
            << "coil+:      " << mesh.count_region(Region::CoilPlus) << "\n"
            << "coil-:      " << mesh.count_region(Region::CoilMinus) << "\n"
            << "vtk: " << (dir / "mesh.vtk").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"2D transient magneto-quasistatic eddy-current solver"};
  app.require_subcommand(1);

  CommonFlags run_flags, stab_flags, cmp_flags, mesh_flags;
  CLI::App* run = app.add_subcommand("run", "run one transient simulation and write a CSV time series");
  run_flags.attach(run);
  CLI::App* stability = app.add_subcommand("stability", "report the spectral estimate and stable step sizes");
  stab_flags.attach(stability);
  CLI::App* compare = app.add_subcommand("compare", "run several schemes and compare probe trajectories");
  cmp_flags.attach(compare);
  CLI::App* mesh_dump = app.add_subcommand("mesh-dump", "write the benchmark mesh as legacy VTK");
  mesh_flags.attach(mesh_dump);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_flags);
    if (stability->parsed()) return cmd_stability(stab_flags);
    if (compare->parsed()) return cmd_compare(cmp_flags);
    if (mesh_dump->parsed()) return cmd_mesh_dump(mesh_flags);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
