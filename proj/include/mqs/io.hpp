#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mqs/fem.hpp"
#include "mqs/integrate.hpp"
#include "mqs/mesh.hpp"

namespace mqs {

inline std::string fmt_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// legacy ASCII VTK
// ---------------------------------------------------------------------------

namespace detail {

inline void vtk_mesh_preamble(std::ofstream& out, const Mesh& mesh, const std::string& title) {
  out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.num_vertices() << " double\n";
  for (const auto& p : mesh.vertices) out << fmt_g17(p[0]) << " " << fmt_g17(p[1]) << " 0\n";
  out << "CELLS " << mesh.num_triangles() << " " << mesh.num_triangles() * 4 << "\n";
  for (const auto& t : mesh.triangles) out << "3 " << t.v[0] << " " << t.v[1] << " " << t.v[2] << "\n";
  out << "CELL_TYPES " << mesh.num_triangles() << "\n";
  for (int t = 0; t < mesh.num_triangles(); ++t) out << "5\n";
}

}  // namespace detail

inline void write_mesh_vtk(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  detail::vtk_mesh_preamble(out, mesh, "mesh");
  out << "CELL_DATA " << mesh.num_triangles() << "\nSCALARS region int 1\nLOOKUP_TABLE default\n";
  for (Region r : mesh.region) out << static_cast<int>(r) << "\n";
}

// Field snapshot: vertex potential values plus per-element flux density.
inline void write_field_vtk(const Mesh& mesh, const DofPartition& part, const Vector& full_state,
                            const std::vector<std::array<double, 2>>& b_field, const std::string& path) {
  if (static_cast<int>(full_state.size()) != part.total)
    throw std::invalid_argument("write_field_vtk: state size does not match the partition");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  detail::vtk_mesh_preamble(out, mesh, "field snapshot");
  out << "POINT_DATA " << mesh.num_vertices() << "\nSCALARS a_z double 1\nLOOKUP_TABLE default\n";
  for (int v = 0; v < mesh.num_vertices(); ++v) out << fmt_g17(full_state[v]) << "\n";
  out << "CELL_DATA " << mesh.num_triangles() << "\nSCALARS region int 1\nLOOKUP_TABLE default\n";
  for (Region r : mesh.region) out << static_cast<int>(r) << "\n";
  out << "VECTORS b double\n";
  for (const auto& b : b_field) out << fmt_g17(b[0]) << " " << fmt_g17(b[1]) << " 0\n";
}

// ---------------------------------------------------------------------------
// CSV time series (fixed schema shared by every scheme)
// ---------------------------------------------------------------------------

inline constexpr const char* kCsvHeader =
    "step,t,tau,i_source,probe_S1,probe_S2,probe_S3,f_evals,pcg_iters,matrix_updated,lambda_max";

inline void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << kCsvHeader << "\n";
  for (const StepRecord& r : traj.records) {
    if (r.probes.size() != 3)
      throw std::runtime_error("write_trajectory_csv: schema requires exactly 3 probes, got " +
                               std::to_string(r.probes.size()));
    out << r.step << "," << fmt_g17(r.t) << "," << fmt_g17(r.tau) << "," << fmt_g17(r.i_source);
    for (double p : r.probes) out << "," << fmt_g17(p);
    out << "," << r.f_evals << "," << r.pcg_iters << "," << r.updates_since_last << ","
        << fmt_g17(r.lambda_max) << "\n";
  }
}

inline std::string format_summary(const std::string& name, const RunSummary& s) {
  std::ostringstream out;
  out << "scheme:             " << name << "\n"
      << "completed:          " << (s.completed ? "yes" : "no") << "\n";
  if (!s.completed) out << "error:              " << s.error << " (step " << s.failed_step << ")\n";
  out << "steps:              " << s.steps << "\n"
      << "f evaluations:      " << s.f_evaluations << "\n"
      << "pcg iterations:     " << s.pcg_iterations << "\n"
      << "matrix updates:     " << s.matrix_updates << "\n"
      << "lambda estimations: " << s.lambda_estimations << "\n"
      << "wall time [s]:      " << s.wall_seconds << "\n";
  return out.str();
}

}  // namespace mqs
