#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mqs/la.hpp"
#include "mqs/material.hpp"
#include "mqs/mesh.hpp"
#include "mqs/parallel.hpp"
#include "mqs/sparse.hpp"

namespace mqs {

// ---------------------------------------------------------------------------
// quadrature on the reference triangle (barycentric points, weights sum to 1)
// ---------------------------------------------------------------------------

struct QuadRule {
  struct Point {
    double l0, l1, l2, w;
  };
  std::vector<Point> points;

  // exact for polynomials of total degree 2 (edge midpoints)
  static const QuadRule& degree2() {
    static const QuadRule rule{{{0.5, 0.5, 0.0, 1.0 / 3.0},
                                {0.0, 0.5, 0.5, 1.0 / 3.0},
                                {0.5, 0.0, 0.5, 1.0 / 3.0}}};
    return rule;
  }

  // exact for polynomials of total degree 4 (two symmetric orbits)
  static const QuadRule& degree4() {
    static const QuadRule rule = [] {
      QuadRule r;
      const double a1 = 0.445948490915965, w1 = 0.223381589678011;
      const double a2 = 0.091576213509771, w2 = 0.109951743655322;
      for (auto [a, w] : {std::pair{a1, w1}, std::pair{a2, w2}}) {
        r.points.push_back({a, a, 1 - 2 * a, w});
        r.points.push_back({a, 1 - 2 * a, a, w});
        r.points.push_back({1 - 2 * a, a, a, w});
      }
      return r;
    }();
    return rule;
  }

  static const QuadRule& for_order(int order) { return order == 1 ? degree2() : degree4(); }
};

// ---------------------------------------------------------------------------
// element geometry and Lagrange shape functions (orders 1 and 2)
// ---------------------------------------------------------------------------

struct ElementGeometry {
  double area = 0.0;
  std::array<std::array<double, 2>, 3> grad_lambda{};  // barycentric gradients
};

inline ElementGeometry element_geometry(const Mesh& mesh, int t) {
  const auto& v = mesh.triangles[t].v;
  const auto& p0 = mesh.vertices[v[0]];
  const auto& p1 = mesh.vertices[v[1]];
  const auto& p2 = mesh.vertices[v[2]];
  const double det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
  if (!(det > 0.0))
    throw std::runtime_error("element_geometry: triangle " + std::to_string(t) + " has non-positive area");
  ElementGeometry g;
  g.area = 0.5 * det;
  g.grad_lambda[0] = {(p1[1] - p2[1]) / det, (p2[0] - p1[0]) / det};
  g.grad_lambda[1] = {(p2[1] - p0[1]) / det, (p0[0] - p2[0]) / det};
  g.grad_lambda[2] = {(p0[1] - p1[1]) / det, (p1[0] - p0[0]) / det};
  return g;
}

inline int dofs_per_element(int order) { return order == 1 ? 3 : 6; }

// values of the nodal basis at a barycentric point
inline void shape_values(int order, double l0, double l1, double l2, std::array<double, 6>& phi) {
  if (order == 1) {
    phi[0] = l0;
    phi[1] = l1;
    phi[2] = l2;
    return;
  }
  phi[0] = l0 * (2 * l0 - 1);
  phi[1] = l1 * (2 * l1 - 1);
  phi[2] = l2 * (2 * l2 - 1);
  phi[3] = 4 * l0 * l1;
  phi[4] = 4 * l1 * l2;
  phi[5] = 4 * l2 * l0;
}

inline void shape_gradients(int order, const ElementGeometry& g, double l0, double l1, double l2,
                            std::array<std::array<double, 2>, 6>& grad) {
  const auto& gl = g.grad_lambda;
  if (order == 1) {
    grad[0] = gl[0];
    grad[1] = gl[1];
    grad[2] = gl[2];
    return;
  }
  for (int d = 0; d < 2; ++d) {
    grad[0][d] = (4 * l0 - 1) * gl[0][d];
    grad[1][d] = (4 * l1 - 1) * gl[1][d];
    grad[2][d] = (4 * l2 - 1) * gl[2][d];
    grad[3][d] = 4 * (l0 * gl[1][d] + l1 * gl[0][d]);
    grad[4][d] = 4 * (l1 * gl[2][d] + l2 * gl[1][d]);
    grad[5][d] = 4 * (l2 * gl[0][d] + l0 * gl[2][d]);
  }
}

// global degree-of-freedom ids of one element (vertices, then edge midpoints)
inline int element_dofs(const Mesh& mesh, int t, int order, std::array<int, 6>& dofs) {
  const auto& v = mesh.triangles[t].v;
  dofs[0] = v[0];
  dofs[1] = v[1];
  dofs[2] = v[2];
  if (order == 1) return 3;
  const auto& tab = mesh.edge_table();
  const int base = mesh.num_vertices();
  dofs[3] = base + tab.tri_edges[t][0];
  dofs[4] = base + tab.tri_edges[t][1];
  dofs[5] = base + tab.tri_edges[t][2];
  return 6;
}

// ---------------------------------------------------------------------------
// degree-of-freedom partition
// ---------------------------------------------------------------------------

enum class Gauge { DirichletBoundary, Neumann };

struct DofPartition {
  static constexpr std::int8_t kConductor = 0;
  static constexpr std::int8_t kNonConductor = 1;
  static constexpr std::int8_t kDirichlet = 2;

  int order = 1;
  int total = 0;
  std::vector<std::int8_t> kind;  // per global dof
  std::vector<int> local;         // block-local index (C or N), -1 for Dirichlet
  std::vector<int> c_dofs;        // block-local -> global
  std::vector<int> n_dofs;

  int nc() const { return static_cast<int>(c_dofs.size()); }
  int nn() const { return static_cast<int>(n_dofs.size()); }
};

inline DofPartition build_dof_partition(const Mesh& mesh, int order, Gauge gauge = Gauge::DirichletBoundary) {
  if (order != 1 && order != 2) throw std::invalid_argument("build_dof_partition: order must be 1 or 2");
  DofPartition part;
  part.order = order;
  const int nv = mesh.num_vertices();
  const int ne = order == 2 ? static_cast<int>(mesh.edge_table().edges.size()) : 0;
  part.total = nv + ne;
  part.kind.assign(part.total, DofPartition::kNonConductor);

  if (gauge == Gauge::DirichletBoundary) {
    for (int v = 0; v < nv; ++v)
      if (mesh.vertex_on_boundary[v]) part.kind[v] = DofPartition::kDirichlet;
    if (order == 2) {
      const auto& tab = mesh.edge_table();
      for (int e = 0; e < ne; ++e)
        if (tab.edge_on_boundary[e]) part.kind[nv + e] = DofPartition::kDirichlet;
    }
  }

  // conductor set: every non-Dirichlet basis function supported on a
  // conductor triangle (exactly the rows carrying conductivity mass)
  std::array<int, 6> dofs{};
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    if (mesh.region[t] != Region::Conductor) continue;
    const int nd = element_dofs(mesh, t, order, dofs);
    for (int i = 0; i < nd; ++i)
      if (part.kind[dofs[i]] != DofPartition::kDirichlet) part.kind[dofs[i]] = DofPartition::kConductor;
  }

  part.local.assign(part.total, -1);
  for (int d = 0; d < part.total; ++d) {
    if (part.kind[d] == DofPartition::kConductor) {
      part.local[d] = static_cast<int>(part.c_dofs.size());
      part.c_dofs.push_back(d);
    } else if (part.kind[d] == DofPartition::kNonConductor) {
      part.local[d] = static_cast<int>(part.n_dofs.size());
      part.n_dofs.push_back(d);
    }
  }
  return part;
}

// ---------------------------------------------------------------------------
// materials and the assembled block operators
// ---------------------------------------------------------------------------

struct Materials {
  double conductor_kappa = 1.0e7;  // S/m
  BHCurve conductor_curve = BHCurve::brauer(3.8, 2.17, 396.2);
  double air_reluctivity = vacuum_reluctivity;

  bool nonlinear() const { return conductor_curve.state_dependent(); }
};

// Operators of the semi-discrete system
//   [M_c 0; 0 0] d/dt [a_c; a_n] + [K_c(a_c) K_cn; K_cn^T K_n] [a_c; a_n] = [0; j]
// K_n and K_cn are constant; K_c carries the material state and is replaced
// wholesale by reassemble_kc.
struct BlockSystem {
  DofPartition part;
  SparseMatrix m_c;
  SparseMatrix k_n;
  SparseMatrix k_cn;
  SparseMatrix k_c;
  Vector j_unit;                 // load for a 1 A source current
  std::uint64_t kc_version = 0;

  // cached data for fast K_c refreshes
  struct QuadPoint {
    double weight = 0.0;                             // area-scaled quadrature weight
    std::array<std::array<double, 2>, 6> grads{};    // shape gradients at the point
  };
  struct ConductorElement {
    int ndof = 0;
    std::array<int, 6> c_local{};    // block-local C index, -1 for Dirichlet
    std::array<int, 36> slots{};     // CSR value slot in k_c, -1 when eliminated
    std::vector<QuadPoint> qp;
  };
  std::vector<ConductorElement> conductor_cache;
  Vector kc_fixed;  // state-independent values aligned with the k_c pattern
};

inline void reassemble_kc(BlockSystem& sys, const Materials& mats, const Vector& a_c);

namespace detail {

struct AssemblyBuffers {
  std::vector<Triplet> mc, kn, kcn, kc, kc_fixed;
  std::vector<std::pair<int, double>> load;  // N-block entries of j_unit
  std::vector<BlockSystem::ConductorElement> cache;
};

}  // namespace detail

// Assembles every block from scratch. `a_c` supplies the frozen state the
// reluctivity is evaluated at (empty means zero state). `coil_turns` scales
// the unit-current density turns * 1 A / coil area.
inline BlockSystem assemble_block_system(const Mesh& mesh, int order, const Materials& mats,
                                         const Vector& a_c_state = {},
                                         Gauge gauge = Gauge::DirichletBoundary, double coil_turns = 1.0) {
  BlockSystem sys;
  sys.part = build_dof_partition(mesh, order, gauge);
  const DofPartition& part = sys.part;
  const QuadRule& rule = QuadRule::for_order(order);
  const int nd = dofs_per_element(order);
  if (order == 2) mesh.edge_table();  // materialize before the parallel loop

  const double coil_area_plus = mesh.geometry.coil_plus.empty() ? 0.0 : mesh.geometry.coil_plus.area();
  const double coil_area_minus = mesh.geometry.coil_minus.empty() ? 0.0 : mesh.geometry.coil_minus.area();

  const std::size_t grain = 256;
  const std::size_t chunks = num_chunks_for(mesh.num_triangles(), grain);
  std::vector<detail::AssemblyBuffers> buffers(chunks);

  parallel_for_chunks(mesh.num_triangles(), grain, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    detail::AssemblyBuffers& buf = buffers[chunk];
    std::array<int, 6> dofs{};
    std::array<double, 6> phi{};
    std::array<std::array<double, 2>, 6> grad{};
    for (std::size_t t = begin; t < end; ++t) {
      const ElementGeometry geom = element_geometry(mesh, static_cast<int>(t));
      element_dofs(mesh, static_cast<int>(t), order, dofs);
      const Region reg = mesh.region[t];
      const bool conductor = reg == Region::Conductor;
      const double nu_lin = conductor ? 1.0 : mats.air_reluctivity;  // conductor values set by reassemble_kc
      const double kappa = conductor ? mats.conductor_kappa : 0.0;

      double mass[36] = {0};
      double stiff[36] = {0};
      BlockSystem::ConductorElement cache_entry;
      if (conductor) {
        cache_entry.ndof = nd;
        for (int i = 0; i < nd; ++i) {
          const int d = dofs[i];
          cache_entry.c_local[i] = part.kind[d] == DofPartition::kConductor ? part.local[d] : -1;
        }
      }

      for (const auto& qp : rule.points) {
        shape_values(order, qp.l0, qp.l1, qp.l2, phi);
        shape_gradients(order, geom, qp.l0, qp.l1, qp.l2, grad);
        const double w = qp.w * geom.area;
        for (int i = 0; i < nd; ++i)
          for (int j = 0; j < nd; ++j) {
            if (kappa > 0.0) mass[i * nd + j] += kappa * w * phi[i] * phi[j];
            stiff[i * nd + j] += nu_lin * w * (grad[i][0] * grad[j][0] + grad[i][1] * grad[j][1]);
          }
        if (conductor) cache_entry.qp.push_back({w, grad});
        if (reg == Region::CoilPlus || reg == Region::CoilMinus) {
          const double area = reg == Region::CoilPlus ? coil_area_plus : coil_area_minus;
          const double density = (reg == Region::CoilPlus ? 1.0 : -1.0) * coil_turns / area;
          for (int i = 0; i < nd; ++i) {
            const int d = dofs[i];
            if (part.kind[d] == DofPartition::kConductor)
              throw std::runtime_error("assemble_block_system: coil region touches a conductor dof");
            if (part.kind[d] == DofPartition::kNonConductor)
              buf.load.emplace_back(part.local[d], density * w * phi[i]);
          }
        }
      }

      for (int i = 0; i < nd; ++i) {
        const int di = dofs[i];
        const std::int8_t ki = part.kind[di];
        if (ki == DofPartition::kDirichlet) continue;
        for (int j = 0; j < nd; ++j) {
          const int dj = dofs[j];
          const std::int8_t kj = part.kind[dj];
          if (kj == DofPartition::kDirichlet) continue;
          const double s = stiff[i * nd + j];
          const double m = mass[i * nd + j];
          const int li = part.local[di], lj = part.local[dj];
          if (ki == DofPartition::kConductor && kj == DofPartition::kConductor) {
            buf.kc.push_back({li, lj, s});
            if (!conductor) buf.kc_fixed.push_back({li, lj, s});
            if (kappa > 0.0) buf.mc.push_back({li, lj, m});
          } else if (ki == DofPartition::kConductor && kj == DofPartition::kNonConductor) {
            buf.kcn.push_back({li, lj, s});
          } else if (ki == DofPartition::kNonConductor && kj == DofPartition::kNonConductor) {
            buf.kn.push_back({li, lj, s});
          }
          // the (N, C) block is the transpose of k_cn and is never stored
        }
      }
      if (conductor) buf.cache.push_back(std::move(cache_entry));
    }
  });

  // merge chunk buffers in chunk order so assembly is reproducible
  std::vector<Triplet> mc, kn, kcn, kc, kc_fixed;
  sys.j_unit.assign(part.nn(), 0.0);
  for (auto& buf : buffers) {
    mc.insert(mc.end(), buf.mc.begin(), buf.mc.end());
    kn.insert(kn.end(), buf.kn.begin(), buf.kn.end());
    kcn.insert(kcn.end(), buf.kcn.begin(), buf.kcn.end());
    kc.insert(kc.end(), buf.kc.begin(), buf.kc.end());
    kc_fixed.insert(kc_fixed.end(), buf.kc_fixed.begin(), buf.kc_fixed.end());
    for (auto [i, v] : buf.load) sys.j_unit[i] += v;
    for (auto& c : buf.cache) sys.conductor_cache.push_back(std::move(c));
  }
  sys.m_c = SparseMatrix::from_triplets(part.nc(), part.nc(), std::move(mc));
  sys.k_n = SparseMatrix::from_triplets(part.nn(), part.nn(), std::move(kn));
  sys.k_cn = SparseMatrix::from_triplets(part.nc(), part.nn(), std::move(kcn));
  sys.k_c = SparseMatrix::from_triplets(part.nc(), part.nc(), std::move(kc));

  // under the open gauge the stiffness operator is singular with the
  // constants in its kernel, so the load must be balanced to stay solvable
  if (gauge == Gauge::Neumann && part.nc() == 0) {
    double sum = 0.0, sum_abs = 0.0;
    for (double v : sys.j_unit) {
      sum += v;
      sum_abs += std::abs(v);
    }
    if (sum_abs > 0.0 && std::abs(sum) > 1e-10 * sum_abs)
      throw std::runtime_error("assemble_block_system: unbalanced source load under the open gauge");
  }

  // state-independent K_c values aligned with the final pattern
  sys.kc_fixed.assign(sys.k_c.nnz(), 0.0);
  {
    SparseMatrix fixed = SparseMatrix::from_triplets(part.nc(), part.nc(), std::move(kc_fixed));
    for (int r = 0; r < fixed.rows(); ++r)
      for (int k = fixed.row_offsets()[r]; k < fixed.row_offsets()[r + 1]; ++k) {
        const int slot = sys.k_c.value_slot(r, fixed.col_indices()[k]);
        if (slot < 0) throw std::logic_error("assemble_block_system: fixed entry missing from K_c pattern");
        sys.kc_fixed[slot] = fixed.values()[k];
      }
  }
  for (auto& elem : sys.conductor_cache) {
    for (int i = 0; i < elem.ndof; ++i)
      for (int j = 0; j < elem.ndof; ++j) {
        const int li = elem.c_local[i], lj = elem.c_local[j];
        elem.slots[i * elem.ndof + j] = (li >= 0 && lj >= 0) ? sys.k_c.value_slot(li, lj) : -1;
      }
  }

  Vector state = a_c_state;
  if (state.empty()) state.assign(part.nc(), 0.0);
  reassemble_kc(sys, mats, state);
  return sys;
}

// Replaces K_c with the assembly at the supplied frozen state: state-
// independent part plus per-quadrature-point nu(|grad A_h|) contributions
// from the conductor elements.
inline void reassemble_kc(BlockSystem& sys, const Materials& mats, const Vector& a_c) {
  if (static_cast<int>(a_c.size()) != sys.part.nc())
    throw std::invalid_argument("reassemble_kc: state dimension mismatch");
  Vector values = sys.kc_fixed;
  for (const auto& elem : sys.conductor_cache) {
    const int nd = elem.ndof;
    for (const auto& qp : elem.qp) {
      double gx = 0.0, gy = 0.0;
      for (int i = 0; i < nd; ++i) {
        const int li = elem.c_local[i];
        if (li < 0) continue;  // Dirichlet: coefficient is zero
        gx += a_c[li] * qp.grads[i][0];
        gy += a_c[li] * qp.grads[i][1];
      }
      const double b_mag = std::sqrt(gx * gx + gy * gy);  // |B| = |grad A_z|
      const double nu = mats.conductor_curve.reluctivity(b_mag);
      for (int i = 0; i < nd; ++i)
        for (int j = 0; j < nd; ++j) {
          const int slot = elem.slots[i * nd + j];
          if (slot < 0) continue;
          values[slot] += nu * qp.weight *
                          (qp.grads[i][0] * qp.grads[j][0] + qp.grads[i][1] * qp.grads[j][1]);
        }
    }
  }
  sys.k_c.values() = std::move(values);
  ++sys.kc_version;
}

// full-length coefficient vector (zeros on eliminated boundary dofs)
inline Vector expand_state(const DofPartition& part, const Vector& a_c, const Vector& a_n) {
  if (static_cast<int>(a_c.size()) != part.nc() || static_cast<int>(a_n.size()) != part.nn())
    throw std::invalid_argument("expand_state: block size mismatch");
  Vector full(part.total, 0.0);
  for (int i = 0; i < part.nc(); ++i) full[part.c_dofs[i]] = a_c[i];
  for (int i = 0; i < part.nn(); ++i) full[part.n_dofs[i]] = a_n[i];
  return full;
}

inline Vector restrict_to_c(const DofPartition& part, const Vector& full) {
  Vector out(part.nc());
  for (int i = 0; i < part.nc(); ++i) out[i] = full[part.c_dofs[i]];
  return out;
}

inline Vector restrict_to_n(const DofPartition& part, const Vector& full) {
  Vector out(part.nn());
  for (int i = 0; i < part.nn(); ++i) out[i] = full[part.n_dofs[i]];
  return out;
}

// load vector  l_i = integral f(x, y) phi_i  over the whole domain
inline Vector assemble_load(const Mesh& mesh, const DofPartition& part,
                            const std::function<double(double, double)>& f) {
  const int order = part.order;
  const QuadRule& rule = QuadRule::degree4();  // f is arbitrary, mass-order accuracy suffices
  Vector load(part.total, 0.0);
  std::array<int, 6> dofs{};
  std::array<double, 6> phi{};
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const ElementGeometry geom = element_geometry(mesh, t);
    const int nd = element_dofs(mesh, t, order, dofs);
    const auto& v = mesh.triangles[t].v;
    for (const auto& qp : rule.points) {
      const double x = qp.l0 * mesh.vertices[v[0]][0] + qp.l1 * mesh.vertices[v[1]][0] + qp.l2 * mesh.vertices[v[2]][0];
      const double y = qp.l0 * mesh.vertices[v[0]][1] + qp.l1 * mesh.vertices[v[1]][1] + qp.l2 * mesh.vertices[v[2]][1];
      shape_values(order, qp.l0, qp.l1, qp.l2, phi);
      const double w = qp.w * geom.area * f(x, y);
      for (int i = 0; i < nd; ++i) load[dofs[i]] += w * phi[i];
    }
  }
  for (int d = 0; d < part.total; ++d)
    if (part.kind[d] == DofPartition::kDirichlet) load[d] = 0.0;
  return load;
}

// per-element flux density B = (dA/dy, -dA/dx) evaluated at the centroid
inline std::vector<std::array<double, 2>> compute_flux_density(const Mesh& mesh, const DofPartition& part,
                                                               const Vector& full_state) {
  if (static_cast<int>(full_state.size()) != part.total)
    throw std::invalid_argument("compute_flux_density: state size mismatch");
  std::vector<std::array<double, 2>> b(mesh.num_triangles());
  std::array<int, 6> dofs{};
  std::array<std::array<double, 2>, 6> grad{};
  const double third = 1.0 / 3.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const ElementGeometry geom = element_geometry(mesh, t);
    const int nd = element_dofs(mesh, t, part.order, dofs);
    shape_gradients(part.order, geom, third, third, third, grad);
    double gx = 0.0, gy = 0.0;
    for (int i = 0; i < nd; ++i) {
      gx += full_state[dofs[i]] * grad[i][0];
      gy += full_state[dofs[i]] * grad[i][1];
    }
    b[t] = {gy, -gx};
  }
  return b;
}

// area-weighted mean of |B| over elements whose centroid lies in the probe
inline double probe_average(const Mesh& mesh, const std::vector<std::array<double, 2>>& b_field,
                            const Rect& probe) {
  double area = 0.0, acc = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto c = mesh.centroid(t);
    if (!probe.contains(c[0], c[1])) continue;
    const double a = mesh.triangle_area(t);
    area += a;
    acc += a * std::hypot(b_field[t][0], b_field[t][1]);
  }
  if (area == 0.0) throw std::invalid_argument("probe_average: probe contains no element centroid");
  return acc / area;
}

// L2 distance between the finite element field and a reference function,
// integrated with a tensor Gauss rule (exactness well beyond the element
// order so measured convergence rates are not polluted by quadrature).
inline double l2_error(const Mesh& mesh, const DofPartition& part, const Vector& full_state,
                       const std::function<double(double, double)>& exact) {
  static const std::array<double, 6> gl_nodes = {-0.932469514203152, -0.661209386466265, -0.238619186083197,
                                                 0.238619186083197,  0.661209386466265,  0.932469514203152};
  static const std::array<double, 6> gl_weights = {0.171324492379170, 0.360761573048139, 0.467913934572691,
                                                   0.467913934572691, 0.360761573048139, 0.171324492379170};
  std::array<int, 6> dofs{};
  std::array<double, 6> phi{};
  double total = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const ElementGeometry geom = element_geometry(mesh, t);
    const int nd = element_dofs(mesh, t, part.order, dofs);
    const auto& v = mesh.triangles[t].v;
    for (int iu = 0; iu < 6; ++iu)
      for (int iv = 0; iv < 6; ++iv) {
        const double s = 0.5 * (1.0 + gl_nodes[iu]);
        const double q = 0.5 * (1.0 + gl_nodes[iv]);
        const double l1 = s;
        const double l2v = q * (1.0 - s);
        const double l0 = 1.0 - l1 - l2v;
        const double w = 0.25 * gl_weights[iu] * gl_weights[iv] * 2.0 * geom.area * (1.0 - s);
        const double x = l0 * mesh.vertices[v[0]][0] + l1 * mesh.vertices[v[1]][0] + l2v * mesh.vertices[v[2]][0];
        const double y = l0 * mesh.vertices[v[0]][1] + l1 * mesh.vertices[v[1]][1] + l2v * mesh.vertices[v[2]][1];
        shape_values(part.order, l0, l1, l2v, phi);
        double ah = 0.0;
        for (int i = 0; i < nd; ++i) ah += full_state[dofs[i]] * phi[i];
        const double diff = ah - exact(x, y);
        total += w * diff * diff;
      }
  }
  return std::sqrt(total);
}

}  // namespace mqs
