#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace mqs {

struct Rect {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  bool empty() const { return !(x1 > x0) || !(y1 > y0); }
  bool contains(double x, double y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
  bool contains_strict(double x, double y) const { return x > x0 && x < x1 && y > y0 && y < y1; }
  bool contains(const Rect& r) const { return r.x0 >= x0 && r.x1 <= x1 && r.y0 >= y0 && r.y1 <= y1; }
  bool overlaps(const Rect& r) const { return r.x0 < x1 && r.x1 > x0 && r.y0 < y1 && r.y1 > y0; }

  static Rect centered(double cx, double cy, double w, double h) {
    return {cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2};
  }
};

// Axis-aligned benchmark layout: a steel plate between two coil bundles inside
// an air box. Empty rectangles mean "region absent".
struct BenchmarkGeometry {
  Rect air_box;
  Rect plate;
  Rect coil_plus;   // carries +J
  Rect coil_minus;  // carries -J
  // target cell size outside the plate/coil core, relative to the plate's
  // short side; modest values keep the air elements near the plate tips well
  // shaped, which controls the stiffness of the reduced system
  double air_coarsening = 2.0;

  // Default layout: 200 mm air box, 3.2 mm x 50 mm plate centered, 10 mm x
  // 50 mm coil bundles 5 mm to either side of the plate.
  static BenchmarkGeometry flat2d() {
    BenchmarkGeometry g;
    g.air_box = Rect::centered(0, 0, 0.2, 0.2);
    g.plate = Rect::centered(0, 0, 0.0032, 0.05);
    const double gap = 0.005, cw = 0.01, ch = 0.05;
    g.coil_plus = {g.plate.x1 + gap, -ch / 2, g.plate.x1 + gap + cw, ch / 2};
    g.coil_minus = {g.plate.x0 - gap - cw, -ch / 2, g.plate.x0 - gap, ch / 2};
    return g;
  }

  static BenchmarkGeometry air_only(double width, double height) {
    BenchmarkGeometry g;
    g.air_box = {0, 0, width, height};
    return g;
  }

  void validate() const {
    if (air_box.empty()) throw std::invalid_argument("geometry: air box is degenerate");
    auto check_inside = [&](const Rect& r, const char* name) {
      if (!r.empty() && !air_box.contains(r))
        throw std::invalid_argument(std::string("geometry: ") + name + " extends outside air_box");
    };
    check_inside(plate, "plate");
    check_inside(coil_plus, "coil_plus");
    check_inside(coil_minus, "coil_minus");
    auto check_disjoint = [](const Rect& a, const char* an, const Rect& b, const char* bn) {
      if (!a.empty() && !b.empty() && a.overlaps(b))
        throw std::invalid_argument(std::string("geometry: ") + an + " overlaps " + bn);
    };
    check_disjoint(plate, "plate", coil_plus, "coil_plus");
    check_disjoint(plate, "plate", coil_minus, "coil_minus");
    check_disjoint(coil_plus, "coil_plus", coil_minus, "coil_minus");
    if (coil_plus.empty() != coil_minus.empty())
      throw std::invalid_argument("geometry: coil_plus and coil_minus must both be present or both absent");
  }
};

enum class Region : std::uint8_t { Conductor = 0, Air = 1, CoilPlus = 2, CoilMinus = 3 };

inline const char* region_name(Region r) {
  switch (r) {
    case Region::Conductor: return "conductor";
    case Region::Air: return "air";
    case Region::CoilPlus: return "coil_plus";
    case Region::CoilMinus: return "coil_minus";
  }
  return "?";
}

struct Triangle {
  std::array<int, 3> v{};  // counterclockwise
};

class Mesh {
 public:
  std::vector<std::array<double, 2>> vertices;
  std::vector<Triangle> triangles;
  std::vector<Region> region;                  // per triangle
  std::vector<std::uint8_t> vertex_on_boundary;  // per vertex
  BenchmarkGeometry geometry;

  Mesh() = default;
  // the lazily built edge cache never travels with a copy or move
  Mesh(const Mesh& other)
      : vertices(other.vertices),
        triangles(other.triangles),
        region(other.region),
        vertex_on_boundary(other.vertex_on_boundary),
        geometry(other.geometry) {}
  Mesh(Mesh&& other) noexcept
      : vertices(std::move(other.vertices)),
        triangles(std::move(other.triangles)),
        region(std::move(other.region)),
        vertex_on_boundary(std::move(other.vertex_on_boundary)),
        geometry(other.geometry) {
    other.reset_edge_cache();
  }
  Mesh& operator=(const Mesh& other) {
    if (this != &other) {
      vertices = other.vertices;
      triangles = other.triangles;
      region = other.region;
      vertex_on_boundary = other.vertex_on_boundary;
      geometry = other.geometry;
      reset_edge_cache();
    }
    return *this;
  }
  Mesh& operator=(Mesh&& other) noexcept {
    if (this != &other) {
      vertices = std::move(other.vertices);
      triangles = std::move(other.triangles);
      region = std::move(other.region);
      vertex_on_boundary = std::move(other.vertex_on_boundary);
      geometry = other.geometry;
      reset_edge_cache();
      other.reset_edge_cache();
    }
    return *this;
  }

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_triangles() const { return static_cast<int>(triangles.size()); }

  double signed_area(int t) const {
    const auto& a = vertices[triangles[t].v[0]];
    const auto& b = vertices[triangles[t].v[1]];
    const auto& c = vertices[triangles[t].v[2]];
    return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
  }

  double triangle_area(int t) const { return signed_area(t); }

  std::array<double, 2> centroid(int t) const {
    const auto& a = vertices[triangles[t].v[0]];
    const auto& b = vertices[triangles[t].v[1]];
    const auto& c = vertices[triangles[t].v[2]];
    return {(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0};
  }

  double total_area() const {
    double s = 0.0;
    for (int t = 0; t < num_triangles(); ++t) s += triangle_area(t);
    return s;
  }

  int count_region(Region r) const {
    int n = 0;
    for (Region x : region) n += (x == r);
    return n;
  }

  // Edge enumeration, built lazily (second-order elements put a degree of
  // freedom on every edge midpoint).
  struct EdgeTable {
    std::vector<std::array<int, 2>> edges;          // (min, max) vertex pair
    std::vector<std::array<int, 3>> tri_edges;      // per triangle: edge ids opposite order (v0v1, v1v2, v2v0)
    std::vector<std::uint8_t> edge_on_boundary;
  };

  // built on first use; concurrent readers are safe
  const EdgeTable& edge_table() const {
    const EdgeTable* table = edges_ptr_.load(std::memory_order_acquire);
    if (!table) {
      std::lock_guard<std::mutex> lock(edges_mutex_);
      if (!edges_) build_edge_table();
      table = edges_.get();
      edges_ptr_.store(table, std::memory_order_release);
    }
    return *table;
  }

  std::array<double, 2> edge_midpoint(int e) const {
    const auto& tab = edge_table();
    const auto& a = vertices[tab.edges[e][0]];
    const auto& b = vertices[tab.edges[e][1]];
    return {(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0};
  }

 private:
  void build_edge_table() const {
    {
      auto table = std::make_unique<EdgeTable>();
      std::unordered_map<std::uint64_t, int> index;
      index.reserve(triangles.size() * 2);
      std::vector<int> adjacent_count;
      table->tri_edges.resize(triangles.size());
      for (std::size_t t = 0; t < triangles.size(); ++t) {
        for (int e = 0; e < 3; ++e) {
          const int a = triangles[t].v[e];
          const int b = triangles[t].v[(e + 1) % 3];
          const int lo = std::min(a, b), hi = std::max(a, b);
          const std::uint64_t key = (static_cast<std::uint64_t>(lo) << 32) | static_cast<std::uint32_t>(hi);
          auto [it, inserted] = index.try_emplace(key, static_cast<int>(table->edges.size()));
          if (inserted) {
            table->edges.push_back({lo, hi});
            adjacent_count.push_back(0);
          }
          table->tri_edges[t][e] = it->second;
          ++adjacent_count[it->second];
        }
      }
      table->edge_on_boundary.resize(table->edges.size());
      for (std::size_t e = 0; e < table->edges.size(); ++e)
        table->edge_on_boundary[e] = (adjacent_count[e] == 1);
      edges_ = std::move(table);
    }
  }

  void reset_edge_cache() {
    edges_.reset();
    edges_ptr_.store(nullptr, std::memory_order_release);
  }

  mutable std::mutex edges_mutex_;
  mutable std::atomic<const EdgeTable*> edges_ptr_{nullptr};
  mutable std::unique_ptr<EdgeTable> edges_;
};

namespace detail {

// Grid lines along one axis: region boundaries become mandatory breaks, each
// span is subdivided so the plate's short side gets `resolution` cells, with
// coarser cells (8x) outside the plate/coil core.
inline std::vector<double> axis_coordinates(const BenchmarkGeometry& g, int resolution, int axis) {
  const double lo = axis == 0 ? g.air_box.x0 : g.air_box.y0;
  const double hi = axis == 0 ? g.air_box.x1 : g.air_box.y1;
  std::vector<double> breaks{lo, hi};
  auto push_rect = [&](const Rect& r) {
    if (r.empty()) return;
    if (axis == 0) {
      breaks.push_back(r.x0);
      breaks.push_back(r.x1);
    } else {
      breaks.push_back(r.y0);
      breaks.push_back(r.y1);
    }
  };
  push_rect(g.plate);
  push_rect(g.coil_plus);
  push_rect(g.coil_minus);
  std::sort(breaks.begin(), breaks.end());
  const double eps = 1e-12 * std::max(std::abs(hi - lo), 1.0);
  breaks.erase(std::unique(breaks.begin(), breaks.end(),
                           [&](double a, double b) { return std::abs(a - b) <= eps; }),
               breaks.end());

  const bool has_plate = !g.plate.empty();
  const double fine = has_plate ? std::min(g.plate.width(), g.plate.height()) : 0.0;
  const double coarse = g.air_coarsening * fine;
  // "core" interval: union extent of plate and coils along this axis
  double core_lo = 0.0, core_hi = 0.0;
  bool has_core = false;
  auto extend_core = [&](const Rect& r) {
    if (r.empty()) return;
    const double a = axis == 0 ? r.x0 : r.y0;
    const double b = axis == 0 ? r.x1 : r.y1;
    if (!has_core) {
      core_lo = a;
      core_hi = b;
      has_core = true;
    } else {
      core_lo = std::min(core_lo, a);
      core_hi = std::max(core_hi, b);
    }
  };
  extend_core(g.plate);
  extend_core(g.coil_plus);
  extend_core(g.coil_minus);

  std::vector<double> coords;
  coords.push_back(breaks.front());
  for (std::size_t s = 0; s + 1 < breaks.size(); ++s) {
    const double a = breaks[s], b = breaks[s + 1];
    const double len = b - a;
    int base = 1;
    if (has_plate) {
      const bool in_core = has_core && a >= core_lo - eps && b <= core_hi + eps;
      const double target = in_core ? fine : coarse;
      base = std::max(1, static_cast<int>(std::ceil(len / target - 1e-9)));
    }
    const int cells = base * resolution;
    for (int c = 1; c <= cells; ++c) coords.push_back(a + len * c / cells);
  }
  return coords;
}

}  // namespace detail

// Structured conforming triangulation: grid lines on every region boundary,
// each quad cell split into two counterclockwise triangles, cells tagged by
// centroid containment.
inline Mesh generate_benchmark_mesh(int resolution, const BenchmarkGeometry& geometry) {
  if (resolution < 1) throw std::invalid_argument("generate_benchmark_mesh: resolution must be >= 1");
  geometry.validate();

  const std::vector<double> xs = detail::axis_coordinates(geometry, resolution, 0);
  const std::vector<double> ys = detail::axis_coordinates(geometry, resolution, 1);
  const int nx = static_cast<int>(xs.size()) - 1;
  const int ny = static_cast<int>(ys.size()) - 1;

  Mesh mesh;
  mesh.geometry = geometry;
  mesh.vertices.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) mesh.vertices.push_back({xs[i], ys[j]});
  auto vid = [nx](int i, int j) { return j * (nx + 1) + i; };

  mesh.vertex_on_boundary.assign(mesh.vertices.size(), 0);
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      if (i == 0 || i == nx || j == 0 || j == ny) mesh.vertex_on_boundary[vid(i, j)] = 1;

  auto classify = [&](double cx, double cy) {
    if (!geometry.plate.empty() && geometry.plate.contains(cx, cy)) return Region::Conductor;
    if (!geometry.coil_plus.empty() && geometry.coil_plus.contains(cx, cy)) return Region::CoilPlus;
    if (!geometry.coil_minus.empty() && geometry.coil_minus.contains(cx, cy)) return Region::CoilMinus;
    return Region::Air;
  };

  mesh.triangles.reserve(static_cast<std::size_t>(nx) * ny * 2);
  mesh.region.reserve(mesh.triangles.capacity());
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int v00 = vid(i, j), v10 = vid(i + 1, j), v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
      const Region tag = classify((xs[i] + xs[i + 1]) / 2, (ys[j] + ys[j + 1]) / 2);
      mesh.triangles.push_back({{v00, v10, v11}});
      mesh.region.push_back(tag);
      mesh.triangles.push_back({{v00, v11, v01}});
      mesh.region.push_back(tag);
    }

  for (int t = 0; t < mesh.num_triangles(); ++t)
    if (!(mesh.signed_area(t) > 0.0))
      throw std::runtime_error("generate_benchmark_mesh: non-positive area in triangle " + std::to_string(t));
  return mesh;
}

// Regular 1-to-4 refinement through edge midpoints; region tags are inherited
// and the boundary set is rebuilt from single-sided edges.
inline Mesh refine_uniform(const Mesh& mesh) {
  const auto& tab = mesh.edge_table();
  Mesh out;
  out.geometry = mesh.geometry;
  out.vertices = mesh.vertices;
  const int base = mesh.num_vertices();
  out.vertices.reserve(base + tab.edges.size());
  for (std::size_t e = 0; e < tab.edges.size(); ++e) out.vertices.push_back(mesh.edge_midpoint(static_cast<int>(e)));

  out.triangles.reserve(mesh.triangles.size() * 4);
  out.region.reserve(mesh.triangles.size() * 4);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& v = mesh.triangles[t].v;
    const int m01 = base + tab.tri_edges[t][0];
    const int m12 = base + tab.tri_edges[t][1];
    const int m20 = base + tab.tri_edges[t][2];
    const Region tag = mesh.region[t];
    const std::array<Triangle, 4> children{{{{v[0], m01, m20}}, {{m01, v[1], m12}}, {{m20, m12, v[2]}}, {{m01, m12, m20}}}};
    for (const Triangle& c : children) {
      out.triangles.push_back(c);
      out.region.push_back(tag);
    }
  }

  out.vertex_on_boundary.assign(out.vertices.size(), 0);
  const auto& out_tab = out.edge_table();
  for (std::size_t e = 0; e < out_tab.edges.size(); ++e)
    if (out_tab.edge_on_boundary[e]) {
      out.vertex_on_boundary[out_tab.edges[e][0]] = 1;
      out.vertex_on_boundary[out_tab.edges[e][1]] = 1;
    }

  for (int t = 0; t < out.num_triangles(); ++t)
    if (!(out.signed_area(t) > 0.0))
      throw std::runtime_error("refine_uniform: non-positive area in triangle " + std::to_string(t));
  return out;
}

}  // namespace mqs
