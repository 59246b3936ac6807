#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "mqs/config.hpp"
#include "mqs/io.hpp"
#include "mqs/simulation.hpp"

using namespace mqs;

TEST_CASE("config files parse sections, scalars, strings and arrays") {
  const char* text = R"(
# comment line
[mesh]
resolution = 3
order = 2

[material]
model = "linear"   # trailing comment
nu = 250.5

[output]
vtk = true

[compare]
schemes = ["euler", "rkc5", "implicit"]
)";
  const ConfigFile f = ConfigFile::parse_string(text, "test.toml");
  CHECK(f.get_int("mesh", "resolution", 0) == 3);
  CHECK(f.get_int("mesh", "order", 0) == 2);
  CHECK(f.get_string("material", "model", "") == "linear");
  CHECK(f.get_double("material", "nu", 0) == doctest::Approx(250.5));
  CHECK(f.get_bool("output", "vtk", false));
  CHECK(f.get_bool("output", "missing", true));
  const auto schemes = f.get_string_list("compare", "schemes", {});
  REQUIRE(schemes.size() == 3);
  CHECK(schemes[0] == "euler");
  CHECK(schemes[1] == "rkc5");
  CHECK(schemes[2] == "implicit");
}

TEST_CASE("config errors carry the file name and line number") {
  CHECK_THROWS_WITH_AS(ConfigFile::parse_string("[mesh]\nresolution 3\n", "bad.toml"),
                       doctest::Contains("bad.toml:2"), std::runtime_error);
  CHECK_THROWS_WITH_AS(ConfigFile::parse_string("[mesh\n", "bad.toml"), doctest::Contains("bad.toml:1"),
                       std::runtime_error);
  const ConfigFile f = ConfigFile::parse_string("[mesh]\nresolution = quick\n", "bad.toml");
  CHECK_THROWS_WITH_AS(f.get_int("mesh", "resolution", 0), doctest::Contains("bad.toml:2"),
                       std::runtime_error);
}

TEST_CASE("scheme strings parse to scheme descriptors") {
  CHECK(parse_scheme("euler").kind == SchemeKind::Euler);
  CHECK(parse_scheme("implicit").kind == SchemeKind::Implicit);
  CHECK(parse_scheme("rkc").stages == 10);
  CHECK(parse_scheme("rkc5").stages == 5);
  CHECK(parse_scheme("rkc:20").stages == 20);
  CHECK(parse_scheme("rkc", 7).stages == 7);
  CHECK_THROWS_AS(parse_scheme("leapfrog"), std::runtime_error);
  CHECK(Scheme::rkc(5).name() == "rkc5");
  CHECK(Scheme::euler().name() == "euler");
  CHECK(Scheme::implicit().name() == "implicit");
}

TEST_CASE("run config applies file values over defaults and validates") {
  const char* text = R"(
[mesh]
resolution = 2
[time]
scheme = "rkc"
stages = 20
end_time = 0.05
[solver]
seed = 99
)";
  RunConfig cfg;
  cfg.apply(ConfigFile::parse_string(text));
  CHECK(cfg.resolution == 2);
  CHECK(cfg.scheme.kind == SchemeKind::Rkc);
  CHECK(cfg.scheme.stages == 20);
  CHECK(cfg.end_time == doctest::Approx(0.05));
  CHECK(cfg.seed == 99);
  cfg.validate();

  RunConfig bad;
  bad.order = 3;
  CHECK_THROWS_AS(bad.validate(), std::runtime_error);
  RunConfig bad2;
  bad2.scheme = Scheme::rkc(1);
  CHECK_THROWS_AS(bad2.validate(), std::runtime_error);
}

TEST_CASE("the default probes slice the plate into three equal bands") {
  RunConfig cfg;
  const auto probes = cfg.make_probes();
  REQUIRE(probes.size() == 3);
  CHECK(probes[0].name == "S1");
  CHECK(probes[2].name == "S3");
  const Rect plate = cfg.make_geometry().plate;
  const double band = plate.height() / 3;
  for (int i = 0; i < 3; ++i) {
    CHECK(probes[i].rect.x0 == doctest::Approx(plate.x0));
    CHECK(probes[i].rect.x1 == doctest::Approx(plate.x1));
    CHECK(probes[i].rect.height() == doctest::Approx(band).epsilon(1e-12));
  }
  CHECK(probes[0].rect.y0 == doctest::Approx(plate.y0));
  CHECK(probes[2].rect.y1 == doctest::Approx(plate.y1));
}

TEST_CASE("the transient source follows its closed form") {
  const Excitation i_s{5.64, 0.5};
  CHECK(i_s(0.0) == 0.0);
  CHECK(i_s(0.5) == doctest::Approx(5.64 * (1.0 - std::exp(-1.0))).epsilon(1e-14));
  CHECK(i_s(1e9) == doctest::Approx(5.64).epsilon(1e-12));
}

TEST_CASE("csv output carries the fixed schema") {
  Trajectory traj;
  StepRecord r;
  r.step = 4;
  r.t = 0.01;
  r.tau = 2.5e-4;
  r.i_source = 0.1;
  r.probes = {1.5, 2.5, 3.5};
  r.f_evals = 40;
  r.pcg_iters = 800;
  r.updates_since_last = 2;
  r.lambda_max = 12345.0;
  traj.records.push_back(r);
  const char* path = "csv_schema_test.csv";
  write_trajectory_csv(traj, path);
  std::string header, row;
  {
    std::ifstream in(path);
    std::getline(in, header);
    std::getline(in, row);
  }
  CHECK(header == "step,t,tau,i_source,probe_S1,probe_S2,probe_S3,f_evals,pcg_iters,matrix_updated,lambda_max");
  std::istringstream cells(row);
  std::string cell;
  std::vector<std::string> fields;
  while (std::getline(cells, cell, ',')) fields.push_back(cell);
  REQUIRE(fields.size() == 11);
  CHECK(fields[0] == "4");
  CHECK(std::stod(fields[1]) == doctest::Approx(0.01));
  CHECK(std::stod(fields[2]) == doctest::Approx(2.5e-4));
  CHECK(std::stod(fields[4]) == doctest::Approx(1.5));
  CHECK(fields[7] == "40");
  CHECK(fields[8] == "800");
  CHECK(fields[9] == "2");
  CHECK(std::stod(fields[10]) == doctest::Approx(12345.0));

  // rewriting the same trajectory reproduces the file byte for byte
  std::string first;
  {
    std::ifstream in(path);
    std::stringstream buf;
    buf << in.rdbuf();
    first = buf.str();
  }
  write_trajectory_csv(traj, path);
  {
    std::ifstream in(path);
    std::stringstream buf;
    buf << in.rdbuf();
    CHECK(buf.str() == first);
  }
  std::remove(path);

  Trajectory bad;
  bad.records.push_back(StepRecord{});  // no probes
  CHECK_THROWS_AS(write_trajectory_csv(bad, path), std::runtime_error);
}

TEST_CASE("legacy vtk output contains the unstructured-grid sections") {
  const Mesh mesh = generate_benchmark_mesh(1, BenchmarkGeometry::flat2d());
  const char* path = "mesh_dump_test.vtk";
  write_mesh_vtk(mesh, path);
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  for (const char* token : {"# vtk DataFile Version 3.0", "ASCII", "DATASET UNSTRUCTURED_GRID", "POINTS",
                            "CELLS", "CELL_TYPES", "CELL_DATA", "SCALARS region int 1"})
    CHECK(text.find(token) != std::string::npos);
  std::remove(path);
}

TEST_CASE("field snapshots carry the potential and the flux density") {
  RunConfig cfg;
  cfg.resolution = 1;
  Simulation sim = build_simulation(cfg);
  const Vector full(sim.block.part.total, 0.0);
  const auto b = compute_flux_density(sim.mesh, sim.block.part, full);
  const char* path = "field_dump_test.vtk";
  write_field_vtk(sim.mesh, sim.block.part, full, b, path);
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  for (const char* token : {"POINT_DATA", "SCALARS a_z double 1", "VECTORS b double"})
    CHECK(text.find(token) != std::string::npos);
  std::remove(path);
}

TEST_CASE("identical schemes compare at exactly zero deviation") {
  RunConfig cfg;
  cfg.resolution = 1;
  cfg.material_model = "linear";
  cfg.end_time = 0.004;
  cfg.output_dt = 0.001;
  Simulation sim = build_simulation(cfg);
  const CompareReport rep = run_compare(sim, {Scheme::euler(), Scheme::euler()});
  REQUIRE(rep.entries.size() == 2);
  CHECK(rep.entries[0].err_vs_ref == 0.0);
  CHECK(rep.entries[1].err_vs_ref == 0.0);
  CHECK(rep.entries[0].trajectory.summary.steps == rep.entries[1].trajectory.summary.steps);
}

TEST_CASE("simulation assembly honors the configured gauge, turns and resolution") {
  RunConfig cfg;
  cfg.resolution = 1;
  Simulation sim = build_simulation(cfg);
  CHECK(sim.block.part.nc() > 0);
  CHECK(sim.block.part.nn() > 0);
  CHECK(sim.probes.size() == 3);
  CHECK(norm2(sim.block.j_unit) > 0.0);
  // doubling the turns doubles the unit load
  RunConfig cfg2 = cfg;
  cfg2.coil_turns = 2 * cfg.coil_turns;
  Simulation sim2 = build_simulation(cfg2);
  REQUIRE(sim2.block.j_unit.size() == sim.block.j_unit.size());
  for (std::size_t i = 0; i < sim.block.j_unit.size(); ++i)
    CHECK(sim2.block.j_unit[i] == doctest::Approx(2.0 * sim.block.j_unit[i]).epsilon(1e-13));
}
