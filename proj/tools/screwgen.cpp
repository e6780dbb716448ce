#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "screwgen/config.hpp"
#include "screwgen/database_io.hpp"
#include "screwgen/parallel.hpp"
#include "screwgen/vtk.hpp"

using namespace screwgen;

namespace {

struct Args {
  std::string config;
  double theta_deg = 0.0;
  int angles = 0;
  std::string out;
  std::string database;
  int threads = 0;
  bool extrude = false;
};

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

PipelineConfig configure(const Args& a) {
  PipelineConfig c = load_config(a.config);
  if (a.angles > 0) c.n_angles = a.angles;
  if (a.threads > 0) c.pipeline.threads = a.threads;
  if (!a.database.empty()) c.database = a.database;
  return c;
}

int cmd_sweep(const Args& a) {
  PipelineConfig c = configure(a);
  if (!a.out.empty()) c.database = a.out;
  const GeometrySource geo = c.geometry();
  SweepStats stats;
  const auto t0 = std::chrono::steady_clock::now();
  const ScaffoldDatabase db = fill_database(geo, c.scaffold, c.n_angles, c.pipeline, &stats);
  const double fill = seconds_since(t0);
  for (size_t i = 0; i < db.angles.size(); ++i)
    std::printf("angle %3zu  theta %.6f rad  newton %d  control %d\n", i, db.angles[i], stats.newton_iterations[i],
                stats.control_iterations[i]);
  write_database(db, c.database);
  std::printf("angles %zu  newton total %d  fill %.1f s  threads %d\nwrote %s\n", db.angles.size(),
              stats.total_newton, fill, resolve_threads(c.pipeline.threads), c.database.c_str());
  return 0;
}

int cmd_mesh(const Args& a) {
  PipelineConfig c = configure(a);
  if (!a.out.empty()) c.mesh_file = a.out;
  const ScaffoldDatabase db = read_database(c.database);
  const double theta = a.theta_deg * kPi / 180.0;
  const auto t0 = std::chrono::steady_clock::now();
  BackgroundMesh mesh;
  if (a.extrude) {
    MeshResolution res = c.mesh;
    if (res.n_a < 1) fail(ErrorCode::kConfig, "3D meshes need mesh.n_a >= 1");
    mesh = extrude_3d(db, theta, res, c.extension, c.mesh_length);
  } else {
    mesh = mesh_2d(db, theta, c.mesh);
  }
  const double update = seconds_since(t0);
  const QualityReport q = report(mesh);
  write_vtk(c.mesh_file, mesh, q);
  std::printf("elements %zu  vertices %zu  min scaled Jacobian %.4f  folds %d\n", mesh.cells.size(),
              mesh.vertices.size(), q.min, q.fold_count);
  std::printf("mesh update %.3f ms\nwrote %s\n", 1e3 * update, c.mesh_file.c_str());
  return 0;
}

int cmd_quality(const Args& a) {
  PipelineConfig c = configure(a);
  if (!a.out.empty()) c.quality_file = a.out;
  const ScaffoldDatabase db = read_database(c.database);
  std::vector<double> thetas;
  if (a.angles > 0) {
    for (int k = 0; k < a.angles; ++k) thetas.push_back(db.period() * k / a.angles);
  } else {
    thetas = gate_angles(db, true);
  }
  const GateResult g = sweep_gate(db, c.mesh, thetas);
  nlohmann::json j{{"pass", g.pass},
                   {"samples", g.samples},
                   {"worst_theta_rad", g.worst_theta},
                   {"worst", nlohmann::json::parse(to_json(g.worst))},
                   {"min_scaled_jacobian", nlohmann::json::array()}};
  for (size_t k = 0; k < thetas.size(); ++k)
    j["min_scaled_jacobian"].push_back({{"theta_rad", thetas[k]}, {"min", g.min_per_theta[k]}});
  std::ofstream f(c.quality_file);
  if (!f) fail(ErrorCode::kIo, "cannot write " + c.quality_file);
  f << j.dump(2) << '\n';
  std::printf("%s  samples %d  worst min %.4f at theta %.6f rad\nwrote %s\n", g.pass ? "pass" : "FAIL", g.samples,
              g.worst.min, g.worst_theta, c.quality_file.c_str());
  return 0;
}

int cmd_profile(const Args& a) {
  PipelineConfig c = configure(a);
  if (!a.out.empty()) c.profile_out = a.out;
  const GeometrySource geo = c.geometry();
  const CrossSection sec = geo.at(a.theta_deg * kPi / 180.0);
  save_profile(c.profile_out, {sec});
  std::printf("rotor points %zu + %zu\nwrote %s\n", sec.left_rotor.size(), sec.right_rotor.size(),
              c.profile_out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structured meshes for co-rotating twin-screw extruders"};
  app.require_subcommand(1);
  Args a;
  auto common = [&](CLI::App* s) {
    s->add_option("--config", a.config, "JSON configuration")->required()->check(CLI::ExistingFile);
    s->add_option("--threads", a.threads, "worker threads (default SCREWGEN_THREADS or all cores)");
    s->add_option("--out", a.out, "output path");
  };
  auto* sweep = app.add_subcommand("sweep", "parameterize all angles and write the scaffold database");
  common(sweep);
  sweep->add_option("--angles", a.angles, "number of stored angles over one period");
  auto* mesh = app.add_subcommand("mesh", "extract a background mesh as VTK");
  common(mesh);
  mesh->add_option("--theta", a.theta_deg, "rotation angle in degrees");
  mesh->add_option("--database", a.database, "database path (default from the config)");
  mesh->add_flag("--extrude", a.extrude, "3D mesh along the screw axis");
  auto* quality = app.add_subcommand("quality", "fold-free gate over stored and midway angles");
  common(quality);
  quality->add_option("--angles", a.angles, "uniform angle samples instead of stored and midway angles");
  quality->add_option("--database", a.database, "database path (default from the config)");
  auto* profile = app.add_subcommand("profile", "write the rotor point clouds at one angle");
  common(profile);
  profile->add_option("--theta", a.theta_deg, "rotation angle in degrees");
  CLI11_PARSE(app, argc, argv);

  try {
    if (*sweep) return cmd_sweep(a);
    if (*mesh) return cmd_mesh(a);
    if (*quality) return cmd_quality(a);
    return cmd_profile(a);
  } catch (const Error& e) {
    std::cerr << "error " << code_name(e.code()) << ": " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
