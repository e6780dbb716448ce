#include <bit>
#include <fstream>
#include <functional>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "screwgen/config.hpp"
#include "screwgen/database_io.hpp"
#include "screwgen/vtk.hpp"
#include "synthetic.hpp"

using namespace screwgen;
using namespace screwgen::test;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kDomain;
}

std::uint64_t u64_at(const std::string& s, size_t at) {
  std::uint64_t v = 0;
  for (size_t k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[at + k])) << (8 * k);
  return v;
}

const char* kMinimal = R"({"geometry": {"screw_radius_m": 0.015275, "centerline_distance_m": 0.0262,
  "screw_clearance_m": 0.0002, "barrel_clearance_m": 0.00015}})";

}  // namespace

TEST_CASE("database round trip is byte identical") {
  ScaffoldDatabase db = synthetic_db(4, {8, 24, 12});
  db.params.rotation_speed = 1.0;
  const std::string a = encode_database(db);
  const ScaffoldDatabase back = decode_database(a);
  CHECK(encode_database(back) == a);
  REQUIRE(back.angles.size() == db.angles.size());
  for (size_t k = 0; k < db.angles.size(); ++k) {
    CHECK(back.angles[k] == db.angles[k]);
    for (size_t p = 0; p < 3; ++p) CHECK(back.scaffolds[k].patches[p].points == db.scaffolds[k].patches[p].points);
  }
  CHECK(back.params.centerline_distance == db.params.centerline_distance);
  CHECK(back.params.rotation_speed == 1.0);
  CHECK(back.resolution.n_mu_separator == 8);

  const auto dir = std::filesystem::temp_directory_path() / "screwgen_test_io";
  std::filesystem::create_directories(dir);
  write_database(db, dir / "a.sgdb");
  write_database(read_database(dir / "a.sgdb"), dir / "b.sgdb");
  CHECK(std::filesystem::file_size(dir / "a.sgdb") == a.size());
  std::ifstream fa(dir / "a.sgdb", std::ios::binary), fb(dir / "b.sgdb", std::ios::binary);
  std::stringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  CHECK(sa.str() == sb.str());
}

TEST_CASE("database layout follows the documented header") {
  const ScaffoldDatabase db = synthetic_db(3, {4, 12, 6});
  const std::string s = encode_database(db);
  CHECK(std::memcmp(s.data(), "SGDB\x01\0\0\0", 8) == 0);
  const size_t len = static_cast<size_t>(u64_at(s, 8));
  const auto index = nlohmann::json::parse(s.substr(16, len));
  CHECK(index["format"] == "sgdb-1");
  CHECK(index["blocks"].size() == 9);
  const size_t data = (16 + len + 7) / 8 * 8;
  // second angle, separator block, point (1, 2)
  const auto& blk = index["blocks"][4];
  CHECK(blk["angle"] == 1);
  CHECK(blk["patch"] == 1);
  const PatchGrid& g = db.scaffolds[1].patches[kSeparatorPatch];
  const size_t at = data + blk["offset"].get<size_t>() + 16 * g.index(1, 2);
  CHECK(std::bit_cast<double>(u64_at(s, at)) == g.at(1, 2).x);
  CHECK(std::bit_cast<double>(u64_at(s, at + 8)) == g.at(1, 2).y);
  const size_t total = data + 16 * (3 * (2 * 2 * 13 + 5 * 7));
  CHECK(s.size() == total);
}

TEST_CASE("corrupted databases are rejected") {
  const std::string good = encode_database(synthetic_db(3, {4, 12, 6}));
  std::string bad = good;
  bad[0] = 'X';
  CHECK(code_of([&] { decode_database(bad); }) == ErrorCode::kDatabase);
  CHECK(code_of([&] { decode_database(good.substr(0, good.size() - 8)); }) == ErrorCode::kDatabase);
  CHECK(code_of([&] { decode_database(good.substr(0, 20)); }) == ErrorCode::kDatabase);
  CHECK(code_of([&] { read_database("/nonexistent/db.sgdb"); }) == ErrorCode::kIo);
}

TEST_CASE("config keeps defaults and carries units in its keys") {
  const PipelineConfig c = parse_config(kMinimal);
  CHECK(c.params.screw_radius == 0.015275);
  CHECK(c.n_angles == 101);
  CHECK(c.mesh.elements_2d() == 9200);
  CHECK(c.pipeline.control);
  CHECK(parse_config(dump_config(c)).params.barrel_clearance == 0.00015);
  CHECK(dump_config(parse_config(dump_config(c))) == dump_config(c));

  auto with = [](const std::string& extra) {
    std::string s = kMinimal;
    s.insert(s.size() - 1, ", " + extra);
    return s;
  };
  CHECK(parse_config(with(R"("mesh": {"n_r": 6, "n_s_c": 200, "n_s_separator": 80}, "scaffold": {"n_mu_separator": 12, "n_nu_c": 200, "n_nu_separator": 80})"))
            .mesh.elements_2d() == 3360);
  CHECK(code_of([&] { parse_config(with(R"("mesh": {"n_r": 10}, "scaffold": {"n_mu_separator": 12})")); }) ==
        ErrorCode::kConfig);
  CHECK(code_of([&] { parse_config(with(R"("mesh": {"n_s_c": 450})")); }) == ErrorCode::kConfig);
  CHECK(code_of([&] { parse_config(R"({"geometry": {"screw_radius_mm": 15.275}})"); }) == ErrorCode::kConfig);
  CHECK(code_of([&] { parse_config(with(R"("sweep": {"n_angles": "many"})")); }) == ErrorCode::kConfig);
  CHECK(code_of([&] { parse_config(with(R"("solver": {})")); }) == ErrorCode::kConfig);
  CHECK(code_of([&] { parse_config("{"); }) == ErrorCode::kConfig);
  CHECK(code_of([&] { parse_config(R"({"geometry": {"screw_radius_m": 0.01, "centerline_distance_m": 0.05}})"); }) ==
        ErrorCode::kConfig);
}

TEST_CASE("VTK legacy output") {
  const ScaffoldDatabase db = synthetic_db(3, {4, 12, 6});
  const MeshResolution res{2, 12, 6, 2};
  const BackgroundMesh m2 = mesh_2d(db, 0.1, res);
  std::ostringstream out;
  write_vtk(out, m2, report(m2));
  const std::string s = out.str();
  CHECK(s.rfind("# vtk DataFile Version 3.0\n", 0) == 0);
  CHECK(s.find("DATASET UNSTRUCTURED_GRID") != std::string::npos);
  const size_t n = m2.cells.size();
  CHECK(s.find("CELLS " + std::to_string(n) + " " + std::to_string(5 * n)) != std::string::npos);
  CHECK(s.find("CELL_TYPES " + std::to_string(n) + "\n9\n") != std::string::npos);
  CHECK(s.find("SCALARS scaled_jacobian double 1") != std::string::npos);
  CHECK(s.find("POINT_DATA " + std::to_string(m2.vertices.size()) + "\nSCALARS boundary_tag int 1") !=
        std::string::npos);

  const BackgroundMesh m3 = extrude_3d(db, 0.0, res);
  std::ostringstream out3;
  write_vtk(out3, m3, report(m3));
  CHECK(out3.str().find("CELL_TYPES " + std::to_string(m3.cells.size()) + "\n12\n") != std::string::npos);
  CHECK(code_of([&] { write_vtk(out3, m3, QualityReport{}); }) == ErrorCode::kIo);
}
