#include "screwgen/database_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace screwgen {

namespace {

constexpr char kMagic[8] = {'S', 'G', 'D', 'B', 1, 0, 0, 0};
constexpr const char* kFormat = "sgdb-1";

void put_u64(std::string& out, std::uint64_t v) {
  for (int k = 0; k < 8; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xffu));
}

std::uint64_t get_u64(const std::string& in, size_t at) {
  std::uint64_t v = 0;
  for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + static_cast<size_t>(k)])) << (8 * k);
  return v;
}

nlohmann::json params_json(const ScrewParams& p) {
  return {{"screw_radius_m", p.screw_radius},
          {"centerline_distance_m", p.centerline_distance},
          {"screw_clearance_m", p.screw_clearance},
          {"barrel_clearance_m", p.barrel_clearance},
          {"pitch_length_m", p.pitch_length},
          {"flight_count", p.flight_count},
          {"rotation_speed_rps", p.rotation_speed}};
}

ScrewParams params_from(const nlohmann::json& j) {
  ScrewParams p;
  p.screw_radius = j.at("screw_radius_m").get<double>();
  p.centerline_distance = j.at("centerline_distance_m").get<double>();
  p.screw_clearance = j.at("screw_clearance_m").get<double>();
  p.barrel_clearance = j.at("barrel_clearance_m").get<double>();
  p.pitch_length = j.at("pitch_length_m").get<double>();
  p.flight_count = j.at("flight_count").get<int>();
  p.rotation_speed = j.at("rotation_speed_rps").get<double>();
  return p;
}

}  // namespace

std::string encode_database(const ScaffoldDatabase& db) {
  db.validate();
  nlohmann::json index{{"format", kFormat},
                       {"params", params_json(db.params)},
                       {"resolution",
                        {{"n_mu_separator", db.resolution.n_mu_separator},
                         {"n_nu_c", db.resolution.n_nu_c},
                         {"n_nu_separator", db.resolution.n_nu_separator}}},
                       {"angles_rad", db.angles}};
  nlohmann::json blocks = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (size_t a = 0; a < db.scaffolds.size(); ++a)
    for (size_t p = 0; p < 3; ++p) {
      const PatchGrid& g = db.scaffolds[a].patches[p];
      const std::uint64_t bytes = 16u * g.points.size();
      blocks.push_back({{"angle", a}, {"patch", p}, {"n_mu", g.n_mu}, {"n_nu", g.n_nu}, {"offset", offset},
                        {"bytes", bytes}});
      offset += bytes;
    }
  index["blocks"] = std::move(blocks);
  const std::string text = index.dump();

  std::string out(kMagic, sizeof kMagic);
  put_u64(out, text.size());
  out += text;
  out.append((8 - out.size() % 8) % 8, '\0');
  out.reserve(out.size() + offset);
  for (const auto& s : db.scaffolds)
    for (const auto& g : s.patches)
      for (const Vec2& q : g.points) {
        put_u64(out, std::bit_cast<std::uint64_t>(q.x));
        put_u64(out, std::bit_cast<std::uint64_t>(q.y));
      }
  return out;
}

ScaffoldDatabase decode_database(const std::string& in) {
  if (in.size() < 16 || std::memcmp(in.data(), kMagic, sizeof kMagic) != 0)
    fail(ErrorCode::kDatabase, "not an sgdb-1 database");
  const std::uint64_t len = get_u64(in, 8);
  if (len > in.size() - 16) fail(ErrorCode::kDatabase, "truncated database index");
  ScaffoldDatabase db;
  const size_t data = static_cast<size_t>(16 + len + (8 - (16 + len) % 8) % 8);
  try {
    const auto index = nlohmann::json::parse(in.substr(16, static_cast<size_t>(len)));
    if (index.at("format") != kFormat) fail(ErrorCode::kDatabase, "unsupported database format");
    db.params = params_from(index.at("params"));
    const auto& r = index.at("resolution");
    db.resolution = {r.at("n_mu_separator").get<int>(), r.at("n_nu_c").get<int>(), r.at("n_nu_separator").get<int>()};
    db.angles = index.at("angles_rad").get<std::vector<double>>();
    db.scaffolds.resize(db.angles.size());
    for (size_t a = 0; a < db.angles.size(); ++a) db.scaffolds[a].theta = db.angles[a];
    const auto& blocks = index.at("blocks");
    if (blocks.size() != 3 * db.angles.size()) fail(ErrorCode::kDatabase, "database needs three blocks per angle");
    for (const auto& b : blocks) {
      const size_t a = b.at("angle").get<size_t>(), p = b.at("patch").get<size_t>();
      if (a >= db.angles.size() || p > 2) fail(ErrorCode::kDatabase, "block refers to a missing angle or patch");
      PatchGrid g(b.at("n_mu").get<int>(), b.at("n_nu").get<int>());
      const std::uint64_t off = b.at("offset").get<std::uint64_t>(), bytes = b.at("bytes").get<std::uint64_t>();
      if (bytes != 16u * g.points.size() || off > in.size() - data || bytes > in.size() - data - off)
        fail(ErrorCode::kDatabase, "block size does not match its grid or the file");
      size_t at = data + static_cast<size_t>(off);
      for (Vec2& q : g.points) {
        q.x = std::bit_cast<double>(get_u64(in, at));
        q.y = std::bit_cast<double>(get_u64(in, at + 8));
        at += 16;
      }
      db.scaffolds[a].patches[p] = std::move(g);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kDatabase, std::string("malformed database index: ") + e.what());
  }
  db.validate();
  return db;
}

void write_database(const ScaffoldDatabase& db, const std::filesystem::path& path) {
  const std::string bytes = encode_database(db);
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::kIo, "cannot write " + path.string());
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) fail(ErrorCode::kIo, "write failed: " + path.string());
}

ScaffoldDatabase read_database(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return decode_database(ss.str());
}

}  // namespace screwgen
