#include "screwgen/profile.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <string>

#include "screwgen/error.hpp"

namespace screwgen {

namespace {

Vec2 polar(double r, double angle) { return {r * std::cos(angle), r * std::sin(angle)}; }

struct Segment {
  double length;
  std::function<Vec2(double)> at;  // t in [0,1]
};

void check_points(int n_points, int flights) {
  if (n_points < 64) fail(ErrorCode::kInvalidGeometry, "profile needs at least 64 points");
  if (n_points % flights != 0)
    fail(ErrorCode::kInvalidGeometry, "point count must be a multiple of the flight count");
}

}  // namespace

void ScrewParams::validate() const {
  if (!(screw_radius > 0.0)) fail(ErrorCode::kInvalidGeometry, "screw radius must be positive");
  if (!(screw_clearance >= 0.0) || !(barrel_clearance >= 0.0))
    fail(ErrorCode::kInvalidGeometry, "clearances must be non-negative");
  if (flight_count < 1 || flight_count > 3)
    fail(ErrorCode::kInvalidGeometry, "flight count must be 1, 2 or 3");
  if (!(centerline_distance > 0.0) || centerline_distance >= 2.0 * screw_radius)
    fail(ErrorCode::kInvalidGeometry, "centerline distance must lie in (0, 2 R_s)");
  if (!(pitch_length >= 0.0)) fail(ErrorCode::kInvalidGeometry, "pitch length must be non-negative");
  const double design = centerline_distance - screw_clearance;
  if (!(design > 0.0)) fail(ErrorCode::kInvalidGeometry, "screw clearance exceeds centerline distance");
  const double psi = std::acos(design / (2.0 * screw_radius));
  if (kPi / flight_count - 2.0 * psi <= 0.0)
    fail(ErrorCode::kInvalidGeometry, "no tip arc is left for this flight count and centerline distance");
}

std::vector<Vec2> booy_rotor_shape(const ScrewParams& params, int n_points) {
  params.validate();
  check_points(n_points, params.flight_count);
  const double rs = params.screw_radius;
  const double d = params.centerline_distance - params.screw_clearance;
  const double psi = std::acos(d / (2.0 * rs));
  const double alpha = kPi / params.flight_count - 2.0 * psi;  // tip and root arc angle
  const double root = d - rs;

  std::vector<Segment> segs;
  auto arc = [&](double r, double a0, double a1) {
    segs.push_back({r * std::abs(a1 - a0), [r, a0, a1](double t) { return polar(r, a0 + (a1 - a0) * t); }});
  };
  // Flank arcs have radius d and are centered opposite a tip corner of the mating rotor.
  auto flank_down = [&](double phi_root) {
    segs.push_back({d * psi, [=](double t) {
                      return polar(-rs, phi_root) + polar(d, phi_root - psi * (1.0 - t));
                    }});
  };
  auto flank_up = [&](double phi_root) {
    segs.push_back({d * psi, [=](double t) { return polar(-rs, phi_root) + polar(d, phi_root + psi * t); }});
  };
  // One lobe, from the tip center at angle 0 to the next tip center; the other
  // lobes are exact rotations of it.
  const int n = params.flight_count;
  const double lobe = 2.0 * kPi / n;
  arc(rs, 0.0, 0.5 * alpha);
  const double root_start = 0.5 * alpha + 2.0 * psi;
  flank_down(root_start);
  arc(root, root_start, root_start + alpha);
  flank_up(root_start + alpha);
  arc(rs, lobe - 0.5 * alpha, lobe);

  const int per_lobe = n_points / n;
  const double total = std::accumulate(segs.begin(), segs.end(), 0.0,
                                       [](double s, const Segment& g) { return s + g.length; });
  std::vector<int> counts;
  int assigned = 0;
  for (const auto& g : segs) {
    counts.push_back(std::max(2, static_cast<int>(std::lround(per_lobe * g.length / total))));
    assigned += counts.back();
  }
  while (assigned != per_lobe) {
    const int step = assigned < per_lobe ? 1 : -1;
    // Adjust the segment whose point spacing is furthest from the mean.
    int best = -1;
    double best_score = 0.0;
    for (size_t s = 0; s < segs.size(); ++s) {
      if (step < 0 && counts[s] <= 2) continue;
      const double spacing = segs[s].length / counts[s];
      const double score = step > 0 ? spacing : -spacing;
      if (best < 0 || score > best_score) {
        best = static_cast<int>(s);
        best_score = score;
      }
    }
    counts[static_cast<size_t>(best)] += step;
    assigned += step;
  }
  std::vector<Vec2> first;
  for (size_t s = 0; s < segs.size(); ++s)
    for (int i = 0; i < counts[s]; ++i) first.push_back(segs[s].at(static_cast<double>(i) / counts[s]));
  std::vector<Vec2> out;
  out.reserve(static_cast<size_t>(n_points));
  for (int k = 0; k < n; ++k)
    for (const Vec2& p : first) out.push_back(k == 0 ? p : rotate(p, k * lobe));
  return out;
}

std::array<Vec2, 2> cusp_points(const ScrewParams& params) {
  const double rb = params.barrel_radius();
  const double half = 0.5 * params.centerline_distance;
  if (!(half < rb)) fail(ErrorCode::kInvalidGeometry, "casing circles do not intersect");
  const double y = std::sqrt(rb * rb - half * half);
  return {Vec2{0.0, y}, Vec2{0.0, -y}};
}

namespace {

CrossSection place_rotors(const ScrewParams& params, const std::vector<Vec2>& shape, double theta) {
  CrossSection cs;
  cs.angle = theta;
  const Vec2 lc = params.left_center();
  const Vec2 rc = params.right_center();
  const double right_offset = kPi / params.flight_count;
  cs.left_rotor.points.reserve(shape.size());
  cs.right_rotor.points.reserve(shape.size());
  for (const Vec2& p : shape) {
    cs.left_rotor.points.push_back(lc + rotate(p, theta));
    cs.right_rotor.points.push_back(rc + rotate(p, theta + right_offset));
  }
  cs.casing_left = {lc, params.barrel_radius()};
  cs.casing_right = {rc, params.barrel_radius()};
  cs.cusp_points = cusp_points(params);
  return cs;
}

}  // namespace

CrossSection booy_profile(const ScrewParams& params, double theta, int n_points) {
  return place_rotors(params, booy_rotor_shape(params, n_points), theta);
}

CrossSection section_at_z(const ScrewParams& params, double theta0, double z, int n_points) {
  if (!(params.pitch_length > 0.0))
    fail(ErrorCode::kUnsupported, "axial sections need a positive pitch length");
  return booy_profile(params, theta0 + 2.0 * kPi * z / params.pitch_length, n_points);
}

PointCloud extension_profile(const CrossSection& section, Side side, double s, double circle_radius) {
  if (!(s >= 0.0 && s <= 1.0)) fail(ErrorCode::kDomain, "blend parameter outside [0,1]");
  if (!(circle_radius > 0.0)) fail(ErrorCode::kInvalidGeometry, "circle radius must be positive");
  const Vec2 c = section.casing(side).center;
  PointCloud out;
  out.params = section.rotor(side).params;
  for (const Vec2& p : section.rotor(side).points) {
    const Vec2 r = p - c;
    const double len = norm(r);
    if (len == 0.0) fail(ErrorCode::kInvalidGeometry, "rotor point coincides with its center");
    const Vec2 q = c + r * (circle_radius / len);
    out.points.push_back(lerp(p, q, s));
  }
  return out;
}

CrossSection rotate_section(const CrossSection& base, const ScrewParams& params, double theta) {
  CrossSection cs = base;
  cs.angle = theta;
  const double d = theta - base.angle;
  for (auto& p : cs.left_rotor.points) p = rotate_about(p, params.left_center(), d);
  for (auto& p : cs.right_rotor.points) p = rotate_about(p, params.right_center(), d);
  return cs;
}

double signed_area(const std::vector<Vec2>& loop) {
  double a = 0.0;
  for (size_t i = 0; i < loop.size(); ++i) a += cross(loop[i], loop[(i + 1) % loop.size()]);
  return 0.5 * a;
}

void validate_section(const CrossSection& section) {
  for (Side side : {Side::kLeft, Side::kRight}) {
    const auto& pts = section.rotor(side).points;
    if (pts.size() < 8) fail(ErrorCode::kInvalidGeometry, "rotor cloud has fewer than 8 points");
    for (size_t i = 0; i < pts.size(); ++i) {
      const Vec2& a = pts[i];
      const Vec2& b = pts[(i + 1) % pts.size()];
      if (a == b) fail(ErrorCode::kInvalidGeometry, "rotor cloud repeats a point");
    }
    if (signed_area(pts) <= 0.0) fail(ErrorCode::kInvalidGeometry, "rotor cloud is not counterclockwise");
    for (const Vec2& p : pts) {
      const double dl = distance(p, section.casing_left.center) - section.casing_left.radius;
      const double dr = distance(p, section.casing_right.center) - section.casing_right.radius;
      if (std::min(dl, dr) > 1e-9 * section.casing_left.radius)
        fail(ErrorCode::kInvalidGeometry, "rotor point lies outside the casing");
    }
  }
}

std::vector<CrossSection> load_profiles(const std::filesystem::path& path, const ScrewParams& params) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open profile file " + path.string());
  std::vector<CrossSection> out;
  bool header = false;
  std::string line;
  int lineno = 0;
  auto parse_error = [&](const std::string& msg) {
    fail(ErrorCode::kParse, path.string() + ":" + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;
    if (!header) {
      std::string version;
      ls >> version;
      if (word != "screwgen-profile" || version != "v1") parse_error("missing 'screwgen-profile v1' header");
      header = true;
      continue;
    }
    if (word == "section") {
      std::string arg;
      ls >> arg;
      const auto eq = arg.find('=');
      if (eq == std::string::npos) parse_error("section needs theta=<radians>");
      const std::string key = arg.substr(0, eq);
      if (key != "theta" && key != "θ") parse_error("unknown section key '" + key + "'");
      CrossSection cs;
      try {
        cs.angle = std::stod(arg.substr(eq + 1));
      } catch (const std::exception&) {
        parse_error("bad section angle");
      }
      cs.casing_left = {params.left_center(), params.barrel_radius()};
      cs.casing_right = {params.right_center(), params.barrel_radius()};
      cs.cusp_points = cusp_points(params);
      out.push_back(std::move(cs));
    } else if (word == "L" || word == "R") {
      if (out.empty()) parse_error("point before the first section");
      Vec2 p;
      if (!(ls >> p.x >> p.y)) parse_error("expected two coordinates");
      (word == "L" ? out.back().left_rotor : out.back().right_rotor).points.push_back(p);
    } else {
      parse_error("unexpected token '" + word + "'");
    }
  }
  if (!header) fail(ErrorCode::kParse, path.string() + ": empty profile file");
  if (out.empty()) fail(ErrorCode::kParse, path.string() + ": no sections");
  for (auto& cs : out) {
    for (auto* cloud : {&cs.left_rotor, &cs.right_rotor}) {
      auto& pts = cloud->points;
      if (pts.size() > 1 && pts.front() == pts.back()) pts.pop_back();
      if (signed_area(pts) < 0.0) std::reverse(pts.begin() + 1, pts.end());
    }
    validate_section(cs);
  }
  return out;
}

CrossSection load_profile(const std::filesystem::path& path, const ScrewParams& params) {
  return load_profiles(path, params).front();
}

void save_profile(const std::filesystem::path& path, const std::vector<CrossSection>& sections) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write profile file " + path.string());
  out << "screwgen-profile v1\n";
  out << std::setprecision(17);
  for (const auto& cs : sections) {
    out << "section theta=" << cs.angle << "\n";
    for (const Vec2& p : cs.left_rotor.points) out << "L " << p.x << " " << p.y << "\n";
    for (const Vec2& p : cs.right_rotor.points) out << "R " << p.x << " " << p.y << "\n";
  }
  if (!out) fail(ErrorCode::kIo, "write failed for " + path.string());
}

}  // namespace screwgen
