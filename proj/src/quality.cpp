#include "screwgen/quality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"

namespace screwgen {

namespace {

double clamp_unit(double v) { return std::clamp(v, -1.0, 1.0); }

double abs_cos(const Vec3& a, const Vec3& b) {
  const double n = norm(a) * norm(b);
  return n > 0.0 ? std::abs(dot(a, b)) / n : 1.0;
}

Vec3 lift(const Vec2& p) { return {p.x, p.y, 0.0}; }

}  // namespace

double scaled_jacobian_quad(const std::array<Vec2, 4>& q) {
  double out = 1.0;
  for (size_t k = 0; k < 4; ++k) {
    const Vec2 e1 = q[(k + 1) % 4] - q[k], e2 = q[(k + 3) % 4] - q[k];
    const double n = norm(e1) * norm(e2);
    if (n == 0.0) return 0.0;
    out = std::min(out, cross(e1, e2) / n);
  }
  return clamp_unit(out);
}

double scaled_jacobian_hex(const std::array<Vec3, 8>& h) {
  double out = 1.0;
  for (size_t k = 0; k < 8; ++k) {
    const size_t b = k % 4;
    const bool top = k >= 4;
    const size_t base = top ? 4 : 0;
    const size_t next = base + (b + 1) % 4, prev = base + (b + 3) % 4, other = top ? b : k + 4;
    const Vec3 e1 = h[top ? prev : next] - h[k], e2 = h[top ? next : prev] - h[k], e3 = h[other] - h[k];
    const double n = norm(e1) * norm(e2) * norm(e3);
    if (n == 0.0) return 0.0;
    out = std::min(out, dot(cross(e1, e2), e3) / n);
  }
  return clamp_unit(out);
}

QualityReport report(const BackgroundMesh& mesh) {
  QualityReport r;
  r.elements = static_cast<long>(mesh.cells.size());
  r.scaled_jacobian.reserve(mesh.cells.size());
  double sum = 0.0, osum = 0.0;
  r.min = std::numeric_limits<double>::infinity();
  r.max = -r.min;
  for (const auto& c : mesh.cells) {
    auto v = [&](int k) { return mesh.vertices[static_cast<size_t>(c[static_cast<size_t>(k)])]; };
    double sj, orth;
    if (mesh.dim == 2) {
      const std::array<Vec2, 4> q{Vec2{v(0).x, v(0).y}, Vec2{v(1).x, v(1).y}, Vec2{v(2).x, v(2).y},
                                  Vec2{v(3).x, v(3).y}};
      sj = scaled_jacobian_quad(q);
      orth = abs_cos(lift(q[1] + q[2] - q[0] - q[3]), lift(q[2] + q[3] - q[0] - q[1]));
    } else {
      std::array<Vec3, 8> h;
      for (int k = 0; k < 8; ++k) h[static_cast<size_t>(k)] = v(k);
      sj = scaled_jacobian_hex(h);
      auto face = [&](std::initializer_list<int> ids) {
        Vec3 s{};
        for (int k : ids) s = s + h[static_cast<size_t>(k)];
        return s;
      };
      const Vec3 d1 = face({1, 2, 5, 6}) - face({0, 3, 4, 7});
      const Vec3 d2 = face({2, 3, 6, 7}) - face({0, 1, 4, 5});
      const Vec3 d3 = face({4, 5, 6, 7}) - face({0, 1, 2, 3});
      orth = std::max({abs_cos(d1, d2), abs_cos(d1, d3), abs_cos(d2, d3)});
    }
    r.scaled_jacobian.push_back(sj);
    r.min = std::min(r.min, sj);
    r.max = std::max(r.max, sj);
    sum += sj;
    osum += orth;
    r.orthogonality_max = std::max(r.orthogonality_max, orth);
    if (sj <= 0.0) ++r.fold_count;
  }
  if (r.elements > 0) {
    r.mean = sum / static_cast<double>(r.elements);
    r.orthogonality_mean = osum / static_cast<double>(r.elements);
  } else {
    r.min = r.max = 0.0;
  }
  return r;
}

std::vector<double> gate_angles(const ScaffoldDatabase& db, bool midway) {
  std::vector<double> out = db.angles;
  if (midway)
    for (size_t i = 0; i + 1 < db.angles.size(); ++i) out.push_back(0.5 * (db.angles[i] + db.angles[i + 1]));
  return out;
}

GateResult sweep_gate(const ScaffoldDatabase& db, const MeshResolution& res, std::span<const double> thetas) {
  GateResult g;
  bool first = true;
  for (double t : thetas) {
    QualityReport r = report(mesh_2d(db, t, res));
    ++g.samples;
    g.min_per_theta.push_back(r.min);
    if (r.fold_count > 0) g.pass = false;
    if (first || r.min < g.worst.min) {
      g.worst = std::move(r);
      g.worst_theta = t;
      first = false;
    }
  }
  return g;
}

std::string to_json(const QualityReport& r, bool per_element) {
  nlohmann::json j{{"elements", r.elements},
                   {"fold_count", r.fold_count},
                   {"scaled_jacobian", {{"min", r.min}, {"max", r.max}, {"mean", r.mean}}},
                   {"orthogonality_abs_cos", {{"mean", r.orthogonality_mean}, {"max", r.orthogonality_max}}}};
  if (per_element) j["scaled_jacobian"]["values"] = r.scaled_jacobian;
  return j.dump(2);
}

}  // namespace screwgen
