#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <vector>

#include "screwgen/error.hpp"
#include "screwgen/vec2.hpp"

namespace screwgen {

/// Twin-screw geometry parameters (SI units).
struct ScrewParams {
  double screw_radius = 0.0;         // R_s
  double centerline_distance = 0.0;  // C_l
  double screw_clearance = 0.0;      // delta_s
  double barrel_clearance = 0.0;     // delta_b
  double pitch_length = 0.0;         // 0 for planar use
  int flight_count = 2;
  double rotation_speed = 0.0;       // revolutions per second, metadata only

  double barrel_radius() const { return screw_radius + barrel_clearance; }
  /// Rotation after which a cross-section repeats.
  double period() const { return 2.0 * kPi / flight_count; }
  Vec2 left_center() const { return {-0.5 * centerline_distance, 0.0}; }
  Vec2 right_center() const { return {0.5 * centerline_distance, 0.0}; }
  void validate() const;
};

struct PointCloud {
  std::vector<Vec2> points;
  /// Optional per-point parametric values (empty when absent).
  std::vector<double> params;

  size_t size() const { return points.size(); }
};

struct CasingArc {
  Vec2 center;
  double radius = 0.0;
};

enum class Side { kLeft, kRight };

/// Planar cross-section of the extruder at rotation angle `angle`.
/// Rotor clouds are closed counterclockwise loops without a repeated point.
struct CrossSection {
  double angle = 0.0;
  PointCloud left_rotor;
  PointCloud right_rotor;
  CasingArc casing_left;
  CasingArc casing_right;
  /// [0] upper (y > 0), [1] lower.
  std::array<Vec2, 2> cusp_points;

  const PointCloud& rotor(Side s) const { return s == Side::kLeft ? left_rotor : right_rotor; }
  const CasingArc& casing(Side s) const { return s == Side::kLeft ? casing_left : casing_right; }
};

/// Self-wiping profile built from circular tip, root and flank arcs. The
/// profile is generated for centerline distance C_l - delta_s, which leaves a
/// gap of exactly delta_s between the rotors when they are placed at C_l. The
/// tip radius stays R_s; the barrel has radius R_s + delta_b.
CrossSection booy_profile(const ScrewParams& params, double theta, int n_points = 720);

/// Single rotor (own frame, tip of lobe 0 on the +x axis), CCW, starting at
/// the tip center.
std::vector<Vec2> booy_rotor_shape(const ScrewParams& params, int n_points);

/// Intersections of the two casing circles: [0] upper, [1] lower.
std::array<Vec2, 2> cusp_points(const ScrewParams& params);

/// Cross-section on the conveying helix at axial position z.
CrossSection section_at_z(const ScrewParams& params, double theta0, double z, int n_points = 720);

/// Convex blend between a rotor cloud (s = 0) and a concentric circle of
/// `circle_radius` (s = 1). Points are matched by polar angle about the rotor
/// center.
PointCloud extension_profile(const CrossSection& section, Side side, double s, double circle_radius);

/// Rigidly co-rotate the rotors of `base` to angle `theta`.
CrossSection rotate_section(const CrossSection& base, const ScrewParams& params, double theta);

/// Throws kInvalidGeometry when an invariant of CrossSection is violated.
void validate_section(const CrossSection& section);

/// Point-cloud file (`screwgen-profile v1`). Centers and barrel radius come
/// from `params`.
std::vector<CrossSection> load_profiles(const std::filesystem::path& path, const ScrewParams& params);
CrossSection load_profile(const std::filesystem::path& path, const ScrewParams& params);
void save_profile(const std::filesystem::path& path, const std::vector<CrossSection>& sections);

double signed_area(const std::vector<Vec2>& loop);

}  // namespace screwgen
