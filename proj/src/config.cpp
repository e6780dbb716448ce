#include "screwgen/config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace screwgen {

namespace {

using nlohmann::json;

// Reads the listed keys of one section into their targets.
class Section {
 public:
  Section(const json& root, const std::string& name) : name_(name) {
    if (!root.contains(name)) return;
    obj_ = &root.at(name);
    if (!obj_->is_object()) fail(ErrorCode::kConfig, "section '" + name + "' must be an object");
  }

  template <class T>
  Section& get(const std::string& key, T& target) {
    known_.push_back(key);
    if (!obj_ || !obj_->contains(key)) return *this;
    try {
      target = obj_->at(key).get<T>();
    } catch (const json::exception&) {
      fail(ErrorCode::kConfig, name_ + "." + key + " has the wrong type");
    }
    return *this;
  }

  void done() const {
    if (!obj_) return;
    for (const auto& [k, v] : obj_->items())
      if (std::find(known_.begin(), known_.end(), k) == known_.end())
        fail(ErrorCode::kConfig, "unknown key " + name_ + "." + k);
  }

 private:
  std::string name_;
  const json* obj_ = nullptr;
  std::vector<std::string> known_;
};

}  // namespace

void PipelineConfig::validate() const {
  try {
    params.validate();
  } catch (const Error& e) {
    fail(ErrorCode::kConfig, std::string("geometry: ") + e.what());
  }
  auto need = [](bool ok, const std::string& what) {
    if (!ok) fail(ErrorCode::kConfig, what);
  };
  need(pipeline.degree >= 2, "EGG patches need degree >= 2");
  need(pipeline.fit_threshold > 0.0, "fitting threshold must be positive");
  need(pipeline.separator_xi_elements >= 2 && pipeline.separator_eta_elements >= 1, "separator needs elements");
  need(n_angles >= 2, "a sweep needs at least two angles");
  need(scaffold.n_mu_separator >= 1 && scaffold.n_nu_c >= 1 && scaffold.n_nu_separator >= 1,
       "scaffold resolutions must be positive");
  need(mesh.n_r >= 1 && mesh.n_s_c >= 1 && mesh.n_s_separator >= 1 && mesh.n_a >= 0,
       "mesh resolutions must be positive");
  need(mesh.separator_radial() % scaffold.n_mu_separator == 0,
       "2 n_r must be an integer multiple of the separator n_mu");
  need(mesh.n_s_c % scaffold.n_nu_c == 0, "C-grid n_s must be an integer multiple of its n_nu");
  need(mesh.n_s_separator % scaffold.n_nu_separator == 0, "separator n_s must be an integer multiple of its n_nu");
  need(extension.length >= 0.0 && extension.elements >= 0, "extension length and elements must be nonnegative");
  if (extension.enabled()) need(extension.circle_radius > 0.0, "extension needs a circle radius");
}

GeometrySource PipelineConfig::geometry() const {
  if (profile_file.empty()) return GeometrySource::booy(params, profile_points);
  return GeometrySource::from_file(profile_file, params);
}

PipelineConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::kConfig, std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) fail(ErrorCode::kConfig, "config must be a JSON object");
  for (const auto& [k, v] : root.items())
    if (k != "geometry" && k != "fitting" && k != "separator" && k != "egg" && k != "control" && k != "sweep" &&
        k != "scaffold" && k != "mesh" && k != "extension" && k != "output")
      fail(ErrorCode::kConfig, "unknown section " + k);

  PipelineConfig c;
  PipelineOptions& o = c.pipeline;
  Section(root, "geometry")
      .get("screw_radius_m", c.params.screw_radius)
      .get("centerline_distance_m", c.params.centerline_distance)
      .get("screw_clearance_m", c.params.screw_clearance)
      .get("barrel_clearance_m", c.params.barrel_clearance)
      .get("pitch_length_m", c.params.pitch_length)
      .get("flight_count", c.params.flight_count)
      .get("rotation_speed_rps", c.params.rotation_speed)
      .get("profile_file", c.profile_file)
      .get("profile_points", c.profile_points)
      .done();
  Section(root, "fitting")
      .get("threshold_rel", o.fit_threshold)
      .get("degree", o.degree)
      .get("rotor_elements", o.rotor_elements)
      .done();
  Section(root, "separator")
      .get("xi_elements", o.separator_xi_elements)
      .get("eta_elements", o.separator_eta_elements)
      .get("arc_samples", o.arc_samples)
      .done();
  Section(root, "egg")
      .get("epsilon", o.egg.epsilon)
      .get("newton_tol", o.egg.newton_tol)
      .get("max_iter", o.egg.max_iter)
      .get("max_halvings", o.egg.max_halvings)
      .get("quad_per_span", o.egg.quad_per_span)
      .get("fold_samples", o.fold_samples)
      .done();
  Section(root, "control")
      .get("enabled", o.control)
      .get("delta_mono", o.control_opts.delta_mono)
      .get("max_iter", o.control_opts.max_iter)
      .get("rel_tol", o.control_opts.rel_tol)
      .get("samples", o.control_opts.samples)
      .get("chain", o.control_chain)
      .done();
  Section(root, "sweep")
      .get("n_angles", c.n_angles)
      .get("match_stride", o.match_stride)
      .get("seed_stride", o.seed_stride)
      .get("threads", o.threads)
      .done();
  Section(root, "scaffold")
      .get("n_mu_separator", c.scaffold.n_mu_separator)
      .get("n_nu_c", c.scaffold.n_nu_c)
      .get("n_nu_separator", c.scaffold.n_nu_separator)
      .done();
  Section(root, "mesh")
      .get("n_r", c.mesh.n_r)
      .get("n_s_c", c.mesh.n_s_c)
      .get("n_s_separator", c.mesh.n_s_separator)
      .get("n_a", c.mesh.n_a)
      .get("length_m", c.mesh_length)
      .done();
  Section(root, "extension")
      .get("length_m", c.extension.length)
      .get("circle_radius_m", c.extension.circle_radius)
      .get("elements", c.extension.elements)
      .done();
  Section(root, "output")
      .get("database", c.database)
      .get("mesh", c.mesh_file)
      .get("quality", c.quality_file)
      .get("profile", c.profile_out)
      .done();
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const PipelineConfig& c) {
  const PipelineOptions& o = c.pipeline;
  const json j{
      {"geometry",
       {{"screw_radius_m", c.params.screw_radius},
        {"centerline_distance_m", c.params.centerline_distance},
        {"screw_clearance_m", c.params.screw_clearance},
        {"barrel_clearance_m", c.params.barrel_clearance},
        {"pitch_length_m", c.params.pitch_length},
        {"flight_count", c.params.flight_count},
        {"rotation_speed_rps", c.params.rotation_speed},
        {"profile_file", c.profile_file},
        {"profile_points", c.profile_points}}},
      {"fitting", {{"threshold_rel", o.fit_threshold}, {"degree", o.degree}, {"rotor_elements", o.rotor_elements}}},
      {"separator",
       {{"xi_elements", o.separator_xi_elements},
        {"eta_elements", o.separator_eta_elements},
        {"arc_samples", o.arc_samples}}},
      {"egg",
       {{"epsilon", o.egg.epsilon},
        {"newton_tol", o.egg.newton_tol},
        {"max_iter", o.egg.max_iter},
        {"max_halvings", o.egg.max_halvings},
        {"quad_per_span", o.egg.quad_per_span},
        {"fold_samples", o.fold_samples}}},
      {"control",
       {{"enabled", o.control},
        {"delta_mono", o.control_opts.delta_mono},
        {"max_iter", o.control_opts.max_iter},
        {"rel_tol", o.control_opts.rel_tol},
        {"samples", o.control_opts.samples},
        {"chain", o.control_chain}}},
      {"sweep",
       {{"n_angles", c.n_angles}, {"match_stride", o.match_stride}, {"seed_stride", o.seed_stride}, {"threads", o.threads}}},
      {"scaffold",
       {{"n_mu_separator", c.scaffold.n_mu_separator},
        {"n_nu_c", c.scaffold.n_nu_c},
        {"n_nu_separator", c.scaffold.n_nu_separator}}},
      {"mesh",
       {{"n_r", c.mesh.n_r},
        {"n_s_c", c.mesh.n_s_c},
        {"n_s_separator", c.mesh.n_s_separator},
        {"n_a", c.mesh.n_a},
        {"length_m", c.mesh_length}}},
      {"extension",
       {{"length_m", c.extension.length},
        {"circle_radius_m", c.extension.circle_radius},
        {"elements", c.extension.elements}}},
      {"output",
       {{"database", c.database}, {"mesh", c.mesh_file}, {"quality", c.quality_file}, {"profile", c.profile_out}}}};
  return j.dump(2);
}

}  // namespace screwgen
