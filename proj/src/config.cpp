#include "gatedlio/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

namespace gatedlio {

CovMatrix InitialCovariance::matrix() const {
  ErrorState d;
  const double blocks[10] = {rot, pos, vel, bias_gyro, bias_acc, gravity, extrinsic, extrinsic, extrinsic, extrinsic};
  for (int b = 0; b < 10; ++b) d.segment<3>(3 * b).setConstant(blocks[b]);
  return d.asDiagonal();
}

std::string_view to_string(InitMode mode) {
  return mode == InitMode::kStatic ? "static" : "ground_truth";
}

namespace {

InitMode init_mode_from_string(const std::string& s) {
  if (s == "static") return InitMode::kStatic;
  if (s == "ground_truth") return InitMode::kGroundTruth;
  throw std::invalid_argument("unknown init mode '" + s + "' (expected static or ground_truth)");
}

// Reads keys from one table and remembers which were consumed so leftovers
// can be reported as unknown.
class Section {
 public:
  Section(const toml::table* tbl, std::string name) : tbl_(tbl), name_(std::move(name)) {}

  void get(const char* key, double& out) {
    if (const toml::node* n = find(key)) {
      const auto v = n->value<double>();
      if (!v || !(n->is_floating_point() || n->is_integer())) fail(key, "expected a number");
      out = *v;
    }
  }
  void get(const char* key, bool& out) {
    if (const toml::node* n = find(key)) {
      if (!n->is_boolean()) fail(key, "expected true/false");
      out = *n->value<bool>();
    }
  }
  void get(const char* key, std::string& out) {
    if (const toml::node* n = find(key)) {
      if (!n->is_string()) fail(key, "expected a string");
      out = *n->value<std::string>();
    }
  }
  void get(const char* key, std::int64_t& out) {
    if (const toml::node* n = find(key)) {
      if (!n->is_integer()) fail(key, "expected an integer");
      out = *n->value<std::int64_t>();
    }
  }
  void get(const char* key, int& out) {
    std::int64_t v = out;
    get(key, v);
    out = static_cast<int>(v);
  }
  void get(const char* key, std::size_t& out) {
    std::int64_t v = static_cast<std::int64_t>(out);
    get(key, v);
    if (v < 0) fail(key, "must be non-negative");
    out = static_cast<std::size_t>(v);
  }
  void get(const char* key, Vec3& out) {
    if (const toml::node* n = find(key)) {
      const toml::array* a = n->as_array();
      if (!a || a->size() != 3) fail(key, "expected an array of 3 numbers");
      for (std::size_t i = 0; i < 3; ++i) {
        const auto v = (*a)[i].value<double>();
        if (!v) fail(key, "expected an array of 3 numbers");
        out[static_cast<Eigen::Index>(i)] = *v;
      }
    }
  }
  // Rotation given as a rotation vector (rad).
  void get(const char* key, Rotation& out) {
    if (!find(key)) return;
    Vec3 v = Vec3::Zero();
    get(key, v);
    out = exp_so3(v);
  }
  void get(const char* key, std::vector<double>& out) {
    if (const toml::node* n = find(key)) {
      const toml::array* a = n->as_array();
      if (!a) fail(key, "expected an array of numbers");
      out.clear();
      for (const auto& e : *a) {
        const auto v = e.value<double>();
        if (!v) fail(key, "expected an array of numbers");
        out.push_back(*v);
      }
    }
  }
  void get(const char* key, std::vector<std::string>& out) {
    if (const toml::node* n = find(key)) {
      const toml::array* a = n->as_array();
      if (!a) fail(key, "expected an array of strings");
      out.clear();
      for (const auto& e : *a) {
        if (!e.is_string()) fail(key, "expected an array of strings");
        out.push_back(*e.value<std::string>());
      }
    }
  }

  void finish() const {
    if (!tbl_) return;
    for (const auto& [k, v] : *tbl_) {
      if (!used_.count(std::string(k.str()))) {
        throw std::invalid_argument("unknown key '" + name_ + "." + std::string(k.str()) + "'");
      }
    }
  }

  [[noreturn]] void fail(const char* key, const std::string& what) const {
    throw std::invalid_argument("config key '" + name_ + "." + key + "': " + what);
  }

 private:
  const toml::node* find(const char* key) {
    if (!tbl_) return nullptr;
    const toml::node* n = tbl_->get(key);
    if (n) used_.insert(key);
    return n;
  }

  const toml::table* tbl_;
  std::string name_;
  std::set<std::string> used_;
};

const toml::table* sub_table(const toml::table& root, const char* name) {
  const toml::node* n = root.get(name);
  if (!n) return nullptr;
  if (!n->is_table()) throw std::invalid_argument(std::string("config section '") + name + "' must be a table");
  return n->as_table();
}

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("invalid config: " + what);
}

void validate(const RunConfig& c) {
  const auto& f = c.filter;
  require(f.iekf.max_iter >= 1, "filter.max_iter must be >= 1");
  require(f.iekf.step_tol > 0.0, "filter.step_tol must be positive");
  require(f.point_stride >= 1, "filter.point_stride must be >= 1");
  require(f.static_init_time > 0.0, "filter.static_init_time must be positive");
  require(f.iekf.lidar.sigma > 0.0, "lidar.sigma must be positive");
  require(f.iekf.lidar.num_neighbors >= 5, "lidar.num_neighbors must be >= 5");
  require(f.iekf.lidar.plane_tol > 0.0 && f.iekf.lidar.corr_gate > 0.0 && f.iekf.lidar.max_neighbor_dist > 0.0,
          "lidar tolerances must be positive");
  require(f.iekf.lidar.min_spread_ratio >= 0.0 && f.iekf.lidar.min_spread_ratio <= 1.0,
          "lidar.min_spread_ratio must be in [0, 1]");
  require(f.map.voxel_size > 0.0, "map.voxel_size must be positive");
  require(f.iekf.thresholds.rot >= 0.0 && f.iekf.thresholds.trans >= 0.0, "degeneracy thresholds must be >= 0");
  require(f.odom.sigma_rot > 0.0 && f.odom.sigma_pos_floor > 0.0 && f.odom.sigma_pos_per_m >= 0.0,
          "odometry noise must be positive");
  const auto& n = f.imu_noise;
  require(n.sigma_g >= 0.0 && n.sigma_a >= 0.0 && n.sigma_wg >= 0.0 && n.sigma_wa >= 0.0, "imu_noise must be >= 0");
  const auto& p = f.p0;
  require(p.rot > 0.0 && p.pos > 0.0 && p.vel > 0.0 && p.bias_gyro > 0.0 && p.bias_acc > 0.0 && p.gravity > 0.0 &&
              p.extrinsic > 0.0,
          "initial_covariance entries must be positive");
  const auto& s = c.sim;
  require(s.world == "corridor" || s.world == "room", "simulation.world must be corridor or room");
  require(s.duration > 0.0, "simulation.duration must be positive");
  require(s.sigma_l >= 0.0, "simulation.sigma_l must be >= 0");
  require(s.rig.imu_rate > 0.0 && s.rig.odom_rate > 0.0 && s.rig.lidar.rate > 0.0, "sensor rates must be positive");
  require(s.rig.lidar.azimuth_res > 0.0 && s.rig.lidar.max_range > 0.0, "lidar pattern must be positive");
  require(s.rig.lidar.drop_prob >= 0.0 && s.rig.lidar.drop_prob < 1.0, "simulation.drop_prob must be in [0, 1)");
  require(s.trajectory.stationary_time >= 0.0 && s.trajectory.ramp_time >= 0.0, "trajectory times must be >= 0");
  require(c.campaign.runs >= 1, "campaign.runs must be >= 1");
  require(!c.campaign.sigmas.empty(), "campaign.sigmas must not be empty");
  for (double v : c.campaign.sigmas) require(v > 0.0, "campaign.sigmas must be positive");
  require(!c.campaign.modes.empty(), "campaign.modes must not be empty");
}

}  // namespace

RunConfig parse_config(const std::string& toml_text, const std::string& source) {
  toml::table root;
  try {
    root = toml::parse(toml_text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << source << ":" << e.source().begin.line << ": " << e.description();
    throw std::invalid_argument(msg.str());
  }
  static const std::set<std::string> kSections = {"filter",     "imu_noise",          "lidar",      "map",
                                                  "degeneracy", "odometry",           "extrinsics", "simulation",
                                                  "trajectory", "initial_covariance", "campaign"};
  for (const auto& [k, v] : root) {
    if (!kSections.count(std::string(k.str()))) {
      throw std::invalid_argument("unknown config section '" + std::string(k.str()) + "'");
    }
  }

  RunConfig c;
  FilterConfig& f = c.filter;
  sim::SimConfig& s = c.sim;
  {
    Section t(sub_table(root, "filter"), "filter");
    std::string mode(to_string(f.iekf.mode)), init(to_string(f.init));
    t.get("mode", mode);
    t.get("init", init);
    f.iekf.mode = fusion_mode_from_string(mode);
    f.init = init_mode_from_string(init);
    t.get("static_init_time", f.static_init_time);
    t.get("point_stride", f.point_stride);
    t.get("max_iter", f.iekf.max_iter);
    t.get("step_tol", f.iekf.step_tol);
    t.get("joseph_form", f.iekf.joseph_form);
    t.get("freeze_lidar_extrinsic", f.iekf.freeze_lidar_extrinsic);
    t.get("freeze_odom_extrinsic", f.iekf.freeze_odom_extrinsic);
    t.get("reuse_trans", f.iekf.reuse_trans);
    t.get("reuse_rot", f.iekf.reuse_rot);
    t.finish();
  }
  {
    Section t(sub_table(root, "imu_noise"), "imu_noise");
    t.get("sigma_g", f.imu_noise.sigma_g);
    t.get("sigma_a", f.imu_noise.sigma_a);
    t.get("sigma_wg", f.imu_noise.sigma_wg);
    t.get("sigma_wa", f.imu_noise.sigma_wa);
    t.finish();
    s.imu_noise = f.imu_noise;
  }
  {
    Section t(sub_table(root, "lidar"), "lidar");
    t.get("sigma", f.iekf.lidar.sigma);
    t.get("num_neighbors", f.iekf.lidar.num_neighbors);
    t.get("plane_tol", f.iekf.lidar.plane_tol);
    t.get("corr_gate", f.iekf.lidar.corr_gate);
    t.get("max_neighbor_dist", f.iekf.lidar.max_neighbor_dist);
    t.get("min_spread_ratio", f.iekf.lidar.min_spread_ratio);
    t.finish();
  }
  {
    Section t(sub_table(root, "map"), "map");
    t.get("voxel_size", f.map.voxel_size);
    t.get("rebuild_threshold", f.map.rebuild_threshold);
    t.finish();
  }
  {
    Section t(sub_table(root, "degeneracy"), "degeneracy");
    t.get("threshold_rot", f.iekf.thresholds.rot);
    t.get("threshold_trans", f.iekf.thresholds.trans);
    t.finish();
  }
  {
    Section t(sub_table(root, "odometry"), "odometry");
    t.get("sigma_rot", f.odom.sigma_rot);
    t.get("sigma_pos_per_m", f.odom.sigma_pos_per_m);
    t.get("sigma_pos_floor", f.odom.sigma_pos_floor);
    t.finish();
  }
  {
    Section t(sub_table(root, "initial_covariance"), "initial_covariance");
    t.get("rot", f.p0.rot);
    t.get("pos", f.p0.pos);
    t.get("vel", f.p0.vel);
    t.get("bias_gyro", f.p0.bias_gyro);
    t.get("bias_acc", f.p0.bias_acc);
    t.get("gravity", f.p0.gravity);
    t.get("extrinsic", f.p0.extrinsic);
    t.finish();
  }
  {
    Section t(sub_table(root, "extrinsics"), "extrinsics");
    t.get("rot_IL", s.rig.rot_IL);
    t.get("pos_IL", s.rig.pos_IL);
    t.get("rot_IO", s.rig.rot_IO);
    t.get("pos_IO", s.rig.pos_IO);
    t.finish();
  }
  {
    Section t(sub_table(root, "simulation"), "simulation");
    t.get("world", s.world);
    t.get("corridor_length", s.corridor_length);
    t.get("corridor_width", s.corridor_width);
    t.get("corridor_height", s.corridor_height);
    t.get("end_caps", s.end_caps);
    t.get("room_x", s.room_x);
    t.get("room_y", s.room_y);
    t.get("room_z", s.room_z);
    t.get("duration", s.duration);
    t.get("sigma_l", s.sigma_l);
    t.get("distort", s.distort);
    t.get("seed", s.seed);
    t.get("imu_rate", s.rig.imu_rate);
    t.get("odom_rate", s.rig.odom_rate);
    t.get("lidar_rate", s.rig.lidar.rate);
    t.get("azimuth_res", s.rig.lidar.azimuth_res);
    t.get("max_range", s.rig.lidar.max_range);
    t.get("drop_prob", s.rig.lidar.drop_prob);
    t.get("init_bias_gyro_std", s.init_bias_gyro_std);
    t.get("init_bias_acc_std", s.init_bias_acc_std);
    t.get("gravity", s.gravity);
    t.get("odom_noise_r", s.odom.noise_r);
    t.get("odom_noise_p", s.odom.noise_p);
    t.get("odom_drift", s.odom.drift);
    t.get("odom_origin_rot", s.odom.origin_rot);
    t.get("odom_origin_pos", s.odom.origin_pos);
    t.finish();
  }
  {
    Section t(sub_table(root, "trajectory"), "trajectory");
    sim::TrajectorySpec& tr = s.trajectory;
    t.get("start", tr.start);
    t.get("stationary_time", tr.stationary_time);
    t.get("ramp_time", tr.ramp_time);
    t.get("speed", tr.speed);
    t.get("sway_y", tr.sway_y);
    t.get("sway_z", tr.sway_z);
    t.get("sway_freq_y", tr.sway_freq_y);
    t.get("sway_freq_z", tr.sway_freq_z);
    t.get("sway_att", tr.sway_att);
    t.get("sway_att_freq", tr.sway_att_freq);
    t.get("yaw0", tr.yaw0);
    t.get("yaw_rate", tr.yaw_rate);
    t.finish();
  }
  {
    Section t(sub_table(root, "campaign"), "campaign");
    CampaignSpec& cs = c.campaign;
    t.get("sigmas", cs.sigmas);
    t.get("runs", cs.runs);
    std::vector<std::string> modes;
    for (FusionMode m : cs.modes) modes.emplace_back(to_string(m));
    t.get("modes", modes);
    cs.modes.clear();
    for (const auto& m : modes) cs.modes.push_back(fusion_mode_from_string(m));
    t.get("seed_base", cs.seed_base);
    t.finish();
  }
  validate(c);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), path);
}

namespace {

toml::array vec3_array(const Vec3& v) { return toml::array{v.x(), v.y(), v.z()}; }

std::int64_t as_int(std::uint64_t v) { return static_cast<std::int64_t>(v); }

// Rewrites float literals outside quotes in their shortest round-trip form.
std::string shorten_floats(const std::string& in) {
  std::string out;
  out.reserve(in.size());
  bool quoted = false;
  for (std::size_t i = 0; i < in.size();) {
    const char c = in[i];
    if (c == '\'' || c == '"') quoted = !quoted;
    const bool starts_number = !quoted && (std::isdigit(static_cast<unsigned char>(c)) || c == '-') && i > 0 &&
                               (in[i - 1] == ' ' || in[i - 1] == '[');
    if (!starts_number) {
      out += c;
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < in.size() && in[j] != ',' && in[j] != ' ' && in[j] != ']' && in[j] != '\n') ++j;
    const std::string tok = in.substr(i, j - i);
    if (tok.find_first_of(".eE") == std::string::npos || tok.find_first_of("in") != std::string::npos) {
      out += tok;
    } else {
      char buf[64];
      const double v = std::strtod(tok.c_str(), nullptr);
      const auto res = std::to_chars(buf, buf + sizeof(buf), v);
      std::string s(buf, res.ptr);
      if (s.find_first_of(".e") == std::string::npos) s += ".0";
      out += s;
    }
    i = j;
  }
  return out;
}

}  // namespace

std::string to_toml(const RunConfig& c) {
  const FilterConfig& f = c.filter;
  const sim::SimConfig& s = c.sim;
  const sim::TrajectorySpec& tr = s.trajectory;

  toml::array sigmas;
  for (double v : c.campaign.sigmas) sigmas.push_back(v);
  toml::array modes;
  for (FusionMode m : c.campaign.modes) modes.push_back(std::string(to_string(m)));

  toml::table root{
      {"filter",
       toml::table{{"mode", std::string(to_string(f.iekf.mode))},
                   {"init", std::string(to_string(f.init))},
                   {"static_init_time", f.static_init_time},
                   {"point_stride", static_cast<std::int64_t>(f.point_stride)},
                   {"max_iter", static_cast<std::int64_t>(f.iekf.max_iter)},
                   {"step_tol", f.iekf.step_tol},
                   {"joseph_form", f.iekf.joseph_form},
                   {"freeze_lidar_extrinsic", f.iekf.freeze_lidar_extrinsic},
                   {"freeze_odom_extrinsic", f.iekf.freeze_odom_extrinsic},
                   {"reuse_trans", f.iekf.reuse_trans},
                   {"reuse_rot", f.iekf.reuse_rot}}},
      {"imu_noise", toml::table{{"sigma_g", f.imu_noise.sigma_g},
                                {"sigma_a", f.imu_noise.sigma_a},
                                {"sigma_wg", f.imu_noise.sigma_wg},
                                {"sigma_wa", f.imu_noise.sigma_wa}}},
      {"lidar", toml::table{{"sigma", f.iekf.lidar.sigma},
                            {"num_neighbors", static_cast<std::int64_t>(f.iekf.lidar.num_neighbors)},
                            {"plane_tol", f.iekf.lidar.plane_tol},
                            {"corr_gate", f.iekf.lidar.corr_gate},
                            {"max_neighbor_dist", f.iekf.lidar.max_neighbor_dist},
                            {"min_spread_ratio", f.iekf.lidar.min_spread_ratio}}},
      {"map", toml::table{{"voxel_size", f.map.voxel_size},
                          {"rebuild_threshold", static_cast<std::int64_t>(f.map.rebuild_threshold)}}},
      {"degeneracy",
       toml::table{{"threshold_rot", f.iekf.thresholds.rot}, {"threshold_trans", f.iekf.thresholds.trans}}},
      {"odometry", toml::table{{"sigma_rot", f.odom.sigma_rot},
                               {"sigma_pos_per_m", f.odom.sigma_pos_per_m},
                               {"sigma_pos_floor", f.odom.sigma_pos_floor}}},
      {"initial_covariance", toml::table{{"rot", f.p0.rot},
                                         {"pos", f.p0.pos},
                                         {"vel", f.p0.vel},
                                         {"bias_gyro", f.p0.bias_gyro},
                                         {"bias_acc", f.p0.bias_acc},
                                         {"gravity", f.p0.gravity},
                                         {"extrinsic", f.p0.extrinsic}}},
      {"extrinsics", toml::table{{"rot_IL", vec3_array(log_so3(s.rig.rot_IL))},
                                 {"pos_IL", vec3_array(s.rig.pos_IL)},
                                 {"rot_IO", vec3_array(log_so3(s.rig.rot_IO))},
                                 {"pos_IO", vec3_array(s.rig.pos_IO)}}},
      {"simulation", toml::table{{"world", s.world},
                                 {"corridor_length", s.corridor_length},
                                 {"corridor_width", s.corridor_width},
                                 {"corridor_height", s.corridor_height},
                                 {"end_caps", s.end_caps},
                                 {"room_x", s.room_x},
                                 {"room_y", s.room_y},
                                 {"room_z", s.room_z},
                                 {"duration", s.duration},
                                 {"sigma_l", s.sigma_l},
                                 {"distort", s.distort},
                                 {"seed", as_int(s.seed)},
                                 {"imu_rate", s.rig.imu_rate},
                                 {"odom_rate", s.rig.odom_rate},
                                 {"lidar_rate", s.rig.lidar.rate},
                                 {"azimuth_res", s.rig.lidar.azimuth_res},
                                 {"max_range", s.rig.lidar.max_range},
                                 {"drop_prob", s.rig.lidar.drop_prob},
                                 {"init_bias_gyro_std", s.init_bias_gyro_std},
                                 {"init_bias_acc_std", s.init_bias_acc_std},
                                 {"gravity", vec3_array(s.gravity)},
                                 {"odom_noise_r", s.odom.noise_r},
                                 {"odom_noise_p", s.odom.noise_p},
                                 {"odom_drift", s.odom.drift},
                                 {"odom_origin_rot", vec3_array(log_so3(s.odom.origin_rot))},
                                 {"odom_origin_pos", vec3_array(s.odom.origin_pos)}}},
      {"trajectory", toml::table{{"start", vec3_array(tr.start)},
                                 {"stationary_time", tr.stationary_time},
                                 {"ramp_time", tr.ramp_time},
                                 {"speed", tr.speed},
                                 {"sway_y", tr.sway_y},
                                 {"sway_z", tr.sway_z},
                                 {"sway_freq_y", tr.sway_freq_y},
                                 {"sway_freq_z", tr.sway_freq_z},
                                 {"sway_att", tr.sway_att},
                                 {"sway_att_freq", vec3_array(tr.sway_att_freq)},
                                 {"yaw0", tr.yaw0},
                                 {"yaw_rate", tr.yaw_rate}}},
      {"campaign", toml::table{{"sigmas", sigmas},
                               {"runs", static_cast<std::int64_t>(c.campaign.runs)},
                               {"modes", modes},
                               {"seed_base", as_int(c.campaign.seed_base)}}},
  };
  std::ostringstream os;
  os << root << "\n";
  return shorten_floats(os.str());
}

}  // namespace gatedlio
