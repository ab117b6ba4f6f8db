#include "gatedlio/dataset_io.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace gatedlio {

namespace {

[[noreturn]] void fail(const std::string& file, std::size_t line, const std::string& what) {
  throw std::runtime_error(file + ":" + std::to_string(line) + ": " + what);
}

// Parses exactly n comma-separated numbers.
std::vector<double> parse_numbers(const std::string& line, std::size_t n, const std::string& file,
                                  std::size_t line_no) {
  std::vector<double> out;
  out.reserve(n);
  const char* p = line.c_str();
  while (true) {
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(p, &end);
    if (end == p || errno == ERANGE) fail(file, line_no, "malformed number");
    out.push_back(v);
    while (*end == ' ' || *end == '\t' || *end == '\r') ++end;
    if (*end == '\0') break;
    if (*end != ',') fail(file, line_no, "expected ','");
    p = end + 1;
  }
  if (out.size() != n) {
    fail(file, line_no, "expected " + std::to_string(n) + " fields, got " + std::to_string(out.size()));
  }
  return out;
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream is(p);
  if (!is) throw std::runtime_error("cannot open " + p.string());
  return is;
}

std::FILE* open_out(const fs::path& p) {
  std::FILE* f = std::fopen(p.string().c_str(), "w");
  if (!f) throw std::runtime_error("cannot write " + p.string());
  return f;
}

struct FileCloser {
  std::FILE* f;
  ~FileCloser() {
    if (f) std::fclose(f);
  }
};

void check_increasing(double prev, double t, bool first, const std::string& file, std::size_t line) {
  if (!first && !(t > prev)) fail(file, line, "timestamp regression");
}

}  // namespace

eval::Trajectory ground_truth_trajectory(const std::vector<sim::KinematicState>& gt) {
  eval::Trajectory traj;
  for (const auto& k : gt) traj.push_back({k.t, k.pos, k.rot});
  return traj;
}

SensorData to_sensor_data(sim::Dataset ds) {
  SensorData d;
  d.imu = std::move(ds.imu);
  d.odom = std::move(ds.odom);
  d.scans = std::move(ds.scans);
  d.initial_state = ds.initial_state;
  d.ground_truth = ground_truth_trajectory(ds.ground_truth);
  return d;
}

void write_dataset(const std::string& dir, const sim::Dataset& ds, const RunConfig& cfg) {
  const fs::path root(dir);
  fs::create_directories(root / "scans");
  {
    std::ofstream os(root / "config.toml");
    if (!os) throw std::runtime_error("cannot write " + (root / "config.toml").string());
    os << to_toml(cfg);
  }
  {
    std::FILE* f = open_out(root / "imu.csv");
    FileCloser c{f};
    std::fprintf(f, "t,gx,gy,gz,ax,ay,az\n");
    for (const auto& s : ds.imu) {
      std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.t, s.gyro.x(), s.gyro.y(), s.gyro.z(),
                   s.acc.x(), s.acc.y(), s.acc.z());
    }
  }
  {
    std::FILE* f = open_out(root / "odom.csv");
    FileCloser c{f};
    std::fprintf(f, "t,x,y,z,qx,qy,qz,qw\n");
    for (const auto& o : ds.odom) {
      std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", o.t, o.pos.x(), o.pos.y(), o.pos.z(),
                   o.rot.x(), o.rot.y(), o.rot.z(), o.rot.w());
    }
  }
  for (std::size_t k = 0; k < ds.scans.size(); ++k) {
    char name[64];
    std::snprintf(name, sizeof(name), "scan_%06zu.csv", k + 1);
    std::FILE* f = open_out(root / "scans" / name);
    FileCloser c{f};
    std::fprintf(f, "# t_end=%.17g\noffset_t,x,y,z\n", ds.scans[k].t_end);
    for (const auto& p : ds.scans[k].points) {
      std::fprintf(f, "%.17g,%.17g,%.17g,%.17g\n", p.offset_time, p.p.x(), p.p.y(), p.p.z());
    }
  }
  {
    std::FILE* f = open_out(root / "ground_truth.tum");
    FileCloser c{f};
    for (const auto& k : ds.ground_truth) {
      std::fprintf(f, "%.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n", k.t, k.pos.x(), k.pos.y(), k.pos.z(),
                   k.rot.x(), k.rot.y(), k.rot.z(), k.rot.w());
    }
  }
  {
    std::ofstream os(root / "initial_state.csv");
    if (!os) throw std::runtime_error("cannot write initial_state.csv");
    const double t0 = ds.imu.empty() ? 0.0 : ds.imu.front().t;
    os << state_csv_header() << "\n" << state_to_csv_row(t0, ds.initial_state) << "\n";
  }
}

SensorData read_dataset(const std::string& dir) {
  const fs::path root(dir);
  if (!fs::is_directory(root)) throw std::runtime_error("dataset directory not found: " + dir);
  SensorData d;
  std::string line;

  {
    const fs::path p = root / "imu.csv";
    std::ifstream is = open_in(p);
    std::size_t n = 0;
    while (std::getline(is, line)) {
      ++n;
      if (n == 1 || line.empty()) continue;
      const auto v = parse_numbers(line, 7, p.string(), n);
      check_increasing(d.imu.empty() ? 0.0 : d.imu.back().t, v[0], d.imu.empty(), p.string(), n);
      d.imu.push_back({v[0], Vec3(v[1], v[2], v[3]), Vec3(v[4], v[5], v[6])});
    }
    if (d.imu.size() < 2) throw std::runtime_error(p.string() + ": fewer than 2 samples");
  }
  {
    const fs::path p = root / "odom.csv";
    if (fs::exists(p)) {
      std::ifstream is = open_in(p);
      std::size_t n = 0;
      while (std::getline(is, line)) {
        ++n;
        if (n == 1 || line.empty()) continue;
        const auto v = parse_numbers(line, 8, p.string(), n);
        check_increasing(d.odom.empty() ? 0.0 : d.odom.back().t, v[0], d.odom.empty(), p.string(), n);
        const Eigen::Quaterniond q(v[7], v[4], v[5], v[6]);
        if (!(q.norm() > 1e-9)) fail(p.string(), n, "zero quaternion");
        d.odom.push_back({v[0], Rotation(q), Vec3(v[1], v[2], v[3])});
      }
    }
  }
  {
    std::vector<fs::path> files;
    if (fs::is_directory(root / "scans")) {
      for (const auto& e : fs::directory_iterator(root / "scans")) {
        const std::string name = e.path().filename().string();
        if (name.rfind("scan_", 0) == 0 && e.path().extension() == ".csv") files.push_back(e.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto& p : files) {
      std::ifstream is = open_in(p);
      LidarScan scan;
      std::size_t n = 0;
      bool have_t = false;
      while (std::getline(is, line)) {
        ++n;
        if (n == 1) {
          const std::string key = "# t_end=";
          if (line.rfind(key, 0) != 0) fail(p.string(), n, "expected '# t_end=<time>'");
          scan.t_end = parse_numbers(line.substr(key.size()), 1, p.string(), n)[0];
          have_t = true;
          continue;
        }
        if (n == 2 || line.empty()) continue;
        const auto v = parse_numbers(line, 4, p.string(), n);
        if (v[0] > 0.0) fail(p.string(), n, "point offset_t must be <= 0");
        scan.points.push_back({v[0], Vec3(v[1], v[2], v[3])});
      }
      if (!have_t) fail(p.string(), 1, "empty scan file");
      if (!d.scans.empty() && !(scan.t_end > d.scans.back().t_end)) fail(p.string(), 1, "timestamp regression");
      d.scans.push_back(std::move(scan));
    }
  }
  if (fs::exists(root / "ground_truth.tum")) d.ground_truth = eval::read_tum_file((root / "ground_truth.tum").string());
  {
    const fs::path p = root / "initial_state.csv";
    if (fs::exists(p)) {
      std::ifstream is = open_in(p);
      std::getline(is, line);
      if (!std::getline(is, line)) fail(p.string(), 2, "missing state row");
      try {
        d.initial_state = state_from_csv_row(line);
      } catch (const std::exception& e) {
        fail(p.string(), 2, e.what());
      }
    }
  }
  return d;
}

}  // namespace gatedlio
