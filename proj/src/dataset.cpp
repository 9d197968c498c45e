#include "slsense/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace slsense {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Traj {
  const char* name;
  int hands;  // 1 or 2
};

// Hand-trajectory primitives. Canonical frame: subject at the origin
// facing +x, z up, chest height ~1.3 m. Two-hand variants mirror in y.
const Traj kPrimitives[] = {
    {"push", 1},          {"raise", 1},
    {"swipe_right", 1},   {"circle_cw", 1},
    {"two_hand_push", 2}, {"pull", 1},
    {"push_down", 1},     {"swipe_left", 1},
    {"circle_ccw", 1},    {"two_hand_pull", 2},
    {"two_hand_raise", 2},{"lift", 1},
    {"throw", 1},         {"two_hand_throw", 2},
    {"lateral_raise", 1}, {"two_hand_lateral_raise", 2},
    {"arm_swing", 1},     {"two_hand_circle_in", 2},
    {"two_hand_circle_out", 2}, {"wave", 1},
    {"zoom_out", 2},
};

constexpr int kPrimitiveCount = static_cast<int>(sizeof(kPrimitives) / sizeof(kPrimitives[0]));

struct Pos3 {
  double x, y, z;
};

// Right-hand path at normalized time tau in [0, 1].
Pos3 hand_path(int cls, double tau) {
  switch (cls) {
    case 0: return {0.25 + 0.38 * tau, -0.22, 1.28};                       // push
    case 1: return {0.34, -0.22, 1.02 + 0.72 * tau};                       // raise
    case 2: return {0.40, 0.42 - 0.84 * tau, 1.30};                        // swipe_right
    case 3:                                                                // circle_cw
      return {0.40, 0.30 * std::sin(2.5 * kPi * tau), 1.36 + 0.30 * std::cos(2.5 * kPi * tau)};
    case 4: return {0.25 + 0.38 * tau, -0.24, 1.28};                       // two_hand_push
    case 5: return {0.63 - 0.38 * tau, -0.22, 1.28};                       // pull
    case 6: return {0.36, -0.22, 1.62 - 0.56 * tau};                       // push_down
    case 7: return {0.40, -0.42 + 0.84 * tau, 1.30};                       // swipe_left
    case 8:                                                                // circle_ccw
      return {0.40, -0.30 * std::sin(2.5 * kPi * tau), 1.36 + 0.30 * std::cos(2.5 * kPi * tau)};
    case 9: return {0.63 - 0.38 * tau, -0.24, 1.28};                       // two_hand_pull
    case 10: return {0.34, -0.24, 1.02 + 0.72 * tau};                      // two_hand_raise
    case 11: return {0.30 + 0.18 * std::sin(kPi * tau), -0.22, 0.92 + 0.62 * tau};  // lift
    case 12:                                                               // throw
      return {0.18 + 0.48 * tau, -0.22, 1.08 + 0.42 * tau + 0.18 * std::sin(kPi * tau)};
    case 13:                                                               // two_hand_throw
      return {0.18 + 0.48 * tau, -0.24, 1.08 + 0.42 * tau + 0.18 * std::sin(kPi * tau)};
    case 14: return {0.14, -0.24 - 0.46 * tau, 1.10 + 0.50 * tau};         // lateral_raise
    case 15: return {0.14, -0.24 - 0.46 * tau, 1.10 + 0.50 * tau};         // two_hand_lateral_raise
    case 16: return {0.38, -0.20 + 0.26 * std::sin(4.0 * kPi * tau), 1.24};  // arm_swing
    case 17:                                                               // two_hand_circle_in
      return {0.40, -0.28 + 0.20 * std::sin(2.5 * kPi * tau), 1.36 + 0.20 * std::cos(2.5 * kPi * tau)};
    case 18:                                                               // two_hand_circle_out
      return {0.40, -0.28 - 0.20 * std::sin(2.5 * kPi * tau), 1.36 + 0.20 * std::cos(2.5 * kPi * tau)};
    case 19: return {0.32, -0.20 + 0.16 * std::sin(6.0 * kPi * tau), 1.58};  // wave
    case 20: return {0.45, -0.06 - 0.40 * tau, 1.30};                      // zoom_out
    default: throw ConfigError("unknown gesture class " + std::to_string(cls));
  }
}

Pos3 hand_position(int cls, int hand, double tau) {
  Pos3 p = hand_path(cls, tau);
  if (hand == 1) p.y = -p.y;  // mirrored left hand
  return p;
}

struct SubjectParams {
  double body_scale;
  double speed;
  double torso_dz;
  double torso_width;
};

SubjectParams subject_params(const GeneratorSpec& spec, int subject) {
  Rng rng(mix_seed(mix_seed(spec.seed, 0x5b6aULL), static_cast<std::uint64_t>(subject)));
  const double ns = spec.noise_scale;
  SubjectParams p;
  p.body_scale = 1.0 + ns * rng.uniform(-0.07, 0.07);
  p.speed = 1.0 + ns * rng.uniform(-0.08, 0.08);
  p.torso_dz = ns * rng.uniform(-0.05, 0.05);
  p.torso_width = 1.0 + ns * rng.uniform(-0.10, 0.10);
  return p;
}

const std::set<int>& legal_angles() {
  static const std::set<int> s = {0, 45, 90, 135, 180, 225, 270, 315};
  return s;
}

std::string sample_rel_dir(int subject, int cls, int rep) {
  return "subj_" + std::to_string(subject) + "/class_" + std::to_string(cls) + "/rep_" +
         std::to_string(rep);
}

int parse_int_field(const std::string& tok, const std::string& path, int line_no) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw DataError(path + ":" + std::to_string(line_no) + ": bad integer field '" + tok + "'");
  }
}

double parse_double_field(const std::string& tok, const std::string& path, int line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument("trailing");
    if (!std::isfinite(v))
      throw DataError(path + ":" + std::to_string(line_no) + ": non-finite value '" + tok + "'");
    return v;
  } catch (const DataError&) {
    throw;
  } catch (const std::exception&) {
    throw DataError(path + ":" + std::to_string(line_no) + ": bad float field '" + tok + "'");
  }
}

}  // namespace

int gesture_primitive_count() { return kPrimitiveCount; }

const char* gesture_primitive_name(int class_id) {
  if (class_id < 0 || class_id >= kPrimitiveCount)
    throw ConfigError("gesture class " + std::to_string(class_id) + " out of range");
  return kPrimitives[class_id].name;
}

void GeneratorSpec::validate() const {
  if (classes < 2) throw ConfigError("generator: classes must be >= 2");
  if (classes > kPrimitiveCount)
    throw ConfigError("generator: classes exceeds available primitives (" +
                      std::to_string(kPrimitiveCount) + ")");
  if (subjects < 1) throw ConfigError("generator: subjects must be >= 1");
  if (reps < 1) throw ConfigError("generator: reps must be >= 1");
  if (angles.empty()) throw ConfigError("generator: angle set is empty");
  for (int a : angles) {
    if (!legal_angles().count(a))
      throw ConfigError("generator: invalid angle " + std::to_string(a) +
                        " (must be in {0,45,...,315})");
  }
  if (points_per_cloud < 8) throw ConfigError("generator: points_per_cloud too small");
  if (torso_fraction < 0.0 || torso_fraction >= 1.0)
    throw ConfigError("generator: torso_fraction must be in [0, 1)");
  if (p_shadow < 0.0 || p_shadow > 1.0)
    throw ConfigError("generator: p_shadow must be in [0, 1]");
  if (duration_s <= 0.0 || fps < 1) throw ConfigError("generator: bad duration/fps");
}

MotionPointCloud generate_canonical_cloud(const GeneratorSpec& spec, int subject, int cls,
                                          int rep) {
  const SubjectParams sp = subject_params(spec, subject);
  Rng rng(mix_seed(mix_seed(mix_seed(spec.seed, static_cast<std::uint64_t>(subject)),
                            static_cast<std::uint64_t>(cls)),
                   static_cast<std::uint64_t>(rep)));
  const double ns = spec.noise_scale;
  const double off_x = ns * rng.uniform(-0.025, 0.025);
  const double off_y = ns * rng.uniform(-0.025, 0.025);
  const double off_z = ns * rng.uniform(-0.025, 0.025);
  const double amp = 1.0 + ns * rng.uniform(-0.07, 0.07);
  const double speed = sp.speed * (1.0 + ns * rng.uniform(-0.08, 0.08));
  const double delay = ns * rng.uniform(0.0, 0.08);

  const int n = spec.points_per_cloud;
  const int n_torso = static_cast<int>(std::lround(n * spec.torso_fraction));
  const int hands = kPrimitives[cls].hands;

  std::vector<double> times(n);
  for (double& t : times) t = rng.uniform();
  std::sort(times.begin(), times.end());

  std::vector<int> role(n, 0);  // 0 = hand, 1 = torso
  for (int i = 0; i < n_torso; ++i) role[i] = 1;
  rng.shuffle(role);

  const int frame_count = static_cast<int>(std::lround(spec.duration_s * spec.fps));
  MotionPointCloud cloud;
  cloud.angle_id = 0;
  cloud.frame_count = frame_count;
  cloud.points.reserve(n);

  const Pos3 chest{0.35, 0.0, 1.30};
  int hand_counter = 0;
  for (int i = 0; i < n; ++i) {
    const double t = times[i];
    Pos3 p;
    if (role[i] == 1) {
      p.x = rng.normal(0.0, 0.11 * sp.torso_width);
      p.y = rng.normal(0.0, 0.13 * sp.torso_width);
      p.z = 1.05 + sp.torso_dz + rng.normal(0.0, 0.28);
    } else {
      const int hand = hand_counter++ % hands;
      const double tau = std::clamp((t - delay) * speed, 0.0, 1.0);
      const Pos3 h = hand_position(cls, hand, tau);
      p.x = chest.x + amp * (h.x - chest.x) + rng.normal(0.0, 0.045);
      p.y = chest.y + amp * (h.y - chest.y) + rng.normal(0.0, 0.045);
      p.z = chest.z + amp * (h.z - chest.z) + rng.normal(0.0, 0.045);
    }
    Point out;
    out.x = sp.body_scale * p.x + off_x;
    out.y = sp.body_scale * p.y + off_y;
    out.z = sp.body_scale * p.z + off_z;
    out.frame = std::min(frame_count - 1, static_cast<int>(t * frame_count));
    cloud.points.push_back(out);
  }
  return cloud;
}

MotionPointCloud render_angle_view(const MotionPointCloud& canonical, int angle_deg,
                                   double p_shadow, Rng& rng) {
  const double rad = angle_deg * (kPi / 180.0);
  const double rx = std::cos(rad);
  const double ry = std::sin(rad);

  // Outward surface normal approximated as the horizontal radial from the
  // subject's vertical axis; points facing away from the radar are shadowed.
  MotionPointCloud visible;
  visible.angle_id = angle_deg;
  visible.frame_count = canonical.frame_count;
  for (const Point& p : canonical.points) {
    const double r = std::sqrt(p.x * p.x + p.y * p.y);
    const double facing = r > 1e-12 ? (p.x * rx + p.y * ry) / r : 1.0;
    const double u = rng.uniform();
    if (facing < 0.0 && u < p_shadow) continue;
    visible.points.push_back(p);
  }
  MotionPointCloud out = rotate_view(visible, -static_cast<double>(angle_deg));
  out.angle_id = angle_deg;
  return out;
}

DatasetManifest generate_synthetic_dataset(const GeneratorSpec& spec, const std::string& root) {
  spec.validate();

  DatasetManifest manifest;
  manifest.root = root;
  for (int c = 0; c < spec.classes; ++c) manifest.class_names.push_back(kPrimitives[c].name);
  for (int s = 0; s < spec.subjects; ++s) manifest.subject_ids.push_back(s);
  manifest.angle_ids = spec.angles;
  std::sort(manifest.angle_ids.begin(), manifest.angle_ids.end());

  if (!spec.train_subjects.empty() || !spec.val_subjects.empty() || !spec.test_subjects.empty()) {
    manifest.train_subjects = spec.train_subjects;
    manifest.val_subjects = spec.val_subjects;
    manifest.test_subjects = spec.test_subjects;
  } else if (spec.subjects >= 3) {
    for (int s = 0; s < spec.subjects - 2; ++s) manifest.train_subjects.push_back(s);
    manifest.val_subjects.push_back(spec.subjects - 2);
    manifest.test_subjects.push_back(spec.subjects - 1);
  } else {
    for (int s = 0; s < spec.subjects; ++s) manifest.train_subjects.push_back(s);
  }

  for (int subject = 0; subject < spec.subjects; ++subject) {
    for (int cls = 0; cls < spec.classes; ++cls) {
      for (int rep = 0; rep < spec.reps; ++rep) {
        const std::string rel = sample_rel_dir(subject, cls, rep);
        const fs::path dir = fs::path(root) / rel;
        fs::create_directories(dir);
        const MotionPointCloud canonical = generate_canonical_cloud(spec, subject, cls, rep);
        const std::uint64_t sample_seed =
            mix_seed(mix_seed(mix_seed(mix_seed(spec.seed, 0xa1f0ULL),
                                       static_cast<std::uint64_t>(subject)),
                              static_cast<std::uint64_t>(cls)),
                     static_cast<std::uint64_t>(rep));
        SampleIndexEntry entry;
        entry.subject = subject;
        entry.label = cls;
        entry.rep = rep;
        entry.dir = rel;
        for (int angle : manifest.angle_ids) {
          Rng view_rng(mix_seed(sample_seed, static_cast<std::uint64_t>(angle)));
          const MotionPointCloud view =
              render_angle_view(canonical, angle, spec.p_shadow, view_rng);
          save_cloud_csv(view, (dir / ("angle_" + std::to_string(angle) + ".csv")).string());
          entry.angles.push_back(angle);
        }
        manifest.samples.push_back(std::move(entry));
      }
    }
  }

  save_manifest(manifest, (fs::path(root) / "manifest.json").string());
  return manifest;
}

void save_cloud_csv(const MotionPointCloud& cloud, const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary: keep LF on every platform
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "frame,x,y,z\n";
  for (const Point& p : cloud.points) {
    out << p.frame << ',' << format_g9(p.x) << ',' << format_g9(p.y) << ',' << format_g9(p.z)
        << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

MotionPointCloud load_cloud_csv(const std::string& path, int angle_id) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path);
  MotionPointCloud cloud;
  cloud.angle_id = angle_id;
  std::string line;
  int line_no = 0;
  int max_frame = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line == "frame,x,y,z") continue;
    std::stringstream ss(line);
    std::string tok;
    std::vector<std::string> fields;
    while (std::getline(ss, tok, ',')) fields.push_back(tok);
    if (fields.size() != 4)
      throw DataError(path + ":" + std::to_string(line_no) + ": expected 4 fields, got " +
                      std::to_string(fields.size()));
    Point p;
    p.frame = parse_int_field(fields[0], path, line_no);
    if (p.frame < 0)
      throw DataError(path + ":" + std::to_string(line_no) + ": negative frame index");
    p.x = parse_double_field(fields[1], path, line_no);
    p.y = parse_double_field(fields[2], path, line_no);
    p.z = parse_double_field(fields[3], path, line_no);
    max_frame = std::max(max_frame, p.frame);
    cloud.points.push_back(p);
  }
  if (cloud.points.empty()) throw DataError(path + ": empty point cloud file");
  cloud.frame_count = max_frame + 1;
  return cloud;
}

MultiAngleSample load_sample(const std::string& dir) {
  if (!fs::is_directory(dir)) throw DataError("sample directory missing: " + dir);
  std::vector<std::pair<int, std::string>> found;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.rfind("angle_", 0) == 0 && name.size() > 10 &&
        name.substr(name.size() - 4) == ".csv") {
      const std::string deg = name.substr(6, name.size() - 10);
      try {
        found.emplace_back(std::stoi(deg), e.path().string());
      } catch (const std::exception&) {
        throw DataError("unrecognized angle file name: " + e.path().string());
      }
    }
  }
  if (found.empty()) throw DataError("no angle files in: " + dir);
  std::sort(found.begin(), found.end());
  MultiAngleSample sample;
  for (const auto& [angle, path] : found) sample.clouds.emplace(angle, load_cloud_csv(path, angle));
  return sample;
}

MultiAngleSample load_sample(const DatasetManifest& manifest, const SampleIndexEntry& entry) {
  MultiAngleSample sample;
  sample.label = entry.label;
  sample.subject_id = entry.subject;
  sample.rep = entry.rep;
  const fs::path dir = fs::path(manifest.root) / entry.dir;
  for (int angle : entry.angles) {
    const std::string path = (dir / ("angle_" + std::to_string(angle) + ".csv")).string();
    sample.clouds.emplace(angle, load_cloud_csv(path, angle));
  }
  return sample;
}

void DatasetManifest::validate() const {
  auto in = [](const std::vector<int>& v, int x) {
    return std::find(v.begin(), v.end(), x) != v.end();
  };
  for (int s : train_subjects) {
    if (in(val_subjects, s) || in(test_subjects, s))
      throw DataError("manifest: subject " + std::to_string(s) + " appears in multiple splits");
  }
  for (int s : val_subjects) {
    if (in(test_subjects, s))
      throw DataError("manifest: subject " + std::to_string(s) + " appears in multiple splits");
  }
  for (const SampleIndexEntry& e : samples) {
    if (e.label < 0 || e.label >= class_count())
      throw DataError("manifest: sample class " + std::to_string(e.label) + " out of range");
    for (int angle : e.angles) {
      const fs::path p = fs::path(root) / e.dir / ("angle_" + std::to_string(angle) + ".csv");
      if (!fs::exists(p)) throw DataError("manifest: missing file " + p.string());
    }
  }
}

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
  json j;
  j["format_version"] = 1;
  j["class_names"] = manifest.class_names;
  j["subject_ids"] = manifest.subject_ids;
  j["angle_ids"] = manifest.angle_ids;
  j["splits"] = {{"train", manifest.train_subjects},
                 {"val", manifest.val_subjects},
                 {"test", manifest.test_subjects}};
  j["samples"] = json::array();
  for (const SampleIndexEntry& e : manifest.samples) {
    j["samples"].push_back({{"subject", e.subject},
                            {"class", e.label},
                            {"rep", e.rep},
                            {"dir", e.dir},
                            {"angles", e.angles}});
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << j.dump(2) << '\n';
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("manifest parse error in " + path + ": " + e.what());
  }
  DatasetManifest m;
  try {
    m.class_names = j.at("class_names").get<std::vector<std::string>>();
    m.subject_ids = j.at("subject_ids").get<std::vector<int>>();
    m.angle_ids = j.at("angle_ids").get<std::vector<int>>();
    m.train_subjects = j.at("splits").at("train").get<std::vector<int>>();
    m.val_subjects = j.at("splits").at("val").get<std::vector<int>>();
    m.test_subjects = j.at("splits").at("test").get<std::vector<int>>();
    for (const json& s : j.at("samples")) {
      SampleIndexEntry e;
      e.subject = s.at("subject").get<int>();
      e.label = s.at("class").get<int>();
      e.rep = s.at("rep").get<int>();
      e.dir = s.at("dir").get<std::string>();
      e.angles = s.at("angles").get<std::vector<int>>();
      m.samples.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw DataError("manifest field error in " + path + ": " + e.what());
  }
  m.root = fs::path(path).parent_path().string();
  if (m.root.empty()) m.root = ".";
  return m;
}

}  // namespace slsense
