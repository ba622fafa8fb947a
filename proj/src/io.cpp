#include "procam/io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "procam/error.hpp"

namespace procam {

namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void schema_error(const std::string& path, const std::string& message) {
  throw Error(ErrorKind::Schema, (path.empty() ? std::string("document") : path) + ": " + message);
}

// Read-only view of a JSON value that knows its own path for error messages.
class Node {
 public:
  Node(const json& value, std::string path) : value_(&value), path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  const json& raw() const { return *value_; }

  Node at(std::string_view key) const {
    if (auto child = find(key)) return *child;
    schema_error(join(key), "missing required field");
  }

  std::optional<Node> find(std::string_view key) const {
    if (!value_->is_object()) schema_error(path_, "expected an object");
    const auto it = value_->find(key);
    if (it == value_->end()) return std::nullopt;
    return Node(*it, join(key));
  }

  std::size_t size() const {
    if (!value_->is_array()) schema_error(path_, "expected an array");
    return value_->size();
  }

  Node operator[](std::size_t i) const {
    size();
    return Node((*value_)[i], path_ + "[" + std::to_string(i) + "]");
  }

  double number() const {
    if (!value_->is_number()) schema_error(path_, "expected a number");
    return value_->get<double>();
  }

  int integer() const {
    if (!value_->is_number_integer()) schema_error(path_, "expected an integer");
    return value_->get<int>();
  }

  bool boolean() const {
    if (!value_->is_boolean()) schema_error(path_, "expected true or false");
    return value_->get<bool>();
  }

  std::string string() const {
    if (!value_->is_string()) schema_error(path_, "expected a string");
    return value_->get<std::string>();
  }

  Eigen::VectorXd numbers(std::size_t n) const {
    if (size() != n) schema_error(path_, "expected " + std::to_string(n) + " numbers");
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) v(static_cast<Eigen::Index>(i)) = (*this)[i].number();
    return v;
  }

  Point2 point2() const { return numbers(2); }
  Point3 point3() const { return numbers(3); }

  double number_or(std::string_view key, double fallback) const {
    const auto child = find(key);
    return child ? child->number() : fallback;
  }
  int integer_or(std::string_view key, int fallback) const {
    const auto child = find(key);
    return child ? child->integer() : fallback;
  }

 private:
  std::string join(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }

  const json* value_;
  std::string path_;
};

json parse_document(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw Error(ErrorKind::Schema, "line " + std::to_string(line) + ", column " +
                                       std::to_string(column) + ": malformed JSON (" +
                                       e.what() + ")");
  }
}

void check_version(const Node& root) {
  const int version = root.at("schema_version").integer();
  if (version != kSchemaVersion) {
    schema_error("schema_version", "unsupported version " + std::to_string(version));
  }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json to_json(const Point2& p) { return json::array({p.x(), p.y()}); }
json to_json(const Point3& p) { return json::array({p.x(), p.y(), p.z()}); }

json size_json(const ImageSize& s) { return {{"width", s.width}, {"height", s.height}}; }
ImageSize parse_size(const Node& n) {
  ImageSize s{n.at("width").integer(), n.at("height").integer()};
  if (s.width <= 0 || s.height <= 0) schema_error(n.path(), "image size must be positive");
  return s;
}

json board_json(const BoardSpec& b) {
  return {{"rows", b.rows}, {"cols", b.cols}, {"spacing_mm", b.spacing_mm}};
}
BoardSpec parse_board(const Node& n) {
  BoardSpec b{n.at("rows").integer(), n.at("cols").integer(), n.at("spacing_mm").number()};
  if (b.rows < 2 || b.cols < 2 || !(b.spacing_mm > 0.0)) {
    schema_error(n.path(), "board needs rows, cols >= 2 and spacing_mm > 0");
  }
  return b;
}

json intrinsics_json(const Intrinsics& K) {
  return {{"f", K.f}, {"alpha", K.alpha}, {"u0", K.u0}, {"v0", K.v0}};
}
Intrinsics parse_intrinsics(const Node& n) {
  return {n.at("f").number(), n.at("alpha").number(), n.at("u0").number(), n.at("v0").number()};
}

json distortion_json(const DivisionModel& d) {
  return {{"center", to_json(d.center)}, {"k1", d.k1}, {"k2", d.k2}};
}
DivisionModel parse_distortion(const Node& n) {
  return {n.at("center").point2(), n.at("k1").number(), n.at("k2").number()};
}

json transform_json(const RigidTransform& rt) {
  const Mat3& R = rt.rotation.matrix();
  json rotation = json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) rotation.push_back(R(r, c));
  }
  json out{{"rotation", rotation}, {"translation", to_json(rt.translation)}};
  try {
    const EulerAnglesXYZ e = matrix_to_euler_xyz(rt.rotation);
    out["euler_xyz_deg"] = json::array({e.psi, e.nu, e.phi});
  } catch (const Error&) {
    out["euler_xyz_deg"] = nullptr;  // gimbal lock
  }
  return out;
}
RigidTransform parse_transform(const Node& n) {
  const Eigen::VectorXd v = n.at("rotation").numbers(9);
  Mat3 R;
  R << v(0), v(1), v(2), v(3), v(4), v(5), v(6), v(7), v(8);
  try {
    return {RotationMatrix(R), n.at("translation").point3()};
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Schema) throw;
    schema_error(n.path() + ".rotation", std::string("not a rotation matrix (") + e.what() + ")");
  }
}

json truth_json(const GroundTruth& t) {
  return {{"K_c", intrinsics_json(t.camera)},
          {"distortion", distortion_json(t.camera_distortion)},
          {"K_p", intrinsics_json(t.projector)},
          {"rt_c", transform_json(t.rt_c)},
          {"rt_p", transform_json(t.rt_p)},
          {"rt_procam", transform_json(t.rt_procam)}};
}
GroundTruth parse_truth(const Node& n) {
  return {parse_intrinsics(n.at("K_c")), parse_distortion(n.at("distortion")),
          parse_intrinsics(n.at("K_p")), parse_transform(n.at("rt_c")),
          parse_transform(n.at("rt_p")), parse_transform(n.at("rt_procam"))};
}

json summary_json(const ResidualSummary& s) {
  return {{"mean_px", s.mean_px}, {"rms_px", s.rms_px}, {"max_px", s.max_px}};
}
ResidualSummary parse_summary(const Node& n) {
  return {n.at("mean_px").number(), n.at("rms_px").number(), n.at("max_px").number()};
}

json pose_json(const DevicePose& p) {
  return {{"psi_deg", p.tilt.psi},
          {"nu_deg", p.tilt.nu},
          {"phi_deg", p.tilt.phi},
          {"distance_mm", p.distance_mm}};
}
DevicePose parse_pose(const Node& n, DevicePose pose) {
  pose.tilt.psi = n.number_or("psi_deg", pose.tilt.psi);
  pose.tilt.nu = n.number_or("nu_deg", pose.tilt.nu);
  pose.tilt.phi = n.number_or("phi_deg", pose.tilt.phi);
  pose.distance_mm = n.number_or("distance_mm", pose.distance_mm);
  return pose;
}

Intrinsics parse_intrinsics_or(const Node& n, Intrinsics K) {
  K.f = n.number_or("f", K.f);
  K.alpha = n.number_or("alpha", K.alpha);
  K.u0 = n.number_or("u0", K.u0);
  K.v0 = n.number_or("v0", K.v0);
  return K;
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorKind::Io, "cannot read " + path.string());
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
}

// Correspondences

std::string serialize_correspondences(const CorrespondenceFile& file) {
  const CorrespondenceSet& c = file.correspondences;
  json points = json::array();
  for (std::size_t i = 0; i < c.size(); ++i) {
    points.push_back({{"board", to_json(c.board_points[i])},
                      {"camera_distorted", to_json(c.camera_distorted[i])},
                      {"projector", to_json(c.projector_points[i])}});
  }
  json doc{{"schema_version", kSchemaVersion},
           {"board", board_json(c.board)},
           {"camera", size_json(c.camera)},
           {"projector", size_json(c.projector)},
           {"points", points},
           {"dropped", c.dropped}};
  if (file.ground_truth) doc["ground_truth"] = truth_json(*file.ground_truth);
  return dump(doc);
}

CorrespondenceFile parse_correspondences(std::string_view text) {
  const json doc = parse_document(text);
  const Node root(doc, "");
  check_version(root);
  CorrespondenceFile file;
  CorrespondenceSet& c = file.correspondences;
  c.board = parse_board(root.at("board"));
  c.camera = parse_size(root.at("camera"));
  c.projector = parse_size(root.at("projector"));
  const Node points = root.at("points");
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Node p = points[i];
    c.board_points.push_back(p.at("board").point2());
    c.camera_distorted.push_back(p.at("camera_distorted").point2());
    c.projector_points.push_back(p.at("projector").point2());
  }
  if (const auto dropped = root.find("dropped")) {
    for (std::size_t i = 0; i < dropped->size(); ++i) c.dropped.push_back((*dropped)[i].integer());
  }
  if (const auto truth = root.find("ground_truth")) file.ground_truth = parse_truth(*truth);
  c.validate();
  return file;
}

CorrespondenceFile read_correspondences(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return parse_correspondences(text);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Io) throw;
    throw Error(e.kind(), path.string() + ": " + e.what(), e.stage());
  }
}

void write_correspondences(const std::filesystem::path& path, const CorrespondenceFile& file) {
  write_text_file(path, serialize_correspondences(file));
}

// Calibration

std::string serialize_calibration(const CalibrationFile& file) {
  const CalibrationResult& r = file.result;
  const json doc{
      {"schema_version", kSchemaVersion},
      {"tool", {{"name", "procam-calib"}, {"version", file.tool_version}}},
      {"K_c", intrinsics_json(r.K_c)},
      {"distortion", distortion_json(r.distortion)},
      {"K_p", {{"f", r.K_p.f}, {"u0", r.K_p.u0}, {"v0", r.K_p.v0}}},
      {"rt_c", transform_json(r.rt_c)},
      {"rt_p", transform_json(r.rt_p)},
      {"rt_procam", transform_json(r.rt_procam)},
      {"residuals",
       {{"camera", summary_json(r.camera_residual)},
        {"projector", summary_json(r.projector_residual)},
        {"stereo_px", r.stereo_residual_px}}},
      {"diagnostics",
       {{"camera_iterations", r.camera_iterations},
        {"projector_iterations", r.projector_iterations},
        {"camera_converged", r.camera_converged},
        {"projector_converged", r.projector_converged},
        {"distortion_fallback", r.distortion_fallback},
        {"warnings", r.warnings}}}};
  return dump(doc);
}

CalibrationFile parse_calibration(std::string_view text) {
  const json doc = parse_document(text);
  const Node root(doc, "");
  check_version(root);
  CalibrationFile file;
  file.tool_version = root.at("tool").at("version").string();
  CalibrationResult& r = file.result;
  r.K_c = parse_intrinsics(root.at("K_c"));
  r.distortion = parse_distortion(root.at("distortion"));
  const Node kp = root.at("K_p");
  r.K_p = {kp.at("f").number(), 1.0, kp.at("u0").number(), kp.at("v0").number()};
  r.rt_c = parse_transform(root.at("rt_c"));
  r.rt_p = parse_transform(root.at("rt_p"));
  r.rt_procam = parse_transform(root.at("rt_procam"));
  const Node res = root.at("residuals");
  r.camera_residual = parse_summary(res.at("camera"));
  r.projector_residual = parse_summary(res.at("projector"));
  r.stereo_residual_px = res.at("stereo_px").number();
  const Node diag = root.at("diagnostics");
  r.camera_iterations = diag.at("camera_iterations").integer();
  r.projector_iterations = diag.at("projector_iterations").integer();
  r.camera_converged = diag.at("camera_converged").boolean();
  r.projector_converged = diag.at("projector_converged").boolean();
  r.distortion_fallback = diag.at("distortion_fallback").boolean();
  const Node warnings = diag.at("warnings");
  for (std::size_t i = 0; i < warnings.size(); ++i) r.warnings.push_back(warnings[i].string());
  return file;
}

CalibrationFile read_calibration(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return parse_calibration(text);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what(), e.stage());
  }
}

void write_calibration(const std::filesystem::path& path, const CalibrationFile& file) {
  write_text_file(path, serialize_calibration(file));
}

// Scene configuration

std::string serialize_scene_config(const SceneConfig& cfg) {
  json camera = size_json(cfg.camera_size);
  camera.update(intrinsics_json(cfg.camera));
  camera["distortion"] = distortion_json(cfg.camera_distortion);
  json projector = size_json(cfg.projector_size);
  projector.update(intrinsics_json(cfg.projector));
  const json doc{{"schema_version", kSchemaVersion},
                 {"board", board_json(cfg.board)},
                 {"camera", camera},
                 {"projector", projector},
                 {"camera_pose", pose_json(cfg.camera_pose)},
                 {"projector_pose", pose_json(cfg.projector_pose)},
                 {"noise_sigma_px", cfg.noise_sigma_px},
                 {"seed", cfg.rng_seed},
                 {"principal_point_offset_px", cfg.principal_point_offset_px}};
  return dump(doc);
}

SceneConfig parse_scene_config(std::string_view text) {
  const json doc = parse_document(text);
  const Node root(doc, "");
  if (root.find("schema_version")) check_version(root);
  SceneConfig cfg;
  if (const auto b = root.find("board")) {
    cfg.board.rows = b->integer_or("rows", cfg.board.rows);
    cfg.board.cols = b->integer_or("cols", cfg.board.cols);
    cfg.board.spacing_mm = b->number_or("spacing_mm", cfg.board.spacing_mm);
  }
  if (const auto c = root.find("camera")) {
    cfg.camera_size.width = c->integer_or("width", cfg.camera_size.width);
    cfg.camera_size.height = c->integer_or("height", cfg.camera_size.height);
    cfg.camera = parse_intrinsics_or(*c, cfg.camera);
    if (const auto d = c->find("distortion")) {
      if (const auto center = d->find("center")) cfg.camera_distortion.center = center->point2();
      cfg.camera_distortion.k1 = d->number_or("k1", cfg.camera_distortion.k1);
      cfg.camera_distortion.k2 = d->number_or("k2", cfg.camera_distortion.k2);
    }
  }
  if (const auto p = root.find("projector")) {
    cfg.projector_size.width = p->integer_or("width", cfg.projector_size.width);
    cfg.projector_size.height = p->integer_or("height", cfg.projector_size.height);
    cfg.projector = parse_intrinsics_or(*p, cfg.projector);
  }
  if (const auto p = root.find("camera_pose")) cfg.camera_pose = parse_pose(*p, cfg.camera_pose);
  if (const auto p = root.find("projector_pose")) {
    cfg.projector_pose = parse_pose(*p, cfg.projector_pose);
  }
  cfg.noise_sigma_px = root.number_or("noise_sigma_px", cfg.noise_sigma_px);
  if (const auto s = root.find("seed")) {
    if (!s->raw().is_number_unsigned()) schema_error(s->path(), "expected a non-negative integer");
    cfg.rng_seed = s->raw().get<std::uint64_t>();
  }
  cfg.principal_point_offset_px =
      root.number_or("principal_point_offset_px", cfg.principal_point_offset_px);
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::Schema, e.what());
  }
  return cfg;
}

SceneConfig read_scene_config(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return parse_scene_config(text);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what(), e.stage());
  }
}

// Stack manifest

std::string serialize_manifest(const StackManifest& manifest) {
  json patterns = json::array();
  for (const auto& p : manifest.patterns) patterns.push_back(p.generic_string());
  const json doc{{"schema_version", kSchemaVersion},
                 {"projector", {{"width", manifest.projector_width},
                                {"height", manifest.projector_height}}},
                 {"patterns", patterns}};
  return dump(doc);
}

StackManifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir) {
  const json doc = parse_document(text);
  const Node root(doc, "");
  check_version(root);
  StackManifest m;
  const ImageSize projector = parse_size(root.at("projector"));
  m.projector_width = projector.width;
  m.projector_height = projector.height;
  const Node patterns = root.at("patterns");
  for (std::size_t i = 0; i < patterns.size(); ++i) {
    const std::filesystem::path p(patterns[i].string());
    m.patterns.push_back(p.is_absolute() ? p : base_dir / p);
  }
  return m;
}

StackManifest read_manifest(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return parse_manifest(text, path.parent_path());
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what(), e.stage());
  }
}

void write_manifest(const std::filesystem::path& path, const StackManifest& manifest) {
  write_text_file(path, serialize_manifest(manifest));
}

// Corners

std::string serialize_corners(const CornersFile& file) {
  json corners = json::array();
  for (const auto& p : file.corners) corners.push_back(to_json(p));
  const json doc{{"schema_version", kSchemaVersion},
                 {"board", board_json(file.board)},
                 {"camera", size_json(file.camera)},
                 {"corners", corners}};
  return dump(doc);
}

CornersFile parse_corners(std::string_view text) {
  const json doc = parse_document(text);
  const Node root(doc, "");
  check_version(root);
  CornersFile file;
  file.board = parse_board(root.at("board"));
  file.camera = parse_size(root.at("camera"));
  const Node corners = root.at("corners");
  for (std::size_t i = 0; i < corners.size(); ++i) file.corners.push_back(corners[i].point2());
  if (file.corners.size() != static_cast<std::size_t>(file.board.corner_count())) {
    schema_error("corners", "expected " + std::to_string(file.board.corner_count()) +
                                " corners for the board, got " +
                                std::to_string(file.corners.size()));
  }
  return file;
}

CornersFile read_corners(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return parse_corners(text);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what(), e.stage());
  }
}

void write_corners(const std::filesystem::path& path, const CornersFile& file) {
  write_text_file(path, serialize_corners(file));
}

}  // namespace procam
