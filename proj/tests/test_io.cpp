#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "procam/image_io.hpp"
#include "procam/io.hpp"
#include "test_support.hpp"

namespace procam {
namespace {

namespace fs = std::filesystem;
using testing::error_kind_of;

class TempDir {
 public:
  TempDir() {
    Xoshiro256 rng(static_cast<std::uint64_t>(::testing::UnitTest::GetInstance()->random_seed()) ^
                   reinterpret_cast<std::uintptr_t>(this));
    path_ = fs::temp_directory_path() / ("procam_io_" + std::to_string(rng.next()));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

Error error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "expected an Error";
  return Error(ErrorKind::InvalidArgument, "");
}

std::string replace_once(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  EXPECT_NE(pos, std::string::npos) << from;
  if (pos != std::string::npos) s.replace(pos, from.size(), to);
  return s;
}

CorrespondenceFile simulated_file(double noise = 0.5) {
  SceneConfig cfg;
  cfg.noise_sigma_px = noise;
  const Observation obs = synthesize_observations(cfg);
  return {obs.correspondences, obs.truth};
}

void expect_same_transform(const RigidTransform& a, const RigidTransform& b) {
  EXPECT_EQ(a.rotation.matrix(), b.rotation.matrix());
  EXPECT_EQ(a.translation, b.translation);
}

TEST(CorrespondenceFile, RoundTripIsExact) {
  const CorrespondenceFile file = simulated_file();
  const std::string text = serialize_correspondences(file);
  const CorrespondenceFile back = parse_correspondences(text);
  EXPECT_EQ(back.correspondences.board_points, file.correspondences.board_points);
  EXPECT_EQ(back.correspondences.camera_distorted, file.correspondences.camera_distorted);
  EXPECT_EQ(back.correspondences.projector_points, file.correspondences.projector_points);
  EXPECT_EQ(back.correspondences.board.rows, 6);
  EXPECT_EQ(back.correspondences.projector.width, 1920);
  ASSERT_TRUE(back.ground_truth.has_value());
  EXPECT_EQ(back.ground_truth->camera.f, 1539.0);
  EXPECT_EQ(back.ground_truth->camera_distortion.k1, -5e-8);
  expect_same_transform(back.ground_truth->rt_procam, file.ground_truth->rt_procam);
  EXPECT_EQ(serialize_correspondences(back), text);
}

TEST(CorrespondenceFile, DroppedCornersKeepTheCountInvariant) {
  CorrespondenceFile file = simulated_file(0.0);
  auto& c = file.correspondences;
  c.board_points.erase(c.board_points.begin() + 7);
  c.camera_distorted.erase(c.camera_distorted.begin() + 7);
  c.projector_points.erase(c.projector_points.begin() + 7);
  c.dropped = {7};
  const CorrespondenceFile back = parse_correspondences(serialize_correspondences(file));
  EXPECT_EQ(back.correspondences.size(), 59u);
  EXPECT_EQ(back.correspondences.dropped, std::vector<int>{7});
}

TEST(CorrespondenceFile, MissingPointIsASchemaError) {
  CorrespondenceFile file = simulated_file(0.0);
  auto& c = file.correspondences;
  c.board_points.pop_back();
  c.camera_distorted.pop_back();
  c.projector_points.pop_back();
  const std::string text = serialize_correspondences(file);
  const Error e = error_of([&] { parse_correspondences(text); });
  EXPECT_EQ(e.kind(), ErrorKind::Schema);
  EXPECT_NE(std::string(e.what()).find("59"), std::string::npos) << e.what();
}

TEST(CorrespondenceFile, SchemaErrorsNameTheField) {
  const std::string text = serialize_correspondences(simulated_file(0.0));

  Error e = error_of([&] { parse_correspondences(replace_once(text, "\"rows\": 6", "\"rowz\": 6")); });
  EXPECT_EQ(e.kind(), ErrorKind::Schema);
  EXPECT_NE(std::string(e.what()).find("board.rows"), std::string::npos) << e.what();

  e = error_of([&] { parse_correspondences(replace_once(text, "\"width\": 1280", "\"width\": \"wide\"")); });
  EXPECT_EQ(e.kind(), ErrorKind::Schema);
  EXPECT_NE(std::string(e.what()).find("camera.width"), std::string::npos) << e.what();

  e = error_of([&] { parse_correspondences(replace_once(text, "\"schema_version\": 1", "\"schema_version\": 7")); });
  EXPECT_NE(std::string(e.what()).find("schema_version"), std::string::npos) << e.what();

  e = error_of([&] { parse_correspondences(replace_once(text, "\"schema_version\": 1,", "")); });
  EXPECT_NE(std::string(e.what()).find("schema_version"), std::string::npos) << e.what();
}

TEST(CorrespondenceFile, MalformedJsonReportsPosition) {
  const Error e = error_of([] { parse_correspondences("{\n  \"board\": {\n    \"rows\": 6,,\n"); });
  EXPECT_EQ(e.kind(), ErrorKind::Schema);
  EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
}

CalibrationFile calibration_of(const SceneConfig& cfg) {
  const Observation obs = synthesize_observations(cfg);
  return {calibrate_procam(obs.correspondences), "0.1.0"};
}

TEST(CalibrationFile, RoundTripReproducesEveryNumber) {
  SceneConfig cfg;
  cfg.noise_sigma_px = 0.3;
  const CalibrationFile file = calibration_of(cfg);
  const std::string text = serialize_calibration(file);
  const CalibrationFile back = parse_calibration(text);
  const CalibrationResult& a = file.result;
  const CalibrationResult& b = back.result;
  EXPECT_EQ(back.tool_version, "0.1.0");
  for (auto [x, y] : {std::pair{a.K_c, b.K_c}, std::pair{a.K_p, b.K_p}}) {
    EXPECT_EQ(x.f, y.f);
    EXPECT_EQ(x.alpha, y.alpha);
    EXPECT_EQ(x.u0, y.u0);
    EXPECT_EQ(x.v0, y.v0);
  }
  EXPECT_EQ(a.distortion.center, b.distortion.center);
  EXPECT_EQ(a.distortion.k1, b.distortion.k1);
  EXPECT_EQ(a.distortion.k2, b.distortion.k2);
  expect_same_transform(a.rt_c, b.rt_c);
  expect_same_transform(a.rt_p, b.rt_p);
  expect_same_transform(a.rt_procam, b.rt_procam);
  EXPECT_EQ(a.camera_residual.mean_px, b.camera_residual.mean_px);
  EXPECT_EQ(a.camera_residual.rms_px, b.camera_residual.rms_px);
  EXPECT_EQ(a.projector_residual.max_px, b.projector_residual.max_px);
  EXPECT_EQ(a.stereo_residual_px, b.stereo_residual_px);
  EXPECT_EQ(a.camera_iterations, b.camera_iterations);
  EXPECT_EQ(a.projector_converged, b.projector_converged);
  EXPECT_EQ(a.warnings, b.warnings);
  EXPECT_EQ(serialize_calibration(back), text);
}

TEST(CalibrationFile, RandomDoublesSurvive) {
  Xoshiro256 rng(81);
  for (int i = 0; i < 200; ++i) {
    CalibrationFile file{{}, "x"};
    file.result.K_c = {rng.uniform(1, 5000), rng.uniform(0.5, 2), rng.uniform(-1e3, 1e3),
                       std::ldexp(rng.uniform(), -40)};
    file.result.distortion.k2 = -std::ldexp(rng.uniform(), -60);
    file.result.rt_p = {testing::random_rotation(rng),
                        Point3(rng.uniform(-1e4, 1e4), rng.normal(), std::ldexp(rng.normal(), 300))};
    const CalibrationResult back = parse_calibration(serialize_calibration(file)).result;
    EXPECT_EQ(back.K_c.f, file.result.K_c.f);
    EXPECT_EQ(back.K_c.v0, file.result.K_c.v0);
    EXPECT_EQ(back.distortion.k2, file.result.distortion.k2);
    expect_same_transform(back.rt_p, file.result.rt_p);
  }
}

TEST(CalibrationFile, RotationsAreValidatedOnLoad) {
  const std::string text = serialize_calibration(calibration_of(SceneConfig{}));
  // Scale the first rotation entry of rt_c.
  const auto at = text.find("\"rotation\": [", text.find("\"rt_c\""));
  ASSERT_NE(at, std::string::npos);
  const auto start = text.find_first_of("-0123456789", at + 13);
  const auto end = text.find_first_of(",\n", start);
  std::string broken = text;
  broken.replace(start, end - start, "1.5");
  const Error e = error_of([&] { parse_calibration(broken); });
  EXPECT_EQ(e.kind(), ErrorKind::Schema);
  EXPECT_NE(std::string(e.what()).find("rt_c.rotation"), std::string::npos) << e.what();
}

TEST(SceneConfigFile, DefaultsAndOverrides) {
  const SceneConfig defaults = parse_scene_config("{}");
  EXPECT_EQ(defaults.camera.f, 1539.0);
  EXPECT_EQ(defaults.board.cols, 10);
  const SceneConfig cfg = parse_scene_config(
      R"({"noise_sigma_px": 0.25, "seed": 9, "camera_pose": {"psi_deg": 5},
          "projector": {"u0": 960}, "board": {"rows": 5}})");
  EXPECT_EQ(cfg.noise_sigma_px, 0.25);
  EXPECT_EQ(cfg.rng_seed, 9u);
  EXPECT_EQ(cfg.camera_pose.tilt.psi, 5.0);
  EXPECT_EQ(cfg.camera_pose.tilt.nu, -15.0);
  EXPECT_EQ(cfg.projector.u0, 960.0);
  EXPECT_EQ(cfg.projector.v0, 1065.0);
  EXPECT_EQ(cfg.board.rows, 5);
  EXPECT_EQ(cfg.board.cols, 10);

  const SceneConfig again = parse_scene_config(serialize_scene_config(cfg));
  EXPECT_EQ(again.camera_pose.tilt.psi, 5.0);
  EXPECT_EQ(again.rng_seed, 9u);
  EXPECT_EQ(again.camera_distortion.k1, cfg.camera_distortion.k1);

  const Error e = error_of([] { parse_scene_config(R"({"board": {"rows": "six"}})"); });
  EXPECT_EQ(e.kind(), ErrorKind::Schema);
  EXPECT_NE(std::string(e.what()).find("board.rows"), std::string::npos) << e.what();
}

TEST(Manifest, RelativePathsResolveAgainstTheManifest) {
  TempDir dir;
  fs::create_directories(dir.path() / "stack");
  const StackManifest m{1920, 1080, {"pattern_00.pgm", "sub/pattern_01.pgm", "/abs/p.pgm"}};
  write_manifest(dir.path() / "stack" / "manifest.json", m);
  const StackManifest back = read_manifest(dir.path() / "stack" / "manifest.json");
  EXPECT_EQ(back.projector_width, 1920);
  ASSERT_EQ(back.patterns.size(), 3u);
  EXPECT_EQ(back.patterns[0], dir.path() / "stack" / "pattern_00.pgm");
  EXPECT_EQ(back.patterns[1], dir.path() / "stack" / "sub" / "pattern_01.pgm");
  EXPECT_EQ(back.patterns[2], fs::path("/abs/p.pgm"));
}

TEST(CornersFile, RoundTripAndCountCheck) {
  CornersFile file{BoardSpec{}, {1280, 800}, simulated_file(0.0).correspondences.camera_distorted};
  const CornersFile back = parse_corners(serialize_corners(file));
  EXPECT_EQ(back.corners, file.corners);
  EXPECT_EQ(back.camera.width, 1280);
  file.corners.pop_back();
  EXPECT_EQ(error_kind_of([&] { parse_corners(serialize_corners(file)); }), ErrorKind::Schema);
}

TEST(Files, MissingFilesAreIoErrors) {
  TempDir dir;
  const fs::path missing = dir.path() / "nope.json";
  const Error e = error_of([&] { read_correspondences(missing); });
  EXPECT_EQ(e.kind(), ErrorKind::Io);
  EXPECT_NE(std::string(e.what()).find("nope.json"), std::string::npos);
  EXPECT_EQ(error_kind_of([&] { read_calibration(missing); }), ErrorKind::Io);
  EXPECT_EQ(error_kind_of([&] { write_text_file(dir.path() / "no" / "dir" / "x.json", "{}"); }),
            ErrorKind::Io);
}

TEST(Files, ReadErrorsNameThePath) {
  TempDir dir;
  write_text_file(dir.path() / "bad.json", "{\"schema_version\": 1}");
  const Error e = error_of([&] { read_correspondences(dir.path() / "bad.json"); });
  EXPECT_EQ(e.kind(), ErrorKind::Schema);
  EXPECT_NE(std::string(e.what()).find("bad.json"), std::string::npos) << e.what();
}

TEST(Pgm, RoundTripAndRejection) {
  TempDir dir;
  GrayImage img(37, 11);
  Xoshiro256 rng(82);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(rng.next());
  write_pgm(dir.path() / "a.pgm", img);
  const GrayImage back = read_pgm(dir.path() / "a.pgm");
  EXPECT_EQ(back.width, 37);
  EXPECT_EQ(back.height, 11);
  EXPECT_EQ(back.data, img.data);

  // Header with a comment and a smaller maxval.
  {
    std::ofstream out(dir.path() / "b.pgm", std::ios::binary);
    out << "P5\n# made by hand\n2 2\n200\n";
    out.write("\x01\x02\x03\x04", 4);
  }
  const GrayImage b = read_pgm(dir.path() / "b.pgm");
  EXPECT_EQ(b.data, (std::vector<std::uint8_t>{1, 2, 3, 4}));

  {
    std::ofstream out(dir.path() / "c.pgm", std::ios::binary);
    out << "P5\n4 4\n255\n";
    out.write("\x01\x02", 2);
  }
  EXPECT_EQ(error_kind_of([&] { read_pgm(dir.path() / "c.pgm"); }), ErrorKind::Io);
  write_text_file(dir.path() / "d.pgm", "P2\n1 1\n255\n0\n");
  EXPECT_EQ(error_kind_of([&] { read_pgm(dir.path() / "d.pgm"); }), ErrorKind::Io);
  EXPECT_EQ(error_kind_of([&] { read_pgm(dir.path() / "none.pgm"); }), ErrorKind::Io);
}

}  // namespace
}  // namespace procam
