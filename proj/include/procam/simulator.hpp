#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "procam/correspondence.hpp"
#include "procam/distortion.hpp"
#include "procam/geometry.hpp"
#include "procam/structured_light.hpp"

namespace procam {

/// Board placement relative to one device. The board center sits on the ray
/// through the image center at `distance_mm`; `tilt` rotates the board about
/// the device axes starting from a fronto-parallel placement in which the
/// device looks at the board from its +z side:
/// R = R_XYZ(tilt) · R_X(180°).
struct DevicePose {
  EulerAnglesXYZ tilt;
  double distance_mm = 500.0;
};

/// Defaults mirror the simulated rig used for the rotation study: camera
/// 1280×800 with f = 1539, α = 1.004, (674, 512); projector 1920×1080 with
/// f = 2421, α = 1.002, (1013, 1065); a 10×6 corner board.
struct SceneConfig {
  BoardSpec board{6, 10, 23.0};
  ImageSize camera_size{1280, 800};
  Intrinsics camera{1539.0, 1.004, 674.0, 512.0};
  DivisionModel camera_distortion{Point2(674.0, 512.0), -5e-8, 0.0};
  ImageSize projector_size{1920, 1080};
  Intrinsics projector{2421.0, 1.002, 1013.0, 1065.0};
  DevicePose camera_pose{{-15.0, -15.0, 0.0}, 500.0};
  DevicePose projector_pose{{10.0, 15.0, 0.0}, 600.0};
  double noise_sigma_px = 0.0;
  std::uint64_t rng_seed = 42;
  /// Offset (both axes, px) of the principal point handed to the camera
  /// calibration in rotation sweeps.
  double principal_point_offset_px = 5.0;

  /// Throws InvalidArgument on violated invariants.
  void validate() const;
};

struct GroundTruth {
  Intrinsics camera;
  DivisionModel camera_distortion;
  Intrinsics projector;
  RigidTransform rt_c;
  RigidTransform rt_p;
  RigidTransform rt_procam;
};

struct Observation {
  CorrespondenceSet correspondences;
  GroundTruth truth;
};

/// Board→device transform for a pose description.
RigidTransform device_transform(const DevicePose& pose, const Intrinsics& K,
                                const ImageSize& image, const BoardSpec& board);

/// Camera: pinhole → distortion → noise. Projector: pinhole → noise. Throws
/// OutOfFrame listing corners that fall outside either image (noise-free).
Observation synthesize_observations(const SceneConfig& cfg);

/// Same, with explicit board→device transforms.
Observation synthesize_observations(const SceneConfig& cfg, const RigidTransform& rt_c,
                                    const RigidTransform& rt_p);

/// Board poses for a rigid rig: the camera sees each tilt in `camera_tilts`
/// (at the configured camera distance) and the projector pose follows from
/// `rig` (camera→projector).
std::vector<Observation> synthesize_rig_sequence(const SceneConfig& cfg,
                                                 const RigidTransform& rig,
                                                 std::span<const EulerAnglesXYZ> camera_tilts);

struct StackRenderOptions {
  std::uint8_t white_level = 255;
  std::uint8_t black_level = 0;
};

/// Camera pixel → projector coordinate, or nullopt where no projector light
/// lands.
using PixelMapping = std::function<std::optional<Point2>(const Point2&)>;

/// Renders the Gray-code stack seen by a camera of `camera_size` whose pixels
/// sample the projector pattern at `mapping` (nearest neighbour).
std::vector<GrayImage> render_graycode_stack(const PatternLayout& layout,
                                             const ImageSize& camera_size,
                                             const PixelMapping& mapping,
                                             const StackRenderOptions& options = {});

struct GraycodeScene {
  PatternLayout layout;
  std::vector<GrayImage> stack;
  /// Ground truth: distorted camera pixel → projector coordinate.
  PixelMapping camera_to_projector;
};

GraycodeScene synthesize_graycode_stack(const SceneConfig& cfg,
                                        const StackRenderOptions& options = {});

enum class SweepDevice { Camera, Projector };

struct AngleRange {
  double min_deg = -45.0;
  double max_deg = 45.0;
};

struct SweepCell {
  double psi_deg = 0.0;
  double nu_deg = 0.0;
  /// Mean |f_estimated − f_true| over successful trials (NaN if none).
  double delta_f_px = 0.0;
  double reproj_mean_px = 0.0;
  bool converged = false;
  int trials = 0;
  int failures = 0;
};

struct SweepResult {
  SweepDevice device = SweepDevice::Camera;
  std::vector<double> psi_values;
  std::vector<double> nu_values;
  /// Row-major: cells[i * nu_values.size() + j] ↔ (psi_values[i], nu_values[j]).
  std::vector<SweepCell> cells;

  const SweepCell& at(std::size_t psi_index, std::size_t nu_index) const {
    return cells[psi_index * nu_values.size() + nu_index];
  }
};

struct SweepOptions {
  AngleRange psi;
  AngleRange nu;
  double step_deg = 5.0;
  int noise_trials = 1;
  /// 0 = PROCAM_CALIB_THREADS, falling back to hardware concurrency.
  int threads = 0;
};

/// Calibrates the chosen device over a grid of board tilts. Per-cell
/// failures are recorded in the grid; throws InvalidArgument only for a
/// malformed grid (ranges outside (−60°, 60°), step ≤ 0, min > max).
SweepResult rotation_sweep(const SceneConfig& base, SweepDevice device,
                           const SweepOptions& options);

/// Worker count from PROCAM_CALIB_THREADS (0 or unset = auto).
int sweep_thread_count(int requested);

}  // namespace procam
