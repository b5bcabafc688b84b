#pragma once

#include "widfs/config.hpp"
#include "widfs/types.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace widfs::synth {

// Receiver-chain impairments applied multiplicatively to every sample.
struct ImpairmentSpec {
  bool phase_impairments = true;  // per-sample random common phase and
                                  // per-sample random slope across subcarriers
  double agc_walk_sigma = 0.02;   // per-sub-window multiplicative gain step
  double agc_min = 0.3;
  double agc_max = 3.0;
  double timing_offset_max_s = 50e-9;  // bound on the per-sample phase slope
  double noise_snr_db = 30.0;          // additive complex noise level
};

struct HardwareSpec {
  std::array<double, kAntennas> attenuation{1.0, 1.0, 1.0};
  std::array<double, kAntennas> phase{0.0, 0.0, 0.0};  // radians
  double true_spacing_12 = 0.028;                      // m
  double true_spacing_23 = 0.028;                      // m
};

struct TrajectorySpec {
  enum class Kind { kNone, kEllipse, kLine, kRect, kRadial };
  Kind kind = Kind::kEllipse;
  double speed = 1.0;  // m/s along the path
  // Path geometry in the array frame (antenna 1 at origin, array axis +x,
  // boresight +y). Meaning of params by kind:
  //   ellipse: cx cy semi_x semi_y     line: x0 y0 x1 y1 (ping-pong)
  //   rect:    cx cy width height      radial: aoa_deg start_range
  std::array<double, 4> params{};

  static TrajectorySpec make(Kind kind, double speed);
  Position position(double t) const;  // array-frame position at time t
};

struct StaticReflector {
  Position position;  // array frame
  double amplitude;   // relative to the unit direct path
};

struct SceneSpec {
  Position tx_position;                    // array frame
  Position rx_antenna1_position{0.0, 0.0};
  std::array<double, 2> rx_array_axis{1.0, 0.0};  // unit vector
  std::vector<StaticReflector> static_reflectors;
  TrajectorySpec person_trajectory;  // Kind::kNone means no person
  double person_reflectivity = 0.35;
  double person_dropout = 0.0;  // per-sample Bernoulli invisibility
  bool person_fading = false;   // slow Rayleigh amplitude fading (extension)
  ImpairmentSpec impairments;
  HardwareSpec hardware;
  double duration_s = 10.0;
  std::uint64_t seed = 1;

  void validate() const;  // throws PreconditionError
};

struct GroundTruth {
  std::vector<double> timestamp;
  std::vector<Position> position;   // NaN coordinates when person absent
  std::vector<double> path_length;  // d^X: TX -> person -> antenna 1, m
  std::vector<double> dfs_hz;       // instantaneous f^D
  std::vector<double> aoa_deg;      // theta^X
};

// Forward channel model: CSI = He * Hh * (HS + HX + noise). Static geometry
// is constant over time; the person contributes an exact per-sample path so
// subcarrier-dependent Doppler arises naturally. Throws when the trajectory
// leaves the valid half-plane (AoA outside (-90, 90)), naming the first
// offending sample.
std::pair<CsiTrace, GroundTruth> generate_trace(const SceneSpec& scene,
                                                const SystemConfig& cfg);

// Scene file: flat key-value text (see README for the key list).
SceneSpec load_scene(const std::string& path);
SceneSpec parse_scene(const std::string& text);
std::string format_scene(const SceneSpec& scene);
void save_scene(const SceneSpec& scene, const std::string& path);

}  // namespace widfs::synth
