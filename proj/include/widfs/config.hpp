#pragma once

#include "widfs/types.hpp"

#include <array>
#include <string>
#include <vector>

namespace widfs {

struct SystemConfig {
  double f_c = 5.32e9;   // carrier frequency, Hz
  double f_s = 1000.0;   // CSI sampling rate, Hz
  int N_p = 100;         // samples per sub-window
  int M = 9;             // sub-windows per joint window (odd)

  // Subcarrier frequency offsets relative to f_c, Hz. Defaults span
  // [-8.75, +8.75] MHz uniformly (20 MHz channel, grouped reporting).
  std::array<double, kSubcarriers> subcarrier_offsets = default_offsets();

  double spacing_12 = 0.028;  // antenna 1-2 spacing, m
  double spacing_23 = 0.028;  // antenna 2-3 spacing, m
  double hw_phase_12 = 0.0;   // pairwise hardware phase offsets, rad
  double hw_phase_23 = 0.0;
  double hw_phase_31 = 0.0;
  double d_s1 = 2.35;  // TX-to-antenna-1 direct path length, m

  double aoa_grid_step = 1.0;    // degrees
  double dist_grid_step = 0.05;  // m
  double dist_max = 20.0;        // m
  double motion_threshold = 0.3;

  double kalman_sin_aoa_var = 0.2;
  double kalman_dist_var_m = 0.20;
  double kalman_dfs_var_hz = 5.0;

  double lowpass_pass_hz = 60.0;
  double delta_f_hz = 10.0;
  double highpass_trigger_hz = 15.0;
  int sg_order = 3;
  int sg_frame = 5;
  double eig_threshold_factor = 0.6;

  double dt() const { return 1.0 / f_s; }

  // Throws PreconditionError when any structural invariant is violated.
  void validate() const;

  static std::array<double, kSubcarriers> default_offsets();
};

// Absolute subcarrier frequencies f_j = f_c + offset_j.
std::array<double, kSubcarriers> subcarrier_frequencies(
    const SystemConfig& cfg);

// Flat key-value text format, one "key value..." pair per line. Values are
// printed with 17 significant digits so a save/load round trip is bit exact.
// Unknown keys are errors; omitted keys keep their defaults.
SystemConfig load_config(const std::string& path);
void save_config(const SystemConfig& cfg, const std::string& path);

SystemConfig parse_config(const std::string& text);
std::string format_config(const SystemConfig& cfg);

}  // namespace widfs
