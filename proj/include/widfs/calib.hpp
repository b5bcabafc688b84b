#pragma once

#include "widfs/config.hpp"
#include "widfs/types.hpp"

#include <array>
#include <string>
#include <vector>

namespace widfs::calib {

enum class Side { kLeft, kRight };
enum class Pair { k12, k23 };

// Static cross-correlation phases, one set of kSubcarriers angles per
// repetition (sub-window), for each antenna pair, from one placement side.
struct CalibMeasurement {
  Side side = Side::kLeft;
  std::vector<std::array<double, kSubcarriers>> u12_phases;
  std::vector<std::array<double, kSubcarriers>> u23_phases;
};

struct CalibResult {
  double spacing_12 = 0.0;  // m
  double spacing_23 = 0.0;  // m
  double phase_12 = 0.0;    // radians in [0, 2pi)
  double phase_23 = 0.0;
  double phase_31 = 0.0;

  // Enforces the physical bounds: spacings within +/-25% of the nominal
  // half-wavelength at f_c, and phase cycle consistency.
  void validate(double f_c) const;
};

// Extracts per-sub-window static terms from a (presumed static) trace.
// Uses at most max_repetitions complete sub-windows.
CalibMeasurement extract_measurement(const CsiTrace& trace, Side side,
                                     const SystemConfig& cfg,
                                     int max_repetitions);

// Half the circular mean of (left - right) phase differences, disambiguated
// by the integer half-wavelength count closest to the nominal spacing.
double estimate_spacing(const CalibMeasurement& left,
                        const CalibMeasurement& right, Pair pair, double f_c,
                        double nominal_m);

// Circular mean of left terms de-rotated by -2pi f_c d/c and right terms
// de-rotated by +2pi f_c d/c; wrapped to [0, 2pi).
double estimate_phase_offset(const CalibMeasurement& left,
                             const CalibMeasurement& right, Pair pair,
                             double f_c, double spacing_m);

// Full two-sided calibration: verifies both traces are static (motion
// detector), runs both estimators per pair, derives phase_31 from cycle
// consistency, and validates the result.
CalibResult calibrate(const CsiTrace& trace_left, const CsiTrace& trace_right,
                      const SystemConfig& cfg, int max_repetitions = 20);

// Flat key-value persistence.
CalibResult load_calib(const std::string& path);
void save_calib(const CalibResult& calib, const std::string& path);
CalibResult parse_calib(const std::string& text);
std::string format_calib(const CalibResult& calib);

}  // namespace widfs::calib
