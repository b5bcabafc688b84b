#pragma once

#include "widfs/config.hpp"
#include "widfs/types.hpp"

#include <array>

namespace widfs::dyncomp {

// Per-antenna CFR power series |CSI|^2, one matrix per antenna,
// kSubcarriers x N_p.
struct PowerSet {
  std::array<RMat, kAntennas> p;
  int window_index = 0;
};

// Static power (time mean) and mean-free dynamic power per (antenna,
// subcarrier).
struct PowerSplit {
  AntSubReal u;                     // kAntennas x kSubcarriers
  std::array<RMat, kAntennas> v;    // each kSubcarriers x N_p
  int window_index = 0;
};

// Pairwise hardware phase differences used to rotate the reconstructed
// components into a common reference.
struct HwPhases {
  double p12 = 0.0;
  double p23 = 0.0;
  double p31 = 0.0;
};

struct DynamicComponentSet {
  CsiMatrix z = CsiMatrix::Zero();   // reconstructed dynamic phasors
  AntSubReal w = AntSubReal::Zero(); // fit weights in [0, 1]
  int window_index = 0;
  bool reliable = false;  // false when the fit was degenerate (weights zeroed)
};

PowerSet self_correlate(const CsiWindow& window);

PowerSplit split_power(const PowerSet& p);

// Band isolation around the Doppler line: lowpass at |f_d| + delta_f, plus a
// highpass at |f_d| - delta_f when |f_d| exceeds the trigger.
std::array<RMat, kAntennas> refine_power(const std::array<RMat, kAntennas>& v,
                                         double f_d, const SystemConfig& cfg);

// Cosine fit of v'/u per (antenna, subcarrier), then phase alignment: antennas
// 2 and 3 are rotated by the measured static cross-correlation phases minus
// the hardware phases, and all antennas are divided by the direct-path
// reference eta_j. When |f_d| is too small for a stable fit the result is
// returned with zero weights and reliable = false.
DynamicComponentSet reconstruct_components(
    const std::array<RMat, kAntennas>& v_refined, const AntSubReal& u,
    double f_d, const CVec& u12, const CVec& u31, const HwPhases& hw,
    const SystemConfig& cfg);

}  // namespace widfs::dyncomp
