#pragma once

#include "widfs/config.hpp"
#include "widfs/types.hpp"

namespace widfs::dfs {

// Pairwise cross-correlation series, one row per subcarrier, one column per
// sample: cc12[j][k] = CSI_{1,j,k} * conj(CSI_{2,j,k}), and cyclically.
// Independent of any per-sample common phase by construction.
struct CrossCorrSet {
  CMat cc12, cc23, cc31;  // each kSubcarriers x N_p
  int window_index = 0;
};

// Per-pair split of a cross-correlation series into the static term (time
// mean per subcarrier) and the mean-free dynamic remainder.
struct StaticDynamicSplit {
  CVec u;  // length kSubcarriers
  CMat v;  // kSubcarriers x N_p, row means zero
};

struct PairSplits {
  StaticDynamicSplit s12, s23, s31;
  int window_index = 0;
};

// Combined difference signal carrying a single tone at the signed Doppler
// frequency; kSubcarriers x N_p.
using DeltaW = CMat;

struct DfsEstimate {
  double f_d = 0.0;  // Hz, signed; positive = reflection path lengthening
  double power = 0.0;
  int window_index = 0;
  bool clamped = false;  // true when |f_d| exceeded the lowpass passband
};

CrossCorrSet cross_correlate(const CsiWindow& window);

// Savitzky-Golay then zero-phase lowpass, per subcarrier series.
CrossCorrSet denoise(const CrossCorrSet& cc, const SystemConfig& cfg);

PairSplits split_static_dynamic(const CrossCorrSet& cc);

// DeltaW = (conj(V31)/conj(U31) - V23/U23) - (conj(V12)/conj(U12) - V31/U31).
// Throws PreconditionError when any static term is too small to divide by.
DeltaW build_delta_w(const PairSplits& splits);

// Root-MUSIC over DeltaW (samples down the rows, subcarriers as observation
// columns); the estimate with maximum power wins. Empty spectrum -> zero
// estimate. |f_d| beyond the lowpass passband is clamped and flagged.
DfsEstimate estimate_dfs(const DeltaW& dw, const SystemConfig& cfg,
                         int window_index = 0);

}  // namespace widfs::dfs
