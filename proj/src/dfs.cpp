#include "widfs/dfs.hpp"

#include "widfs/dsp.hpp"
#include "widfs/errors.hpp"

#include <algorithm>
#include <cmath>

namespace widfs::dfs {

CrossCorrSet cross_correlate(const CsiWindow& window) {
  const int n = static_cast<int>(window.samples.size());
  if (n < 1) throw PreconditionError("cross_correlate: empty window");
  CrossCorrSet cc;
  cc.window_index = window.window_index;
  cc.cc12.resize(kSubcarriers, n);
  cc.cc23.resize(kSubcarriers, n);
  cc.cc31.resize(kSubcarriers, n);
  for (int k = 0; k < n; ++k) {
    const CsiMatrix& v = window.samples[k].values;
    for (int j = 0; j < kSubcarriers; ++j) {
      cc.cc12(j, k) = v(0, j) * std::conj(v(1, j));
      cc.cc23(j, k) = v(1, j) * std::conj(v(2, j));
      cc.cc31(j, k) = v(2, j) * std::conj(v(0, j));
    }
  }
  return cc;
}

namespace {

CMat denoise_rows(const CMat& x, const SystemConfig& cfg) {
  dsp::FilterSpec lp;
  lp.kind = dsp::FilterSpec::Kind::kLowpass;
  lp.passband_hz = cfg.lowpass_pass_hz;
  lp.sample_rate_hz = cfg.f_s;
  CMat y(x.rows(), x.cols());
  std::vector<Complex> row(x.cols());
  for (int j = 0; j < x.rows(); ++j) {
    for (int k = 0; k < x.cols(); ++k) row[k] = x(j, k);
    auto smoothed = dsp::savitzky_golay(std::span<const Complex>(row),
                                        cfg.sg_order, cfg.sg_frame);
    auto filtered = dsp::fir_filter(std::span<const Complex>(smoothed), lp);
    for (int k = 0; k < x.cols(); ++k) y(j, k) = filtered[k];
  }
  return y;
}

StaticDynamicSplit split_one(const CMat& cc) {
  StaticDynamicSplit s;
  s.u = cc.rowwise().mean();
  s.v = cc.colwise() - s.u;
  return s;
}

}  // namespace

CrossCorrSet denoise(const CrossCorrSet& cc, const SystemConfig& cfg) {
  CrossCorrSet out;
  out.window_index = cc.window_index;
  out.cc12 = denoise_rows(cc.cc12, cfg);
  out.cc23 = denoise_rows(cc.cc23, cfg);
  out.cc31 = denoise_rows(cc.cc31, cfg);
  return out;
}

PairSplits split_static_dynamic(const CrossCorrSet& cc) {
  PairSplits p;
  p.window_index = cc.window_index;
  p.s12 = split_one(cc.cc12);
  p.s23 = split_one(cc.cc23);
  p.s31 = split_one(cc.cc31);
  return p;
}

DeltaW build_delta_w(const PairSplits& splits) {
  // Guard the divisions: a vanishing static term means the dominant-path
  // assumption is broken and the ratio terms blow up.
  const double scale = (splits.s12.u.cwiseAbs().mean() +
                        splits.s23.u.cwiseAbs().mean() +
                        splits.s31.u.cwiseAbs().mean()) /
                       3.0;
  const double floor = 1e-12 * scale;
  for (const auto* s : {&splits.s12, &splits.s23, &splits.s31}) {
    if (s->u.cwiseAbs().minCoeff() <= floor) {
      throw PreconditionError(
          "build_delta_w: static term magnitude below floor (static path "
          "unresolvable)");
    }
  }
  const int n = static_cast<int>(splits.s12.v.cols());
  DeltaW dw(kSubcarriers, n);
  for (int j = 0; j < kSubcarriers; ++j) {
    const Complex u12 = splits.s12.u(j);
    const Complex u23 = splits.s23.u(j);
    const Complex u31 = splits.s31.u(j);
    for (int k = 0; k < n; ++k) {
      const Complex dw12 = std::conj(splits.s31.v(j, k)) / std::conj(u31) -
                           splits.s23.v(j, k) / u23;
      const Complex dw23 = std::conj(splits.s12.v(j, k)) / std::conj(u12) -
                           splits.s31.v(j, k) / u31;
      dw(j, k) = dw12 - dw23;
    }
  }
  return dw;
}

DfsEstimate estimate_dfs(const DeltaW& dw, const SystemConfig& cfg,
                         int window_index) {
  if (!dw.allFinite()) {
    throw PreconditionError("estimate_dfs: non-finite DeltaW");
  }
  const auto ests =
      dsp::root_music(dw.transpose(), cfg.f_s, cfg.eig_threshold_factor);
  DfsEstimate est;
  est.window_index = window_index;
  if (ests.empty()) return est;
  // DeltaW rotates as e^{-J 2 pi f_d k dt}; root_music reports +f for
  // e^{+J 2 pi f k dt}, hence the sign flip.
  est.f_d = -ests.front().frequency_hz;
  est.power = ests.front().power;
  if (std::abs(est.f_d) > cfg.lowpass_pass_hz) {
    est.f_d = std::copysign(cfg.lowpass_pass_hz, est.f_d);
    est.clamped = true;
  }
  return est;
}

}  // namespace widfs::dfs
