#include "widfs/dyncomp.hpp"

#include "widfs/dsp.hpp"
#include "widfs/errors.hpp"

#include <cmath>
#include <vector>

namespace widfs::dyncomp {

PowerSet self_correlate(const CsiWindow& window) {
  const int n = static_cast<int>(window.samples.size());
  if (n < 1) throw PreconditionError("self_correlate: empty window");
  PowerSet ps;
  ps.window_index = window.window_index;
  for (int i = 0; i < kAntennas; ++i) ps.p[i].resize(kSubcarriers, n);
  for (int k = 0; k < n; ++k) {
    const CsiMatrix& v = window.samples[k].values;
    for (int i = 0; i < kAntennas; ++i) {
      for (int j = 0; j < kSubcarriers; ++j) {
        ps.p[i](j, k) = std::norm(v(i, j));
      }
    }
  }
  return ps;
}

PowerSplit split_power(const PowerSet& p) {
  PowerSplit out;
  out.window_index = p.window_index;
  for (int i = 0; i < kAntennas; ++i) {
    const RVec mean = p.p[i].rowwise().mean();
    out.v[i] = p.p[i].colwise() - mean;
    for (int j = 0; j < kSubcarriers; ++j) out.u(i, j) = mean(j);
  }
  return out;
}

std::array<RMat, kAntennas> refine_power(const std::array<RMat, kAntennas>& v,
                                         double f_d, const SystemConfig& cfg) {
  dsp::FilterSpec lp;
  lp.kind = dsp::FilterSpec::Kind::kLowpass;
  lp.passband_hz = std::abs(f_d) + cfg.delta_f_hz;
  lp.sample_rate_hz = cfg.f_s;
  const bool use_hp = std::abs(f_d) > cfg.highpass_trigger_hz;
  dsp::FilterSpec hp;
  hp.kind = dsp::FilterSpec::Kind::kHighpass;
  hp.passband_hz = std::abs(f_d) - cfg.delta_f_hz;
  hp.sample_rate_hz = cfg.f_s;

  const auto fj = subcarrier_frequencies(cfg);
  const double dt = cfg.dt();
  const int pad = lp.taps;

  std::array<RMat, kAntennas> out;
  std::vector<double> row, ext;
  for (int i = 0; i < kAntennas; ++i) {
    const int n = static_cast<int>(v[i].cols());
    out[i].resize(v[i].rows(), n);
    row.resize(n);
    for (int j = 0; j < v[i].rows(); ++j) {
      for (int k = 0; k < n; ++k) row[k] = v[i](j, k);
      // Rows are only a few kernel lengths long, so reflection padding alone
      // leaves the whole row inside the edge transient and biases the phase
      // of the in-band tone. Continue that tone analytically across both
      // edges and reflect only the residual; the slices the filters see are
      // then free of boundary discontinuities at the tone frequency.
      const double f_row = f_d * fj[j] / cfg.f_c;
      if (dsp::cos_fit_resolvable(f_row, n, dt)) {
        const auto fit =
            dsp::least_squares_cos_fit(std::span<const double>(row), f_row, dt);
        const auto tone = [&](int k) {
          const double ph = 2.0 * kPi * f_row * k * dt;
          return fit.x * std::cos(ph) + fit.y * std::sin(ph);
        };
        ext.clear();
        ext.reserve(row.size() + 2 * pad);
        const auto res = [&](int k) { return row[k] - tone(k); };
        for (int k = pad; k >= 1; --k) {
          ext.push_back(tone(-k) + 2.0 * res(0) - res(std::min(k, n - 1)));
        }
        ext.insert(ext.end(), row.begin(), row.end());
        for (int k = 1; k <= pad; ++k) {
          ext.push_back(tone(n - 1 + k) + 2.0 * res(n - 1) -
                        res(n - 1 - std::min(k, n - 1)));
        }
        auto filtered = dsp::fir_filter(std::span<const double>(ext), lp);
        if (use_hp) {
          filtered = dsp::fir_filter(std::span<const double>(filtered), hp);
        }
        for (int k = 0; k < n; ++k) out[i](j, k) = filtered[pad + k];
      } else {
        auto filtered = dsp::fir_filter(std::span<const double>(row), lp);
        if (use_hp) {
          filtered = dsp::fir_filter(std::span<const double>(filtered), hp);
        }
        for (int k = 0; k < n; ++k) out[i](j, k) = filtered[k];
      }
    }
  }
  return out;
}

DynamicComponentSet reconstruct_components(
    const std::array<RMat, kAntennas>& v_refined, const AntSubReal& u,
    double f_d, const CVec& u12, const CVec& u31, const HwPhases& hw,
    const SystemConfig& cfg) {
  DynamicComponentSet out;
  const int n = static_cast<int>(v_refined[0].cols());
  const double dt = cfg.dt();
  const auto fj = subcarrier_frequencies(cfg);
  // Gate on the lowest subcarrier so every scaled per-row fit below stays
  // resolvable; fitting frequencies shrink with fj.
  if (!dsp::cos_fit_resolvable(f_d * fj[0] / cfg.f_c, n, dt)) {
    return out;  // no reliable component: weights zero, reliable false
  }
  std::vector<double> ratios(n);
  for (int i = 0; i < kAntennas; ++i) {
    for (int j = 0; j < kSubcarriers; ++j) {
      if (!(u(i, j) > 0)) continue;  // zero static power: leave weight 0
      for (int k = 0; k < n; ++k) ratios[k] = v_refined[i](j, k) / u(i, j);
      // Doppler scales with the subcarrier frequency; fitting every row at
      // the carrier-referenced f_d would tilt the recovered cross-subcarrier
      // phase slope by pi*f_d*T/f_c.
      const double f_row = f_d * fj[j] / cfg.f_c;
      const auto fit =
          dsp::least_squares_cos_fit(std::span<const double>(ratios), f_row, dt);
      out.z(i, j) = fit.weight * std::polar(1.0, std::atan2(fit.y, fit.x));
      out.w(i, j) = fit.weight;
    }
  }
  // Rotate antennas 2 and 3 into antenna 1's phase reference using the
  // measured static cross-correlation phases net of hardware offsets, then
  // divide out the direct-path reference phase eta_j.
  for (int j = 0; j < kSubcarriers; ++j) {
    const Complex eta =
        std::polar(1.0, 2.0 * kPi * fj[j] / kSpeedOfLight * cfg.d_s1);
    const Complex rot2 = std::polar(1.0, -(std::arg(u12(j)) - hw.p12));
    const Complex rot3 = std::polar(1.0, +(std::arg(u31(j)) - hw.p31));
    out.z(0, j) /= eta;
    out.z(1, j) *= rot2 / eta;
    out.z(2, j) *= rot3 / eta;
  }
  out.reliable = out.w.cwiseAbs().sum() > 0;
  return out;
}

}  // namespace widfs::dyncomp
