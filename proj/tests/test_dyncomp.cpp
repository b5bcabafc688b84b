#include "widfs/dyncomp.hpp"

#include "doctest.h"

#include <cmath>
#include <complex>
#include <vector>

#include "oracle_helpers.hpp"
#include "widfs/config.hpp"
#include "widfs/dfs.hpp"
#include "widfs/dsp.hpp"
#include "widfs/errors.hpp"
#include "widfs/rng.hpp"
#include "widfs/synth.hpp"
#include "widfs/types.hpp"

using widfs::Complex;
using widfs::CsiWindow;
using widfs::kAntennas;
using widfs::kPi;
using widfs::kSpeedOfLight;
using widfs::kSubcarriers;
using widfs::PreconditionError;
using widfs::RMat;
using widfs::SystemConfig;
using widfs::wrap_pi;

namespace {

CsiWindow nth_window(const std::vector<widfs::CsiSample>& trace, int win,
                     int n_p) {
  CsiWindow w;
  w.window_index = win;
  w.samples.assign(trace.begin() + win * n_p,
                   trace.begin() + (win + 1) * n_p);
  return w;
}

// Runs the front half of the per-window chain on a generated trace and
// reconstructs the dynamic phasors with the given hardware phases.
struct ChainResult {
  widfs::dyncomp::DynamicComponentSet z;
  double f_d = 0.0;
};

ChainResult run_chain(const std::vector<widfs::CsiSample>& trace, int win,
                      const widfs::dyncomp::HwPhases& hw,
                      const SystemConfig& cfg) {
  const auto w = nth_window(trace, win, cfg.N_p);
  const auto cc = widfs::dfs::cross_correlate(w);
  const auto sp =
      widfs::dfs::split_static_dynamic(widfs::dfs::denoise(cc, cfg));
  const auto est =
      widfs::dfs::estimate_dfs(widfs::dfs::build_delta_w(sp), cfg, win);
  const auto ps = widfs::dyncomp::split_power(widfs::dyncomp::self_correlate(w));
  const auto vr = widfs::dyncomp::refine_power(ps.v, est.f_d, cfg);
  return {widfs::dyncomp::reconstruct_components(vr, ps.u, est.f_d, sp.s12.u,
                                                 sp.s31.u, hw, cfg),
          est.f_d};
}

// Single-reflector room: the walking person is the only scatterer, so the
// static field at each antenna is the direct path alone and the reconstructed
// phases admit a closed-form check.
widfs::synth::SceneSpec walking_scene(double aoa_deg, unsigned seed) {
  auto s = testutil::quiet_scene(widfs::synth::TrajectorySpec::Kind::kRadial,
                                 1.0, 0.2, seed);
  s.static_reflectors.clear();
  s.person_trajectory.params[0] = aoa_deg;
  s.person_trajectory.params[1] = 3.5;
  s.person_reflectivity = 0.05;
  return s;
}

// Largest deviation of the measured inter-antenna progression from the
// far-field form, across subcarriers and both adjacent pairs.
double worst_progression_error(const widfs::dyncomp::DynamicComponentSet& z,
                               double aoa_deg, const SystemConfig& cfg) {
  const auto fj = widfs::subcarrier_frequencies(cfg);
  const double sn = std::sin(widfs::deg_to_rad(aoa_deg));
  double worst = 0.0;
  for (int j = 0; j < kSubcarriers; ++j) {
    const double k = 2.0 * kPi * fj[j] / kSpeedOfLight;
    worst = std::max(worst,
                     std::abs(wrap_pi(std::arg(z.z(1, j) * std::conj(z.z(0, j))) +
                                      k * cfg.spacing_12 * sn)));
    worst = std::max(worst,
                     std::abs(wrap_pi(std::arg(z.z(2, j) * std::conj(z.z(1, j))) +
                                      k * cfg.spacing_23 * sn)));
  }
  return worst;
}

// Weight-weighted least squares slope of the unwrapped antenna-1 phase
// across subcarrier frequency.
double phase_slope(const widfs::dyncomp::DynamicComponentSet& z,
                   const SystemConfig& cfg) {
  const auto fj = widfs::subcarrier_frequencies(cfg);
  std::vector<double> ph(kSubcarriers), wt(kSubcarriers);
  for (int j = 0; j < kSubcarriers; ++j) {
    const double d = std::arg(z.z(0, j));
    ph[j] = j == 0 ? d : ph[j - 1] + wrap_pi(d - ph[j - 1]);
    wt[j] = z.w(0, j);
  }
  double sw = 0, mf = 0, mp = 0;
  for (int j = 0; j < kSubcarriers; ++j) {
    sw += wt[j];
    mf += wt[j] * fj[j];
    mp += wt[j] * ph[j];
  }
  mf /= sw;
  mp /= sw;
  double num = 0, den = 0;
  for (int j = 0; j < kSubcarriers; ++j) {
    num += wt[j] * (fj[j] - mf) * (ph[j] - mp);
    den += wt[j] * (fj[j] - mf) * (fj[j] - mf);
  }
  return num / den;
}

}  // namespace

TEST_CASE("self-correlation squares the magnitude entrywise") {
  CsiWindow w;
  w.samples.resize(8);
  for (auto& s : w.samples) s.values.setConstant(Complex{3.0, 4.0});
  const auto ps = widfs::dyncomp::self_correlate(w);
  for (int i = 0; i < kAntennas; ++i) {
    CHECK((ps.p[i].array() - 25.0).abs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("self-correlation rejects an empty window") {
  CHECK_THROWS_AS(widfs::dyncomp::self_correlate(CsiWindow{}),
                  PreconditionError);
}

TEST_CASE("powers are immune to common phase impairments") {
  const SystemConfig cfg;
  auto spec = walking_scene(40.0, 17);
  spec.impairments.phase_impairments = true;
  const auto [on, gt_on] = widfs::synth::generate_trace(spec, cfg);
  spec.impairments.phase_impairments = false;
  const auto [off, gt_off] = widfs::synth::generate_trace(spec, cfg);
  const auto a = widfs::dyncomp::self_correlate(nth_window(on, 0, 100));
  const auto b = widfs::dyncomp::self_correlate(nth_window(off, 0, 100));
  for (int i = 0; i < kAntennas; ++i) {
    const double scale = b.p[i].maxCoeff();
    CHECK((a.p[i] - b.p[i]).cwiseAbs().maxCoeff() < 1e-12 * scale);
  }
}

TEST_CASE("power split removes the mean and keeps the sum") {
  widfs::Rng rng(9);
  widfs::dyncomp::PowerSet ps;
  ps.window_index = 6;
  for (int i = 0; i < kAntennas; ++i) {
    ps.p[i].resize(kSubcarriers, 64);
    for (int j = 0; j < kSubcarriers; ++j) {
      for (int k = 0; k < 64; ++k) ps.p[i](j, k) = 2.0 + 0.3 * rng.normal();
    }
  }
  const auto sp = widfs::dyncomp::split_power(ps);
  CHECK(sp.window_index == 6);
  for (int i = 0; i < kAntennas; ++i) {
    for (int j = 0; j < kSubcarriers; ++j) {
      CHECK(sp.u(i, j) == doctest::Approx(ps.p[i].row(j).mean()).epsilon(1e-12));
      CHECK(std::abs(sp.v[i].row(j).mean()) < 1e-12);
      for (int k = 0; k < 64; ++k) {
        CHECK(std::abs(sp.u(i, j) + sp.v[i](j, k) - ps.p[i](j, k)) < 1e-12);
      }
    }
  }
}

namespace {

std::array<RMat, kAntennas> band_test_rows(int n, double dt) {
  std::array<RMat, kAntennas> v;
  for (int i = 0; i < kAntennas; ++i) {
    v[i].resize(kSubcarriers, n);
    for (int j = 0; j < kSubcarriers; ++j) {
      for (int k = 0; k < n; ++k) {
        const double t = k * dt;
        v[i](j, k) = 3.0 * std::cos(2.0 * kPi * 20.0 * t + 0.3 * j) +
                     2.0 * std::cos(2.0 * kPi * 45.0 * t) + 4.0;
      }
    }
  }
  return v;
}

double band_amp(const RMat& m, int j, double f, double dt, int lo, int hi) {
  std::vector<Complex> mid;
  for (int k = lo; k < hi; ++k) mid.emplace_back(m(j, k), 0.0);
  return std::abs(testutil::dft_amplitude(mid, f, dt));
}

}  // namespace

TEST_CASE("refinement keeps the doppler band and rejects neighbors") {
  const SystemConfig cfg;
  const double dt = cfg.dt();
  const int n = 400;
  const auto v = band_test_rows(n, dt);
  const auto out = widfs::dyncomp::refine_power(v, 20.0, cfg);

  const double in20 = band_amp(v[0], 5, 20.0, dt, 50, 350);
  const double in45 = band_amp(v[0], 5, 45.0, dt, 50, 350);
  const double in_dc = band_amp(v[0], 5, 0.0, dt, 50, 350);
  const double out20 = band_amp(out[0], 5, 20.0, dt, 50, 350);
  const double out45 = band_amp(out[0], 5, 45.0, dt, 50, 350);
  const double out_dc = band_amp(out[0], 5, 0.0, dt, 50, 350);

  CHECK(out20 / in20 > 0.891);  // within 1 dB
  CHECK(out20 / in20 < 1.122);
  CHECK(out45 / in45 < 0.1);    // at least 20 dB down
  CHECK(out_dc / in_dc < 0.1);  // highpass active at 10 Hz
}

TEST_CASE("refinement below the highpass trigger keeps the mean level") {
  const SystemConfig cfg;
  const int n = 400;
  const auto v = band_test_rows(n, cfg.dt());
  const auto out = widfs::dyncomp::refine_power(v, 5.0, cfg);
  const double in_dc = band_amp(v[0], 5, 0.0, cfg.dt(), 50, 350);
  const double out_dc = band_amp(out[0], 5, 0.0, cfg.dt(), 50, 350);
  CHECK(out_dc / in_dc > 0.99);
}

TEST_CASE("refinement preserves tone phase on rows one window long") {
  // One hundred samples is barely one kernel length; the analytic edge
  // continuation has to keep the in-band tone unbiased there.
  const SystemConfig cfg;
  const double dt = cfg.dt();
  const int n = 100;
  std::array<RMat, kAntennas> v;
  for (int i = 0; i < kAntennas; ++i) {
    v[i].resize(kSubcarriers, n);
    for (int j = 0; j < kSubcarriers; ++j) {
      for (int k = 0; k < n; ++k) {
        v[i](j, k) = 3.0 * std::cos(2.0 * kPi * 20.0 * k * dt + 0.3 * j) + 4.0;
      }
    }
  }
  const auto out = widfs::dyncomp::refine_power(v, 20.0, cfg);
  for (int j : {0, 14, 29}) {
    const auto fit = widfs::dsp::least_squares_cos_fit(
        std::vector<double>(out[0].row(j).begin(), out[0].row(j).end()), 20.0,
        dt);
    const double amp = std::hypot(fit.x, fit.y);
    const double phase = std::atan2(-fit.y, fit.x);  // cos(wt+p) convention
    CHECK(amp == doctest::Approx(3.0).epsilon(0.06));
    CHECK(std::abs(wrap_pi(phase - 0.3 * j)) < 0.02);
    // The constant term is outside the passband once the highpass engages.
    CHECK(std::abs(out[0].row(j).mean()) < 0.05);
  }
}

TEST_CASE("reconstruction reproduces the expected phase structure") {
  const SystemConfig cfg;
  for (double aoa : {40.0, -25.0}) {
    const auto spec = walking_scene(aoa, 23);
    const auto [trace, gt] = widfs::synth::generate_trace(spec, cfg);
    const auto r = run_chain(trace, 0, widfs::dyncomp::HwPhases{}, cfg);
    REQUIRE(r.z.reliable);
    CHECK(worst_progression_error(r.z, aoa, cfg) < 0.05);

    const double slope_expected =
        -2.0 * kPi * gt.path_length[0] / kSpeedOfLight;
    CHECK(std::abs(phase_slope(r.z, cfg) - slope_expected) <
          0.02 * std::abs(slope_expected));
  }
}

TEST_CASE("hardware phase offsets are compensated by the calibration input") {
  const SystemConfig cfg;
  auto spec = walking_scene(40.0, 23);
  spec.hardware.phase = {0.0, 0.8, -1.1};
  const auto [trace, gt] = widfs::synth::generate_trace(spec, cfg);

  // Phase differences follow the receive-chain delays: antenna 2 relative to
  // antenna 1 and antenna 1 relative to antenna 3.
  widfs::dyncomp::HwPhases hw;
  hw.p12 = spec.hardware.phase[1] - spec.hardware.phase[0];
  hw.p31 = spec.hardware.phase[0] - spec.hardware.phase[2];
  const auto good = run_chain(trace, 0, hw, cfg);
  REQUIRE(good.z.reliable);
  CHECK(worst_progression_error(good.z, 40.0, cfg) < 0.05);

  // Ignoring the hardware phases leaves them in the progression.
  const auto bad = run_chain(trace, 0, widfs::dyncomp::HwPhases{}, cfg);
  CHECK(worst_progression_error(bad.z, 40.0, cfg) > 0.5);
}

TEST_CASE("zero dynamic power yields an unreliable all-zero component set") {
  const SystemConfig cfg;
  std::array<RMat, kAntennas> v;
  for (auto& m : v) m = RMat::Zero(kSubcarriers, 100);
  const auto z = widfs::dyncomp::reconstruct_components(
      v, widfs::AntSubReal::Ones(), 25.0, widfs::CVec::Ones(kSubcarriers),
      widfs::CVec::Ones(kSubcarriers), {}, cfg);
  CHECK(!z.reliable);
  CHECK(z.w.maxCoeff() == 0.0);
  CHECK(z.z.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("an unresolvable doppler marks the window unreliable") {
  const SystemConfig cfg;
  std::array<RMat, kAntennas> v;
  for (auto& m : v) m = RMat::Ones(kSubcarriers, 100);
  // 1 Hz over 100 ms is a tenth of a cycle: no phase fit is possible.
  const auto z = widfs::dyncomp::reconstruct_components(
      v, widfs::AntSubReal::Ones(), 1.0, widfs::CVec::Ones(kSubcarriers),
      widfs::CVec::Ones(kSubcarriers), {}, cfg);
  CHECK(!z.reliable);
  CHECK(z.w.maxCoeff() == 0.0);
}

TEST_CASE("antennas without static power get zero weight") {
  const SystemConfig cfg;
  const double dt = cfg.dt();
  std::array<RMat, kAntennas> v;
  for (auto& m : v) {
    m.resize(kSubcarriers, 100);
    for (int j = 0; j < kSubcarriers; ++j) {
      for (int k = 0; k < 100; ++k) {
        m(j, k) = std::cos(2.0 * kPi * 25.0 * k * dt + 0.1 * j);
      }
    }
  }
  widfs::AntSubReal u = widfs::AntSubReal::Ones();
  u.row(1).setZero();
  const auto z = widfs::dyncomp::reconstruct_components(
      v, u, 25.0, widfs::CVec::Ones(kSubcarriers),
      widfs::CVec::Ones(kSubcarriers), {}, cfg);
  CHECK(z.reliable);
  CHECK(z.w.row(1).maxCoeff() == 0.0);
  CHECK(z.w.row(0).minCoeff() > 0.5);
  CHECK(z.w.row(2).minCoeff() > 0.5);
}

TEST_CASE("noise added to the refined series never helps the weights") {
  const SystemConfig cfg;
  const double dt = cfg.dt();
  int lowered = 0;
  for (unsigned seed = 0; seed < 10; ++seed) {
    widfs::Rng rng(100 + seed);
    std::array<RMat, kAntennas> clean, noisy;
    for (int i = 0; i < kAntennas; ++i) {
      clean[i].resize(kSubcarriers, 100);
      noisy[i].resize(kSubcarriers, 100);
      for (int j = 0; j < kSubcarriers; ++j) {
        for (int k = 0; k < 100; ++k) {
          clean[i](j, k) = std::cos(2.0 * kPi * 25.0 * k * dt + 0.1 * j);
          noisy[i](j, k) = clean[i](j, k) + 0.5 * rng.normal();
        }
      }
    }
    const auto a = widfs::dyncomp::reconstruct_components(
        clean, widfs::AntSubReal::Ones(), 25.0, widfs::CVec::Ones(kSubcarriers),
        widfs::CVec::Ones(kSubcarriers), {}, cfg);
    const auto b = widfs::dyncomp::reconstruct_components(
        noisy, widfs::AntSubReal::Ones(), 25.0, widfs::CVec::Ones(kSubcarriers),
        widfs::CVec::Ones(kSubcarriers), {}, cfg);
    if (b.w.mean() < a.w.mean()) ++lowered;
  }
  CHECK(lowered >= 9);
}
