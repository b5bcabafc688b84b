#include "widfs/synth.hpp"

#include "doctest.h"
#include "oracle_helpers.hpp"
#include "widfs/errors.hpp"

#include <cmath>
#include <string>

using testutil::quiet_scene;
using testutil::standard_scene;
using widfs::Complex;
using widfs::InputError;
using widfs::kAntennas;
using widfs::kSubcarriers;
using widfs::PreconditionError;
using widfs::SystemConfig;
namespace synth = widfs::synth;
using Kind = synth::TrajectorySpec::Kind;

TEST_CASE("static noiseless scene is time invariant") {
  auto scene = quiet_scene(Kind::kNone, 0.0, 0.3, 1);
  const SystemConfig cfg;
  const auto [trace, gt] = synth::generate_trace(scene, cfg);
  REQUIRE(trace.size() == 300);
  for (const auto& s : trace) {
    for (int i = 0; i < kAntennas; ++i) {
      for (int j = 0; j < kSubcarriers; ++j) {
        CHECK(s.values(i, j) == trace[0].values(i, j));
      }
    }
  }
  for (double fd : gt.dfs_hz) CHECK(fd == 0.0);
}

TEST_CASE("same seed reproduces the trace bit for bit") {
  auto scene = standard_scene(Kind::kEllipse, 1.0, 0.5, 42);
  const SystemConfig cfg;
  const auto [a, gta] = synth::generate_trace(scene, cfg);
  const auto [b, gtb] = synth::generate_trace(scene, cfg);
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].timestamp == b[k].timestamp);
    CHECK((a[k].values.array() == b[k].values.array()).all());
  }
  for (std::size_t k = 0; k < gta.dfs_hz.size(); ++k) {
    CHECK(gta.dfs_hz[k] == gtb.dfs_hz[k]);
  }
}

TEST_CASE("clock impairments cancel in cross products") {
  // Fixed gain isolates the phase impairments, whose common factor cancels in
  // CSI_1 * conj(CSI_2) including the noise term (same noise stream).
  auto on = standard_scene(Kind::kEllipse, 1.0, 0.3, 7);
  on.impairments.agc_walk_sigma = 0.0;
  auto off = on;
  off.impairments.phase_impairments = false;

  const SystemConfig cfg;
  const auto [ta, gta] = synth::generate_trace(on, cfg);
  const auto [tb, gtb] = synth::generate_trace(off, cfg);
  REQUIRE(ta.size() == tb.size());
  for (std::size_t k = 0; k < ta.size(); ++k) {
    for (int j = 0; j < kSubcarriers; ++j) {
      const Complex cca = ta[k].values(0, j) * std::conj(ta[k].values(1, j));
      const Complex ccb = tb[k].values(0, j) * std::conj(tb[k].values(1, j));
      CHECK(std::abs(cca - ccb) <= 1e-9 * std::max(1.0, std::abs(ccb)));
    }
  }
}

TEST_CASE("gain walk scales every antenna and subcarrier alike") {
  auto scene = standard_scene(Kind::kNone, 0.0, 0.4, 3, testutil::kNoiseless);
  const SystemConfig cfg;
  const auto [trace, gt] = synth::generate_trace(scene, cfg);
  // Within a sample, |CSI(i,j)| / |CSI_0(i,j)| is one common gain ratio.
  for (std::size_t k = 1; k < trace.size(); ++k) {
    const double r0 = std::abs(trace[k].values(0, 0)) /
                      std::abs(trace[0].values(0, 0));
    for (int i = 0; i < kAntennas; ++i) {
      for (int j = 0; j < kSubcarriers; ++j) {
        const double r = std::abs(trace[k].values(i, j)) /
                         std::abs(trace[0].values(i, j));
        CHECK(r == doctest::Approx(r0).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("ground-truth Doppler matches the path-length derivative") {
  auto scene = quiet_scene(Kind::kEllipse, 1.2, 2.0, 5);
  const SystemConfig cfg;
  const auto [trace, gt] = synth::generate_trace(scene, cfg);
  const double dt = cfg.dt();
  for (std::size_t k = 1; k + 1 < gt.path_length.size(); k += 97) {
    const double slope =
        (gt.path_length[k + 1] - gt.path_length[k - 1]) / (2.0 * dt);
    const double fd = cfg.f_c / widfs::kSpeedOfLight * slope;
    CHECK(std::abs(fd - gt.dfs_hz[k]) < 0.1);
  }
  // Walking-speed scenes stay within the audible Doppler band.
  for (double fd : gt.dfs_hz) CHECK(std::abs(fd) < 60.0);
}

TEST_CASE("reflection path is never shorter than the direct path") {
  auto scene = standard_scene(Kind::kRect, 1.0, 3.0, 11);
  const SystemConfig cfg;
  const auto [trace, gt] = synth::generate_trace(scene, cfg);
  const double d_s1 = std::hypot(scene.tx_position.x, scene.tx_position.y);
  for (double d : gt.path_length) CHECK(d >= d_s1 - 1e-12);
  for (double a : gt.aoa_deg) {
    CHECK(a > -90.0);
    CHECK(a < 90.0);
  }
}

TEST_CASE("trajectory leaving the half-plane names the sample") {
  auto scene = standard_scene(Kind::kLine, 1.0, 3.0, 1);
  scene.person_trajectory.params = {0.0, 1.0, 0.0, -1.0};  // crosses y = 0
  const SystemConfig cfg;
  try {
    synth::generate_trace(scene, cfg);
    FAIL("expected PreconditionError");
  } catch (const PreconditionError& e) {
    CHECK(std::string(e.what()).find("sample") != std::string::npos);
  }
}

TEST_CASE("scene validation rejects non-dominant reflectors") {
  auto scene = standard_scene(Kind::kNone, 0.0, 1.0, 1);
  scene.static_reflectors.push_back({{1.0, 1.0}, 1.0});
  CHECK_THROWS_AS(scene.validate(), PreconditionError);

  auto bad_axis = standard_scene(Kind::kNone, 0.0, 1.0, 1);
  bad_axis.rx_array_axis = {2.0, 0.0};
  CHECK_THROWS_AS(bad_axis.validate(), PreconditionError);

  auto bad_duration = standard_scene(Kind::kNone, 0.0, 0.0, 1);
  CHECK_THROWS_AS(bad_duration.validate(), PreconditionError);
}

TEST_CASE("dropout removes the person from some samples only") {
  auto scene = quiet_scene(Kind::kRadial, 1.0, 1.0, 21);
  auto dropped = scene;
  dropped.person_dropout = 0.5;
  const SystemConfig cfg;
  const auto [full, gtf] = synth::generate_trace(scene, cfg);
  const auto [part, gtp] = synth::generate_trace(dropped, cfg);
  int differing = 0, equal = 0;
  for (std::size_t k = 0; k < full.size(); ++k) {
    if ((full[k].values.array() == part[k].values.array()).all()) {
      ++equal;
    } else {
      ++differing;
    }
  }
  // Roughly half the samples lose the reflection; the rest are untouched.
  CHECK(differing > 300);
  CHECK(equal > 300);
}

TEST_CASE("scene file round trip") {
  auto scene = standard_scene(Kind::kRect, 1.3, 7.5, 99, 25.0);
  scene.person_dropout = 0.2;
  scene.hardware.phase = {0.0, 1.5, 2.5};
  scene.hardware.true_spacing_12 = 0.02618;
  const auto back = synth::parse_scene(synth::format_scene(scene));
  CHECK(back.tx_position.x == scene.tx_position.x);
  CHECK(back.tx_position.y == scene.tx_position.y);
  REQUIRE(back.static_reflectors.size() == scene.static_reflectors.size());
  CHECK(back.static_reflectors[1].amplitude ==
        scene.static_reflectors[1].amplitude);
  CHECK(back.person_trajectory.kind == scene.person_trajectory.kind);
  CHECK(back.person_trajectory.speed == scene.person_trajectory.speed);
  for (int i = 0; i < 4; ++i) {
    CHECK(back.person_trajectory.params[i] == scene.person_trajectory.params[i]);
  }
  CHECK(back.person_dropout == scene.person_dropout);
  CHECK(back.hardware.phase[2] == scene.hardware.phase[2]);
  CHECK(back.hardware.true_spacing_12 == scene.hardware.true_spacing_12);
  CHECK(back.impairments.noise_snr_db == scene.impairments.noise_snr_db);
  CHECK(back.duration_s == scene.duration_s);
  CHECK(back.seed == scene.seed);
}

TEST_CASE("scene parser rejects malformed input") {
  CHECK_THROWS_AS(synth::parse_scene("trajectory ellipse\nnot_a_key 1\n"),
                  InputError);
  CHECK_THROWS_AS(synth::parse_scene("tx_position 1 2\n"), InputError);
  CHECK_THROWS_AS(synth::parse_scene("trajectory wobble\n"), InputError);
  CHECK_THROWS_AS(synth::parse_scene("trajectory line 1 2 3\n"), InputError);
  CHECK_THROWS_AS(synth::parse_scene("trajectory none\nspeed fast\n"),
                  InputError);
  CHECK_NOTHROW(synth::parse_scene("trajectory radial 40 1.5\n"));
}
