#pragma once

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace widfs {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr int kAntennas = 3;
inline constexpr int kSubcarriers = 30;

using Complex = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

// Fixed-size per-sample CSI block. DontAlign keeps the type safe to place in
// std::vector and plain structs without over-alignment concerns.
using CsiMatrix =
    Eigen::Matrix<Complex, kAntennas, kSubcarriers, Eigen::DontAlign>;
using AntSubReal =
    Eigen::Matrix<double, kAntennas, kSubcarriers, Eigen::DontAlign>;

struct CsiSample {
  double timestamp = 0.0;  // seconds
  CsiMatrix values = CsiMatrix::Zero();
};

using CsiTrace = std::vector<CsiSample>;

// One processing sub-window: N_p consecutive samples.
struct CsiWindow {
  std::vector<CsiSample> samples;
  int window_index = 0;
};

struct Position {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(const Position& a, const Position& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

constexpr double kPi = 3.14159265358979323846;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

// Wraps an angle to [0, 2*pi).
inline double wrap_2pi(double a) {
  const double two_pi = 2.0 * kPi;
  double r = std::fmod(a, two_pi);
  if (r < 0) r += two_pi;
  return r;
}

// Wraps an angle to (-pi, pi].
inline double wrap_pi(double a) {
  double r = wrap_2pi(a);
  if (r > kPi) r -= 2.0 * kPi;
  return r;
}

}  // namespace widfs
