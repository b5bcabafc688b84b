#pragma once

#include "widfs/types.hpp"

#include <span>
#include <vector>

namespace widfs::dsp {

// Polynomial smoothing with asymmetric endpoint fits, so output length equals
// input length. Real and imaginary parts share the same real coefficients.
std::vector<Complex> savitzky_golay(std::span<const Complex> series, int order,
                                    int frame);
std::vector<double> savitzky_golay(std::span<const double> series, int order,
                                   int frame);

struct FilterSpec {
  enum class Kind { kLowpass, kHighpass };
  Kind kind = Kind::kLowpass;
  double passband_hz = 60.0;
  double sample_rate_hz = 1000.0;
  int taps = 99;
};

// Kaiser-windowed sinc prototype (beta = 4). The cutoff sits 0.6 bin widths
// beyond the passband edge so the passband specs below hold at 99 taps:
//   lowpass 60 Hz @ 1 kHz: 10 Hz tone within 1%, 200 Hz tone down >= 20 dB
//   highpass: exact DC null (delta minus lowpass construction)
std::vector<double> design_fir(const FilterSpec& spec);

// Zero-phase application: odd-reflection padding, forward pass, backward pass.
std::vector<Complex> fir_filter(std::span<const Complex> series,
                                const FilterSpec& spec);
std::vector<double> fir_filter(std::span<const double> series,
                               const FilterSpec& spec);

struct FreqEstimate {
  double frequency_hz = 0.0;  // signed; component a*e^{+J2pi f k dt} -> +f
  double power = 0.0;
};

// Root-MUSIC over a complex observation matrix (rows = time, columns =
// independent observations). Covariance of dimension `subarray` built by
// temporal smoothing down each column, averaged over columns, with
// forward-backward averaging. Returns estimates sorted by power, descending;
// empty when the input carries no signal (all-zero or non-finite-free rank
// collapse).
std::vector<FreqEstimate> root_music(const CMat& observations, double f_s,
                                     double eig_threshold_factor,
                                     int subarray = 32);

struct CosFit {
  double x = 0.0;
  double y = 0.0;
  double weight = 0.0;  // in [0, 1], larger = better fit
};

// True when the two-column cosine/sine design spans enough of a cycle to be
// numerically independent (half a cycle over the series).
bool cos_fit_resolvable(double f_d, std::size_t n, double dt);

// Fits ratios[k] ~ x*cos(2pi f_d k dt) + y*sin(2pi f_d k dt) with mean-free
// basis columns; weight = 1/(1 + SSR/(n*var)). Throws PreconditionError when
// the design is degenerate (see cos_fit_resolvable).
CosFit least_squares_cos_fit(std::span<const double> ratios, double f_d,
                             double dt);

}  // namespace widfs::dsp
