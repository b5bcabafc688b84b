#include "widfs/dsp.hpp"

#include "widfs/errors.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace widfs::dsp {

namespace {

void check_sg_params(std::size_t n, int order, int frame) {
  if (frame < 1 || frame % 2 == 0) {
    throw PreconditionError("savitzky_golay: frame must be odd and positive");
  }
  if (order < 0 || order >= frame) {
    throw PreconditionError("savitzky_golay: order must satisfy 0 <= order < frame");
  }
  if (n < static_cast<std::size_t>(frame)) {
    throw PreconditionError("savitzky_golay: series shorter than frame");
  }
}

// frame x frame projection onto polynomials of the given order; row r holds
// the weights that evaluate the window's fit at position r.
RMat sg_projection(int order, int frame) {
  RMat a(frame, order + 1);
  const int half = frame / 2;
  for (int r = 0; r < frame; ++r) {
    double v = 1.0;
    for (int p = 0; p <= order; ++p) {
      a(r, p) = v;
      v *= static_cast<double>(r - half);
    }
  }
  return a * (a.transpose() * a).ldlt().solve(a.transpose());
}

template <typename T>
std::vector<T> sg_apply(std::span<const T> x, int order, int frame) {
  check_sg_params(x.size(), order, frame);
  const RMat proj = sg_projection(order, frame);
  const int n = static_cast<int>(x.size());
  const int half = frame / 2;
  std::vector<T> y(x.size());
  auto dot_row = [&](int row, int start) {
    T acc{};
    for (int c = 0; c < frame; ++c) acc += proj(row, c) * x[start + c];
    return acc;
  };
  for (int i = 0; i < n; ++i) {
    if (i < half) {
      y[i] = dot_row(i, 0);
    } else if (i >= n - half) {
      y[i] = dot_row(frame - (n - i), n - frame);
    } else {
      y[i] = dot_row(half, i - half);
    }
  }
  return y;
}

constexpr double kKaiserBeta = 4.0;

std::vector<double> kaiser_window(int taps) {
  std::vector<double> w(taps);
  const double denom = std::cyl_bessel_i(0.0, kKaiserBeta);
  const double m = taps - 1;
  for (int i = 0; i < taps; ++i) {
    const double r = (2.0 * i - m) / m;
    const double t = std::max(0.0, 1.0 - r * r);
    w[i] = std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(t)) / denom;
  }
  return w;
}

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = kPi * x;
  return std::sin(px) / px;
}

std::vector<double> windowed_sinc_lowpass(int taps, double cutoff_hz,
                                          double fs) {
  const auto w = kaiser_window(taps);
  std::vector<double> h(taps);
  const double m = (taps - 1) / 2.0;
  const double fn = 2.0 * cutoff_hz / fs;
  double sum = 0.0;
  for (int i = 0; i < taps; ++i) {
    h[i] = fn * sinc(fn * (i - m)) * w[i];
    sum += h[i];
  }
  for (double& v : h) v /= sum;  // unit DC gain
  return h;
}

void check_filter_spec(const FilterSpec& spec) {
  if (spec.taps < 3 || spec.taps % 2 == 0) {
    throw PreconditionError("fir: tap count must be odd and >= 3");
  }
  if (!(spec.passband_hz > 0) ||
      !(spec.passband_hz < spec.sample_rate_hz / 2)) {
    throw PreconditionError("fir: passband must lie in (0, f_s/2)");
  }
}

// Full convolution trimmed to input length, centered (matching the behavior
// the filter design was tuned against).
template <typename T>
std::vector<T> conv_same(const std::vector<T>& x,
                         const std::vector<double>& h) {
  const int n = static_cast<int>(x.size());
  const int t = static_cast<int>(h.size());
  const int off = (t - 1) / 2;
  std::vector<T> y(n, T{});
  for (int i = 0; i < n; ++i) {
    const int center = i + off;
    const int q0 = std::max(0, center - (n - 1));
    const int q1 = std::min(t - 1, center);
    T acc{};
    for (int q = q0; q <= q1; ++q) acc += h[q] * x[center - q];
    y[i] = acc;
  }
  return y;
}

template <typename T>
std::vector<T> zero_phase_apply(std::span<const T> x,
                                const std::vector<double>& h) {
  const int n = static_cast<int>(x.size());
  const int pad = std::min(static_cast<int>(h.size()), n - 1);
  std::vector<T> ext;
  ext.reserve(n + 2 * pad);
  for (int i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (int i = 2; i <= pad + 1; ++i) {
    ext.push_back(2.0 * x[n - 1] - x[n - i]);
  }
  auto fwd = conv_same(ext, h);
  std::reverse(fwd.begin(), fwd.end());
  auto bwd = conv_same(fwd, h);
  std::reverse(bwd.begin(), bwd.end());
  return std::vector<T>(bwd.begin() + pad, bwd.begin() + pad + n);
}

template <typename T>
std::vector<T> fir_apply(std::span<const T> series, const FilterSpec& spec) {
  check_filter_spec(spec);
  if (series.size() <= static_cast<std::size_t>(spec.taps)) {
    throw PreconditionError("fir_filter: series length must exceed tap count");
  }
  return zero_phase_apply(series, design_fir(spec));
}

}  // namespace

std::vector<Complex> savitzky_golay(std::span<const Complex> series, int order,
                                    int frame) {
  return sg_apply(series, order, frame);
}

std::vector<double> savitzky_golay(std::span<const double> series, int order,
                                   int frame) {
  return sg_apply(series, order, frame);
}

std::vector<double> design_fir(const FilterSpec& spec) {
  check_filter_spec(spec);
  // Transition-edge allowance: the passband spec is met when the -6 dB point
  // sits slightly beyond the named edge.
  const double shift = 0.6 * spec.sample_rate_hz / (spec.taps - 1);
  if (spec.kind == FilterSpec::Kind::kLowpass) {
    return windowed_sinc_lowpass(spec.taps, spec.passband_hz + shift,
                                 spec.sample_rate_hz);
  }
  // Highpass as spectral inversion of a lowpass: delta minus lowpass gives an
  // exact DC null.
  const double cutoff = std::max(spec.passband_hz - shift, 1e-6);
  auto h = windowed_sinc_lowpass(spec.taps, cutoff, spec.sample_rate_hz);
  for (double& v : h) v = -v;
  h[(spec.taps - 1) / 2] += 1.0;
  return h;
}

std::vector<Complex> fir_filter(std::span<const Complex> series,
                                const FilterSpec& spec) {
  return fir_apply(series, spec);
}

std::vector<double> fir_filter(std::span<const double> series,
                               const FilterSpec& spec) {
  return fir_apply(series, spec);
}

namespace {

// Roots of a complex polynomial, coefficients highest order first, via the
// companion matrix. Leading/trailing exact zeros are trimmed (trailing zeros
// contribute roots at the origin, which callers here never select).
std::vector<Complex> polynomial_roots(std::vector<Complex> c) {
  std::size_t lo = 0;
  while (lo < c.size() && c[lo] == Complex{}) ++lo;
  std::size_t hi = c.size();
  while (hi > lo && c[hi - 1] == Complex{}) --hi;
  c = std::vector<Complex>(c.begin() + lo, c.begin() + hi);
  if (c.size() < 2) return {};
  const int deg = static_cast<int>(c.size()) - 1;
  CMat comp = CMat::Zero(deg, deg);
  for (int i = 0; i < deg; ++i) comp(0, i) = -c[i + 1] / c[0];
  for (int i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
  Eigen::ComplexEigenSolver<CMat> es(comp, /*computeEigenvectors=*/false);
  std::vector<Complex> roots(deg);
  for (int i = 0; i < deg; ++i) roots[i] = es.eigenvalues()(i);
  return roots;
}

}  // namespace

std::vector<FreqEstimate> root_music(const CMat& observations, double f_s,
                                     double eig_threshold_factor,
                                     int subarray) {
  const int n = static_cast<int>(observations.rows());
  const int s_cols = static_cast<int>(observations.cols());
  const int m = subarray;
  if (s_cols < 1) throw PreconditionError("root_music: no observation columns");
  if (n < 2 * m) {
    throw PreconditionError("root_music: need rows >= 2 * subarray length");
  }
  const double dt = 1.0 / f_s;
  const int snapshots = n - m + 1;

  CMat r = CMat::Zero(m, m);
  for (int s = 0; s < s_cols; ++s) {
    for (int w = 0; w < snapshots; ++w) {
      const auto x = observations.block(w, s, m, 1);
      r.noalias() += x * x.adjoint();
    }
  }
  r /= static_cast<double>(s_cols) * snapshots;
  // Forward-backward averaging: R <- (R + J conj(R) J)/2.
  r = 0.5 * (r + r.conjugate().reverse().eval());

  if (!r.allFinite() || r.norm() < 1e-300) return {};

  Eigen::SelfAdjointEigenSolver<CMat> es(r);
  const RVec ev = es.eigenvalues();  // ascending
  const double ev_max = ev(m - 1);
  if (!(ev_max > 0)) return {};
  int p = 0;
  for (int i = 0; i < m; ++i) {
    if (ev(i) > eig_threshold_factor * ev_max) ++p;
  }
  p = std::clamp(p, 1, m - 1);

  const CMat noise = es.eigenvectors().leftCols(m - p);
  const CMat g = noise * noise.adjoint();

  std::vector<Complex> coeffs(2 * m - 1);
  for (int k = m - 1; k >= -(m - 1); --k) {
    Complex acc{};
    const int i0 = std::max(0, -k);
    const int i1 = std::min(m, m - k);
    for (int i = i0; i < i1; ++i) acc += g(i, i + k);
    coeffs[(m - 1) - k] = acc;
  }

  auto roots = polynomial_roots(std::move(coeffs));
  std::vector<Complex> inside;
  for (const auto& z : roots) {
    if (std::abs(z) <= 1.0) inside.push_back(z);
  }
  std::sort(inside.begin(), inside.end(),
            [](const Complex& a, const Complex& b) {
              return std::abs(a) > std::abs(b);
            });
  if (inside.empty()) return {};
  const int picks = std::min<int>(p, static_cast<int>(inside.size()));

  RVec freqs(picks);
  for (int q = 0; q < picks; ++q) {
    freqs(q) = std::arg(inside[q]) / (2.0 * kPi * dt);
  }

  // Least-squares amplitude fit of the picked tones against the observations.
  CMat basis(n, picks);
  for (int k = 0; k < n; ++k) {
    for (int q = 0; q < picks; ++q) {
      basis(k, q) = std::polar(1.0, 2.0 * kPi * freqs(q) * k * dt);
    }
  }
  const CMat b = basis.completeOrthogonalDecomposition().solve(observations);

  std::vector<FreqEstimate> out(picks);
  for (int q = 0; q < picks; ++q) {
    out[q].frequency_hz = freqs(q);
    out[q].power = b.row(q).cwiseAbs2().mean();
  }
  std::sort(out.begin(), out.end(), [](const FreqEstimate& a,
                                       const FreqEstimate& b_) {
    return a.power > b_.power;
  });
  return out;
}

bool cos_fit_resolvable(double f_d, std::size_t n, double dt) {
  return std::abs(f_d) * static_cast<double>(n) * dt >= 0.5;
}

CosFit least_squares_cos_fit(std::span<const double> ratios, double f_d,
                             double dt) {
  const std::size_t n = ratios.size();
  if (n < 2) throw PreconditionError("least_squares_cos_fit: need >= 2 samples");
  if (!std::isfinite(f_d)) {
    throw PreconditionError("least_squares_cos_fit: f_d must be finite");
  }
  if (!cos_fit_resolvable(f_d, n, dt)) {
    throw PreconditionError(
        "least_squares_cos_fit: design columns collinear (|f_d|*n*dt < 0.5 "
        "cycles)");
  }
  RMat a(n, 2);
  for (std::size_t k = 0; k < n; ++k) {
    const double ph = 2.0 * kPi * f_d * static_cast<double>(k) * dt;
    a(k, 0) = std::cos(ph);
    a(k, 1) = std::sin(ph);
  }
  a.rowwise() -= a.colwise().mean();
  Eigen::Map<const RVec> r(ratios.data(), n);
  const Eigen::Vector2d xy =
      a.completeOrthogonalDecomposition().solve(r.matrix());
  const double ssr = (r.matrix() - a * xy).squaredNorm();
  const double mean = r.mean();
  const double var = (r.array() - mean).square().mean();
  CosFit fit;
  fit.x = xy(0);
  fit.y = xy(1);
  fit.weight =
      var > 0 ? std::clamp(1.0 / (1.0 + ssr / (n * var)), 0.0, 1.0) : 0.0;
  return fit;
}

}  // namespace widfs::dsp
