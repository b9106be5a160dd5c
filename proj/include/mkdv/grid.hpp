#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "mkdv/closed_forms.hpp"
#include "mkdv/error.hpp"

namespace mkdv {

/// Uniform periodic grid x_j = center - L + j h, h = 2L / n.
struct Window {
  double center = 0.0;
  double half_width = 40.0;
  int n_points = 512;

  double length() const { return 2.0 * half_width; }
  double spacing() const { return length() / n_points; }
  double x(int j) const { return center - half_width + j * spacing(); }
  double left() const { return center - half_width; }
  double right() const { return center + half_width; }

  std::vector<double> points() const {
    std::vector<double> xs(n_points);
    for (int j = 0; j < n_points; ++j) xs[j] = x(j);
    return xs;
  }

  /// Angular wavenumber of rfft bin j (0 <= j <= n/2).
  double wavenumber(int j) const { return 2.0 * std::numbers::pi * j / length(); }

  void validate() const {
    if (!(half_width > 0.0) || !std::isfinite(half_width) || !std::isfinite(center))
      throw DomainError("window: half width must be positive");
    if (n_points < 16 || (n_points & (n_points - 1)) != 0)
      throw DomainError("window: n_points must be a power of two");
  }

  /// Window large enough that the breather envelope at time t, plus a decay
  /// margin of margin/beta, fits inside.
  static Window for_breather(const BreatherParams& p, int n_points, double t = 0.0, double margin = 40.0) {
    const auto v = p.velocities();
    const double env = -v.gamma * t - p.x2;
    const double car = -v.delta * t - p.x1;
    Window w;
    w.center = 0.0;
    w.half_width = margin / p.beta + std::max({std::abs(env), std::abs(car), std::abs(p.x1), std::abs(p.x2)});
    w.n_points = n_points;
    return w;
  }

  friend bool operator==(const Window&, const Window&) = default;
};

/// Throws unless the breather envelope sits at least margin/beta from both
/// window edges.
inline void require_breather_fits(const Window& w, const BreatherParams& p, double t, double margin = 40.0) {
  const double env = -p.velocities().gamma * t - p.x2;
  const double need = margin / p.beta;
  if (env - need < w.left() - 1e-12 || env + need > w.right() + 1e-12)
    throw DomainError("window too small for breather: need half width " +
                      std::to_string(need + std::abs(env - w.center)));
}

/// Cached real-to-complex / complex-to-real FFTW plans, shared by size.
class Fft {
 public:
  explicit Fft(int n) : n_(n) {
    std::lock_guard lock(mutex());
    auto& cache = plans();
    auto it = cache.find(n);
    if (it == cache.end()) {
      std::vector<double> r(n);
      std::vector<fftw_complex> c(n / 2 + 1);
      Plans p;
      p.forward = fftw_plan_dft_r2c_1d(n, r.data(), c.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
      p.backward = fftw_plan_dft_c2r_1d(n, c.data(), r.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
      it = cache.emplace(n, p).first;
    }
    plans_ = it->second;
  }

  int size() const { return n_; }

  /// Unnormalized forward transform; out has n/2 + 1 bins.
  void forward(std::span<const double> in, std::span<std::complex<double>> out) const {
    // FFTW may scribble on the input for c2r only; r2c leaves it intact.
    fftw_execute_dft_r2c(plans_.forward, const_cast<double*>(in.data()),
                         reinterpret_cast<fftw_complex*>(out.data()));
  }

  /// Inverse transform including the 1/n factor. `in` is destroyed.
  void backward(std::span<std::complex<double>> in, std::span<double> out) const {
    fftw_execute_dft_c2r(plans_.backward, reinterpret_cast<fftw_complex*>(in.data()), out.data());
    const double s = 1.0 / n_;
    for (double& v : out) v *= s;
  }

  std::vector<std::complex<double>> forward(std::span<const double> in) const {
    std::vector<std::complex<double>> out(n_ / 2 + 1);
    forward(in, out);
    return out;
  }

  std::vector<double> backward(std::vector<std::complex<double>> in) const {
    std::vector<double> out(n_);
    backward(in, out);
    return out;
  }

 private:
  struct Plans {
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
  };
  static std::mutex& mutex() {
    static std::mutex m;
    return m;
  }
  static std::map<int, Plans>& plans() {
    static std::map<int, Plans> p;
    return p;
  }

  int n_;
  Plans plans_;
};

/// (i k)^m, with the Nyquist bin zeroed for odd m.
inline std::complex<double> derivative_symbol(const Window& w, int j, int m) {
  const int n = w.n_points;
  if (m % 2 == 1 && j == n / 2) return 0.0;
  const double k = w.wavenumber(j);
  std::complex<double> s = 1.0;
  for (int e = 0; e < m; ++e) s *= std::complex<double>(0.0, k);
  return s;
}

/// m-th derivative by Fourier differentiation on the periodic window.
inline std::vector<double> spectral_derivative(const Window& w, std::span<const double> u, int m) {
  const Fft fft(w.n_points);
  auto uh = fft.forward(u);
  for (int j = 0; j < static_cast<int>(uh.size()); ++j) uh[j] *= derivative_symbol(w, j, m);
  return fft.backward(std::move(uh));
}

/// Values of a function on a window, optionally with derivatives.
struct SampledField {
  Window window;
  std::vector<double> values;
  std::vector<std::vector<double>> derivs;  ///< derivs[k-1] holds d^k/dx^k

  int derivative_order() const { return static_cast<int>(derivs.size()); }

  const std::vector<double>& d(int k) const {
    if (k == 0) return values;
    if (k > derivative_order())
      throw DomainError("field carries derivatives up to " + std::to_string(derivative_order()) +
                        ", order " + std::to_string(k) + " requested");
    return derivs[k - 1];
  }

  /// Replaces the derivative stack by Fourier derivatives of orders 1..m.
  SampledField& with_spectral_derivatives(int m) {
    derivs.clear();
    for (int k = 1; k <= m; ++k) derivs.push_back(spectral_derivative(window, values, k));
    return *this;
  }

  static SampledField sample(const Window& w, const std::function<double(double)>& f) {
    w.validate();
    SampledField s;
    s.window = w;
    s.values.resize(w.n_points);
    for (int j = 0; j < w.n_points; ++j) s.values[j] = f(w.x(j));
    return s;
  }

  static SampledField zeros(const Window& w, int m = 0) {
    SampledField s;
    s.window = w;
    s.values.assign(w.n_points, 0.0);
    s.derivs.assign(m, std::vector<double>(w.n_points, 0.0));
    return s;
  }

  SampledField& operator+=(const SampledField& o) {
    if (!(o.window == window)) throw DomainError("field windows differ");
    for (int j = 0; j < window.n_points; ++j) values[j] += o.values[j];
    const int m = std::min(derivative_order(), o.derivative_order());
    derivs.resize(m);
    for (int k = 0; k < m; ++k)
      for (int j = 0; j < window.n_points; ++j) derivs[k][j] += o.derivs[k][j];
    return *this;
  }

  SampledField& operator*=(double s) {
    for (double& v : values) v *= s;
    for (auto& d : derivs)
      for (double& v : d) v *= s;
    return *this;
  }

  friend SampledField operator+(SampledField l, const SampledField& r) { return l += r; }
  friend SampledField operator*(double s, SampledField f) { return f *= s; }
  friend SampledField operator-(SampledField l, const SampledField& r) { return l += (-1.0) * r; }

  /// Largest |u| over the two edge samples.
  double edge_magnitude() const {
    return std::max(std::abs(values.front()), std::abs(values.back()));
  }
};

/// Breather at time t on a window, with exact derivatives 1..m.
inline SampledField sample_breather(const BreatherParams& p, double t, const Window& w, int m) {
  w.validate();
  SampledField s = SampledField::zeros(w, m);
  for (int j = 0; j < w.n_points; ++j) {
    const Jet jet = breather_jet(p, t, w.x(j), m);
    s.values[j] = jet.value;
    for (int k = 1; k <= m; ++k) s.derivs[k - 1][j] = jet.dx[k - 1];
  }
  return s;
}

/// Periodic sum of images sum_m B(x + 2 L m), |m| <= images, with exact
/// derivatives 1..m.
inline SampledField sample_breather_periodic(const BreatherParams& p, double t, const Window& w, int m,
                                             int images = 2) {
  w.validate();
  SampledField s = SampledField::zeros(w, m);
  for (int j = 0; j < w.n_points; ++j)
    for (int img = -images; img <= images; ++img) {
      const Jet jet = breather_jet(p, t, w.x(j) + img * w.length(), m);
      s.values[j] += jet.value;
      for (int k = 1; k <= m; ++k) s.derivs[k - 1][j] += jet.dx[k - 1];
    }
  return s;
}

/// Periodic sum of images of an arbitrary profile.
inline SampledField sample_periodic(const Window& w, const std::function<double(double)>& f, int images = 2) {
  return SampledField::sample(w, [&](double x) {
    double acc = 0.0;
    for (int img = -images; img <= images; ++img) acc += f(x + img * w.length());
    return acc;
  });
}

inline SampledField sample_soliton(const SolitonParams& p, double t, const Window& w, int m) {
  w.validate();
  SampledField s = SampledField::zeros(w, m);
  for (int j = 0; j < w.n_points; ++j) {
    const Jet jet = soliton_jet(p, t, w.x(j), m);
    s.values[j] = jet.value;
    for (int k = 1; k <= m; ++k) s.derivs[k - 1][j] = jet.dx[k - 1];
  }
  return s;
}

/// Trapezoid rule on the periodic window (h * sum).
inline double integrate(const Window& w, std::span<const double> f) {
  double acc = 0.0;
  for (double v : f) acc += v;
  return acc * w.spacing();
}

/// Sobolev norm with Fourier weight (1 + k^2)^s on the window.
inline double sobolev_norm(const Window& w, std::span<const double> u, int s) {
  if (s < 0 || s > 4) throw DomainError("sobolev_norm: s out of range");
  const Fft fft(w.n_points);
  const auto uh = fft.forward(u);
  const int n = w.n_points;
  double acc = 0.0;
  for (int j = 0; j <= n / 2; ++j) {
    const double k = w.wavenumber(j);
    const double weight = std::pow(1.0 + k * k, s);
    const double mult = (j == 0 || j == n / 2) ? 1.0 : 2.0;
    acc += mult * weight * std::norm(uh[j]);
  }
  // Parseval: integral |u|^2 = (L / n^2) sum |u_hat|^2.
  return std::sqrt(acc * w.length() / (static_cast<double>(n) * n));
}

inline double sobolev_norm(const SampledField& f, int s) { return sobolev_norm(f.window, f.values, s); }

/// H^2 inner product matching sobolev_norm(., 2).
inline double h2_inner(const Window& w, std::span<const double> u, std::span<const double> v) {
  const Fft fft(w.n_points);
  const auto uh = fft.forward(u);
  const auto vh = fft.forward(v);
  const int n = w.n_points;
  double acc = 0.0;
  for (int j = 0; j <= n / 2; ++j) {
    const double k = w.wavenumber(j);
    const double weight = (1.0 + k * k) * (1.0 + k * k);
    const double mult = (j == 0 || j == n / 2) ? 1.0 : 2.0;
    acc += mult * weight * std::real(uh[j] * std::conj(vh[j]));
  }
  return acc * w.length() / (static_cast<double>(n) * n);
}

}  // namespace mkdv
