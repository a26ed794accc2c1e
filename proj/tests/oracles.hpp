#pragma once

// Reference computations written independently of the library, used as
// test oracles.

#include <cmath>
#include <random>
#include <span>
#include <vector>

#include "slipnet/slip_risk.hpp"

namespace oracle {

inline std::vector<double> phi(double v, const std::vector<double>& centers, double t) {
  std::vector<double> f{1.0};
  for (double mu : centers) f.push_back(std::exp(-(v - mu) * (v - mu) / (2.0 * t * t)));
  return f;
}

inline double objective(const std::vector<double>& w, std::span<const slipnet::SpeedSlip> data,
                        const std::vector<double>& centers, double t, double ridge) {
  double e = 0.0;
  for (const auto& p : data) {
    const auto f = phi(p.speed, centers, t);
    double y = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) y += w[j] * f[j];
    e += 0.5 * (p.slip - y) * (p.slip - y);
  }
  for (std::size_t j = 1; j < w.size(); ++j) e += 0.5 * ridge * w[j] * w[j];
  return e;
}

// Plain gradient descent from zero weights with step 1/L, where L is the
// largest eigenvalue of the Hessian found by power iteration.
inline std::vector<double> gradient_descent(std::span<const slipnet::SpeedSlip> data,
                                            const std::vector<double>& centers, double t,
                                            double ridge, int steps) {
  const std::size_t m = centers.size() + 1;
  std::vector<std::vector<double>> rows;
  for (const auto& p : data) rows.push_back(phi(p.speed, centers, t));
  auto hess_mul = [&](const std::vector<double>& x) {
    std::vector<double> out(m, 0.0);
    for (const auto& r : rows) {
      double d = 0.0;
      for (std::size_t j = 0; j < m; ++j) d += r[j] * x[j];
      for (std::size_t j = 0; j < m; ++j) out[j] += r[j] * d;
    }
    for (std::size_t j = 1; j < m; ++j) out[j] += ridge * x[j];
    return out;
  };
  std::vector<double> x(m, 1.0);
  double lmax = 0.0;
  for (int it = 0; it < 200; ++it) {
    auto y = hess_mul(x);
    double n = 0.0;
    for (double v : y) n += v * v;
    n = std::sqrt(n);
    lmax = n;
    for (std::size_t j = 0; j < m; ++j) x[j] = y[j] / n;
  }
  const double step = 1.0 / (1.01 * lmax);
  std::vector<double> w(m, 0.0);
  for (int it = 0; it < steps; ++it) {
    std::vector<double> g(m, 0.0);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      double y = 0.0;
      for (std::size_t j = 0; j < m; ++j) y += w[j] * rows[i][j];
      const double r = y - data[i].slip;
      for (std::size_t j = 0; j < m; ++j) g[j] += r * rows[i][j];
    }
    for (std::size_t j = 0; j < m; ++j) w[j] -= step * (g[j] + (j > 0 ? ridge * w[j] : 0.0));
  }
  return w;
}

inline double planted(double v, double s_max = 0.5, double rise = 2.0) {
  return v <= 0.0 ? 0.0 : s_max * (1.0 - std::exp(-rise * v));
}

// Noisy planted-curve samples with speeds uniform on [lo, hi].
inline std::vector<slipnet::SpeedSlip> planted_samples(std::size_t n, double noise,
                                                       std::uint64_t seed, double lo = 0.1,
                                                       double hi = 0.5) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::normal_distribution<double> e(0.0, noise);
  std::vector<slipnet::SpeedSlip> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = u(rng);
    out.push_back({v, planted(v) + (noise > 0.0 ? e(rng) : 0.0)});
  }
  return out;
}

inline double gaussian_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace oracle
