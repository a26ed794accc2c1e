#include "slipnet/slip_risk.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "slipnet/error.hpp"

namespace slipnet {

double slip_ratio(double v_x, double v_ref) {
  if (!(v_ref > 0.0)) throw InvalidArgument("slip_ratio: v_ref must be > 0");
  double s;
  if (v_x <= v_ref) {
    // driving: positive when slower than commanded
    s = (v_ref - v_x) / v_ref;
  } else {
    // braking: travelling faster than commanded, reported negative
    s = -(v_x - v_ref) / v_ref;
  }
  return std::clamp(s, -1.0, 1.0);
}

SlipRiskBand::SlipRiskBand(int index) : index_(index) {
  if (index < 1 || index > kCount) throw InvalidArgument("slip risk band index must be 1..5");
}

double SlipRiskBand::lower() const { return index_ == 1 ? 0.0 : kUpperBounds[index_ - 2]; }

double SlipRiskBand::upper() const { return index_ == kCount ? 1.0 : kUpperBounds[index_ - 1]; }

SlipRiskBand classify_band(double s) {
  if (!(s >= 0.0)) throw InvalidArgument("classify_band: slip must be >= 0");
  for (int i = 0; i < SlipRiskBand::kCount - 1; ++i)
    if (s <= SlipRiskBand::kUpperBounds[i]) return SlipRiskBand(i + 1);
  return SlipRiskBand(SlipRiskBand::kCount);
}

GaussianBasisModel::GaussianBasisModel(std::vector<double> centers, double scale,
                                       std::vector<double> weights)
    : centers_(std::move(centers)), scale_(scale), weights_(std::move(weights)) {
  if (!(scale_ > 0.0) || !std::isfinite(scale_))
    throw InvalidArgument("Gaussian basis scale must be finite and > 0");
  if (weights_.size() != centers_.size() + 1)
    throw InvalidArgument("Gaussian basis model needs one weight per center plus a bias");
  for (std::size_t j = 1; j < centers_.size(); ++j)
    if (!(centers_[j] > centers_[j - 1]))
      throw InvalidArgument("Gaussian basis centers must be strictly increasing");
  for (double w : weights_)
    if (!std::isfinite(w)) throw InvalidArgument("Gaussian basis weights must be finite");
  if (!centers_.empty()) {
    range_min_ = centers_.front();
    range_max_ = centers_.back();
  }
}

GaussianBasisModel GaussianBasisModel::constant(double value) {
  return GaussianBasisModel({}, 1.0, {value});
}

void GaussianBasisModel::set_range(double lo, double hi) {
  if (!(hi >= lo)) throw InvalidArgument("model range must satisfy lo <= hi");
  range_min_ = lo;
  range_max_ = hi;
}

std::vector<double> GaussianBasisModel::features(double v) const {
  std::vector<double> phi(weights_.size());
  phi[0] = 1.0;
  const double denom = 2.0 * scale_ * scale_;
  for (std::size_t j = 0; j < centers_.size(); ++j) {
    const double d = v - centers_[j];
    phi[j + 1] = std::exp(-d * d / denom);
  }
  return phi;
}

double GaussianBasisModel::evaluate(double v) const {
  double y = weights_[0];
  const double denom = 2.0 * scale_ * scale_;
  for (std::size_t j = 0; j < centers_.size(); ++j) {
    const double d = v - centers_[j];
    y += weights_[j + 1] * std::exp(-d * d / denom);
  }
  return y;
}

double GaussianBasisModel::derivative(double v) const {
  double dy = 0.0;
  const double t2 = scale_ * scale_;
  for (std::size_t j = 0; j < centers_.size(); ++j) {
    const double d = v - centers_[j];
    dy += weights_[j + 1] * std::exp(-d * d / (2.0 * t2)) * (-d / t2);
  }
  return dy;
}

std::vector<double> uniform_centers(int basis_count, double lo, double hi) {
  const int n = basis_count - 1;
  std::vector<double> c;
  if (n <= 0) return c;
  if (n == 1) return {0.5 * (lo + hi)};
  c.reserve(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) c.push_back(lo + (hi - lo) * j / (n - 1));
  return c;
}

double default_scale(int basis_count, double lo, double hi) {
  return (hi - lo) / basis_count * 0.8;
}

GaussianBasisModel fit_basis_regression(std::span<const SpeedSlip> samples,
                                        const BasisFitOptions& options) {
  const int m = options.basis_count;
  if (m < 1) throw InvalidArgument("basis count must be >= 1");
  if (samples.size() < static_cast<std::size_t>(m))
    throw InsufficientData("basis regression needs at least " + std::to_string(m) +
                           " samples, got " + std::to_string(samples.size()));
  if (options.scale && !(*options.scale > 0.0))
    throw InvalidArgument("basis scale t must be > 0");

  auto [lo_it, hi_it] = std::minmax_element(
      samples.begin(), samples.end(),
      [](const SpeedSlip& a, const SpeedSlip& b) { return a.speed < b.speed; });
  const double lo = lo_it->speed;
  const double hi = hi_it->speed;
  if (m > 1 && !(hi > lo))
    throw DegenerateDesign("basis regression: all sample speeds are equal");

  std::vector<double> centers =
      options.centers ? *options.centers : uniform_centers(m, lo, hi);
  if (centers.size() != static_cast<std::size_t>(m - 1))
    throw InvalidArgument("explicit centers must number basis_count - 1");
  const double scale = options.scale ? *options.scale : (m > 1 ? default_scale(m, lo, hi) : 1.0);

  GaussianBasisModel shape(centers, scale, std::vector<double>(static_cast<std::size_t>(m), 0.0));

  // Solve the ridge normal equations (Phi^T Phi + lambda D) w = Phi^T s via
  // QR on the stacked system [Phi; sqrt(lambda) D] w = [s; 0], which has the
  // same minimizer without squaring the condition number. D is the identity
  // with the bias entry zeroed, so constants pass through unshrunk.
  const auto n = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + m, m);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n + m);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto phi = shape.features(samples[static_cast<std::size_t>(i)].speed);
    for (int j = 0; j < m; ++j) a(i, j) = phi[static_cast<std::size_t>(j)];
    b(i) = samples[static_cast<std::size_t>(i)].slip;
  }
  const double root_lambda = std::sqrt(options.ridge);
  for (int j = 1; j < m; ++j) a(n + j, j) = root_lambda;

  const Eigen::VectorXd w = a.colPivHouseholderQr().solve(b);
  std::vector<double> weights(w.data(), w.data() + w.size());

  GaussianBasisModel model(std::move(centers), scale, std::move(weights));
  model.set_range(lo, hi);

  FitDiagnostics diag;
  diag.n = samples.size();
  double sse = 0.0;
  for (const auto& s : samples) {
    const double r = s.slip - model.evaluate(s.speed);
    sse += r * r;
  }
  diag.objective = 0.5 * sse;
  diag.residual_std = std::sqrt(sse / static_cast<double>(samples.size()));
  model.set_diagnostics(diag);
  return model;
}

double regression_objective(const GaussianBasisModel& model, std::span<const SpeedSlip> samples,
                            double ridge) {
  double sse = 0.0;
  for (const auto& s : samples) {
    const double r = s.slip - model.evaluate(s.speed);
    sse += r * r;
  }
  double wsq = 0.0;
  const auto& w = model.weights();
  for (std::size_t j = 1; j < w.size(); ++j) wsq += w[j] * w[j];
  return 0.5 * sse + 0.5 * ridge * wsq;
}

SlipPrediction predict_slip(const GaussianBasisModel& model, double v) {
  const double raw = model.evaluate(v);
  return {raw, std::clamp(raw, 0.0, 1.0)};
}

double mae(std::span<const double> estimates, std::span<const double> truths) {
  if (estimates.empty()) throw InvalidArgument("mae: inputs must be non-empty");
  if (estimates.size() != truths.size()) throw InvalidArgument("mae: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) acc += std::abs(estimates[i] - truths[i]);
  return acc / static_cast<double>(estimates.size());
}

EvalReport evaluate(std::span<const double> estimates, std::span<const double> truths) {
  EvalReport r;
  r.mae = mae(estimates, truths);
  r.n = estimates.size();
  r.residuals.reserve(r.n);
  for (std::size_t i = 0; i < r.n; ++i) r.residuals.push_back(estimates[i] - truths[i]);
  return r;
}

double shift_threshold(const GaussianBasisModel& model, double sigma, double v) {
  if (!(sigma >= 0.0)) throw InvalidArgument("shift_threshold: sigma must be >= 0");
  return predict_slip(model, v - sigma).clamped;
}

ThresholdShiftDiagnostics shift_diagnostics(const GaussianBasisModel& model, double sigma,
                                            double v) {
  return {predict_slip(model, v).clamped, shift_threshold(model, sigma, v),
          predict_slip(model, v + sigma).clamped};
}

std::optional<double> speed_for_band_boundary(const GaussianBasisModel& model, double boundary,
                                              double grid_step) {
  if (!(grid_step > 0.0)) throw InvalidArgument("grid step must be > 0");
  const double lo = model.range_min();
  const double hi = model.range_max();
  auto reached = [&](double v) { return predict_slip(model, v).clamped >= boundary; };

  if (reached(lo)) return lo;
  double prev = lo;
  const auto steps = static_cast<long>(std::ceil((hi - lo) / grid_step));
  for (long k = 1; k <= steps; ++k) {
    const double v = std::min(hi, lo + static_cast<double>(k) * grid_step);
    if (reached(v)) {
      double a = prev;
      double b = v;
      for (int it = 0; it < 60 && b - a > 1e-12; ++it) {
        const double mid = 0.5 * (a + b);
        if (reached(mid))
          b = mid;
        else
          a = mid;
      }
      return b;
    }
    prev = v;
  }
  return std::nullopt;
}

}  // namespace slipnet
