#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace slipnet {

// Longitudinal slip ratio. Positive when the rover travels slower than
// commanded (driving), negative when faster (braking). Clamped to [-1, 1].
// Throws InvalidArgument when v_ref <= 0.
double slip_ratio(double v_x, double v_ref);

// Five risk bands with right-closed boundaries:
//   1: (0, 0.2]  2: (0.2, 0.4]  3: (0.4, 0.6]  4: (0.6, 0.8]  5: (0.8, 1)
// s = 0 falls in band 1, s >= 1 in band 5.
class SlipRiskBand {
 public:
  static constexpr int kCount = 5;
  static constexpr double kUpperBounds[kCount - 1] = {0.2, 0.4, 0.6, 0.8};

  constexpr SlipRiskBand() = default;
  explicit SlipRiskBand(int index);

  constexpr int index() const { return index_; }
  // Lower/upper slip boundary of this band.
  double lower() const;
  double upper() const;

  auto operator<=>(const SlipRiskBand&) const = default;

 private:
  int index_ = 1;
};

// Throws InvalidArgument for s < 0 (or NaN).
SlipRiskBand classify_band(double s);

struct FitDiagnostics {
  double objective = 0.0;     // 1/2 * sum of squared residuals (no ridge term)
  double residual_std = 0.0;  // RMS residual
  std::size_t n = 0;
};

// y(v) = w_0 + sum_{j=1}^{M-1} w_j exp(-(v - mu_j)^2 / (2 t^2))
class GaussianBasisModel {
 public:
  GaussianBasisModel() = default;
  GaussianBasisModel(std::vector<double> centers, double scale, std::vector<double> weights);

  // Bias-only model y(v) = value.
  static GaussianBasisModel constant(double value);

  std::size_t basis_count() const { return weights_.size(); }
  const std::vector<double>& centers() const { return centers_; }
  double scale() const { return scale_; }
  const std::vector<double>& weights() const { return weights_; }

  // Speed interval covered by the fitting data; defaults to the centers' span.
  double range_min() const { return range_min_; }
  double range_max() const { return range_max_; }
  void set_range(double lo, double hi);

  const FitDiagnostics& diagnostics() const { return diagnostics_; }
  void set_diagnostics(const FitDiagnostics& d) { diagnostics_ = d; }

  // Basis vector phi(v) of length M; phi_0 = 1.
  std::vector<double> features(double v) const;
  double evaluate(double v) const;
  double derivative(double v) const;

 private:
  std::vector<double> centers_;
  double scale_ = 1.0;
  std::vector<double> weights_{0.0};
  double range_min_ = 0.0;
  double range_max_ = 0.0;
  FitDiagnostics diagnostics_{};
};

struct SpeedSlip {
  double speed = 0.0;
  double slip = 0.0;
};

inline constexpr double kRidgeLambda = 1e-8;

struct BasisFitOptions {
  int basis_count = 8;                    // M
  std::optional<double> scale;            // t; default (range / M) * 0.8
  std::optional<std::vector<double>> centers;  // explicit mu_1..mu_{M-1}
  double ridge = kRidgeLambda;
};

// Uniform centers over [lo, hi]: M-1 points including both ends.
std::vector<double> uniform_centers(int basis_count, double lo, double hi);
double default_scale(int basis_count, double lo, double hi);

// Least-squares fit of E(w) = 1/2 sum (s - w^T phi(v))^2 + ridge/2 sum_{j>=1} w_j^2.
// The bias weight w_0 is not penalized.
// Throws InsufficientData (n < M) or DegenerateDesign (all speeds equal).
GaussianBasisModel fit_basis_regression(std::span<const SpeedSlip> samples,
                                        const BasisFitOptions& options = {});

// Ridge-regularized objective of a model on data; used by the fit oracles.
double regression_objective(const GaussianBasisModel& model,
                            std::span<const SpeedSlip> samples,
                            double ridge = kRidgeLambda);

struct SlipPrediction {
  double raw = 0.0;
  double clamped = 0.0;  // raw clamped to [0, 1]
};

SlipPrediction predict_slip(const GaussianBasisModel& model, double v);

// Mean absolute error. Throws InvalidArgument on empty or mismatched input.
double mae(std::span<const double> estimates, std::span<const double> truths);

struct EvalReport {
  double mae = 0.0;
  std::size_t n = 0;
  std::vector<double> residuals;  // estimate - truth
};

EvalReport evaluate(std::span<const double> estimates, std::span<const double> truths);

// Risk curve shifted along the speed axis by the speed-estimation MAE:
// f(v - sigma), clamped to [0, 1].
double shift_threshold(const GaussianBasisModel& model, double sigma, double v);

struct ThresholdShiftDiagnostics {
  double nominal = 0.0;  // f(v)
  double lower = 0.0;    // f(v - sigma)
  double upper = 0.0;    // f(v + sigma)
};

ThresholdShiftDiagnostics shift_diagnostics(const GaussianBasisModel& model, double sigma,
                                            double v);

// Smallest speed in the model's fitted range whose clamped prediction reaches
// `boundary`: scanned on a 1e-3 m/s grid, then refined by bisection inside
// the first bracketing step. nullopt when the boundary is never reached.
std::optional<double> speed_for_band_boundary(const GaussianBasisModel& model, double boundary,
                                              double grid_step = 1e-3);

}  // namespace slipnet
