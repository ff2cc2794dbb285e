#pragma once

#include <functional>
#include <vector>

namespace hqnet {

struct LinearFit {
  std::vector<double> coef;
  std::vector<std::vector<double>> covariance;
  std::vector<double> model;  // fitted mean per observation
  double chi2 = 0.0;          // Pearson, against the fitted mean
  int dof = 0;
};

// Linear model y ~ sum_j coef_j * columns[j] with Poisson variance; iteratively
// reweighted by 1/mean. Throws eigen_failure when the design is singular.
LinearFit poisson_linear_fit(const std::vector<std::vector<double>>& columns, const std::vector<double>& y,
                             int iterations = 12);

struct MinimizeResult {
  std::vector<double> x;
  double value = 0.0;
  int evaluations = 0;
};

MinimizeResult nelder_mead(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
                           const std::vector<double>& step, double tolerance = 1e-10, int max_evaluations = 4000);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double r_squared = 1.0;
};

// Least-squares line; with sigma given, weights 1/sigma^2 and a slope error from
// those sigmas, otherwise from the residual scatter.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& sigma = {});

// Inverse of a small symmetric positive-definite matrix; throws eigen_failure.
std::vector<std::vector<double>> invert_spd(const std::vector<std::vector<double>>& m);

}  // namespace hqnet
