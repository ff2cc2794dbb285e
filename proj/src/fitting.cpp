#include "hqnet/fitting.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hqnet/error.h"

namespace hqnet {

namespace {

Eigen::MatrixXd to_matrix(const std::vector<std::vector<double>>& m) {
  Eigen::MatrixXd out(m.size(), m.size());
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m.size(); ++j) out(i, j) = m[i][j];
  return out;
}

std::vector<std::vector<double>> from_matrix(const Eigen::MatrixXd& m) {
  std::vector<std::vector<double>> out(m.rows(), std::vector<double>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  return out;
}

}  // namespace

std::vector<std::vector<double>> invert_spd(const std::vector<std::vector<double>>& m) {
  const Eigen::MatrixXd a = to_matrix(m);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.vectorD().minCoeff() <= 0.0)
    throw Error(ErrorCode::eigen_failure, "matrix is not positive definite");
  return from_matrix(ldlt.solve(Eigen::MatrixXd::Identity(a.rows(), a.cols())));
}

LinearFit poisson_linear_fit(const std::vector<std::vector<double>>& columns, const std::vector<double>& y,
                             int iterations) {
  const auto n = static_cast<Eigen::Index>(y.size());
  const auto p = static_cast<Eigen::Index>(columns.size());
  if (p == 0 || n < p) throw Error(ErrorCode::insufficient_statistics, "fewer observations than parameters");
  Eigen::MatrixXd x(n, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    if (static_cast<Eigen::Index>(columns[j].size()) != n)
      throw Error(ErrorCode::domain_error, "design column length mismatch");
    for (Eigen::Index i = 0; i < n; ++i) x(i, j) = columns[j][i];
  }
  const Eigen::Map<const Eigen::VectorXd> obs(y.data(), n);
  // Variance floor keeps zero-count bins from dominating the weights.
  const double floor = std::max(1e-3, 1e-3 * obs.mean());
  Eigen::VectorXd var = obs.cwiseMax(1.0);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd fisher(p, p);
  for (int it = 0; it < std::max(1, iterations); ++it) {
    const Eigen::VectorXd w = var.cwiseInverse();
    fisher = x.transpose() * w.asDiagonal() * x;
    const Eigen::VectorXd rhs = x.transpose() * w.asDiagonal() * obs;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(fisher);
    if (ldlt.info() != Eigen::Success || ldlt.vectorD().cwiseAbs().minCoeff() <= 1e-300)
      throw Error(ErrorCode::eigen_failure, "singular design matrix");
    const Eigen::VectorXd next = ldlt.solve(rhs);
    const bool settled = it > 0 && (next - beta).norm() <= 1e-12 * (1.0 + next.norm());
    beta = next;
    var = (x * beta).cwiseMax(floor);
    if (settled) break;
  }
  fisher = x.transpose() * var.cwiseInverse().asDiagonal() * x;
  LinearFit out;
  out.coef.assign(beta.data(), beta.data() + p);
  out.covariance = from_matrix(fisher.ldlt().solve(Eigen::MatrixXd::Identity(p, p)));
  const Eigen::VectorXd mu = x * beta;
  out.model.assign(mu.data(), mu.data() + n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = std::max(mu(i), floor);
    out.chi2 += (obs(i) - mu(i)) * (obs(i) - mu(i)) / m;
  }
  out.dof = static_cast<int>(n - p);
  return out;
}

MinimizeResult nelder_mead(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
                           const std::vector<double>& step, double tolerance, int max_evaluations) {
  const std::size_t n = x0.size();
  std::vector<std::vector<double>> simplex(n + 1, x0);
  for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += step[i];
  std::vector<double> values(n + 1);
  int evaluations = 0;
  auto eval = [&](const std::vector<double>& x) {
    ++evaluations;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::max();
  };
  for (std::size_t i = 0; i <= n; ++i) values[i] = eval(simplex[i]);

  std::vector<std::size_t> order(n + 1);
  while (evaluations < max_evaluations) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[n - 1];
    if (std::abs(values[worst] - values[best]) <= tolerance * (std::abs(values[best]) + tolerance)) break;

    std::vector<double> centroid(n, 0.0);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[order[k]][i] / static_cast<double>(n);
    auto along = [&](double t) {
      std::vector<double> x(n);
      for (std::size_t i = 0; i < n; ++i) x[i] = centroid[i] + t * (simplex[worst][i] - centroid[i]);
      return x;
    };
    auto reflected = along(-1.0);
    const double fr = eval(reflected);
    if (fr < values[best]) {
      auto expanded = along(-2.0);
      const double fe = eval(expanded);
      if (fe < fr) {
        simplex[worst] = expanded;
        values[worst] = fe;
      } else {
        simplex[worst] = reflected;
        values[worst] = fr;
      }
    } else if (fr < values[second]) {
      simplex[worst] = reflected;
      values[worst] = fr;
    } else {
      auto contracted = fr < values[worst] ? along(-0.5) : along(0.5);
      const double fc = eval(contracted);
      if (fc < std::min(fr, values[worst])) {
        simplex[worst] = contracted;
        values[worst] = fc;
      } else {
        for (std::size_t k = 1; k <= n; ++k) {
          auto& x = simplex[order[k]];
          for (std::size_t i = 0; i < n; ++i) x[i] = simplex[best][i] + 0.5 * (x[i] - simplex[best][i]);
          values[order[k]] = eval(x);
        }
      }
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
  return {simplex[best], values[best], evaluations};
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& sigma) {
  const std::size_t n = x.size();
  if (n != y.size() || (!sigma.empty() && sigma.size() != n))
    throw Error(ErrorCode::domain_error, "line fit inputs differ in length");
  if (n < 2) throw Error(ErrorCode::insufficient_statistics, "line fit needs two points");
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = sigma.empty() ? 1.0 : 1.0 / (sigma[i] * sigma[i]);
    sw += w;
    sx += w * x[i];
    sy += w * y[i];
    sxx += w * x[i] * x[i];
    sxy += w * x[i] * y[i];
  }
  const double det = sw * sxx - sx * sx;
  if (!(det > 0.0)) throw Error(ErrorCode::division_by_zero, "line fit abscissae are all equal");
  LineFit out;
  out.slope = (sw * sxy - sx * sy) / det;
  out.intercept = (sxx * sy - sx * sxy) / det;
  double ss_res = 0.0;
  double ss_tot = 0.0;
  const double mean_y = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - out.slope * x[i] - out.intercept;
    ss_res += r * r;
    ss_tot += (y[i] - mean_y) * (y[i] - mean_y);
  }
  out.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  if (!sigma.empty()) {
    out.slope_stderr = std::sqrt(sw / det);
  } else if (n > 2) {
    out.slope_stderr = std::sqrt(ss_res / static_cast<double>(n - 2) * sw / det);
  }
  return out;
}

}  // namespace hqnet
