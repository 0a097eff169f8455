#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ddosnet/analysis.hpp"
#include "ddosnet/baselines.hpp"
#include "ddosnet/errors.hpp"

namespace ddosnet::analysis {

namespace {

double off_diagonal_norm(const Matrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      if (i != j) s += a(i, j) * a(i, j);
    }
  }
  return std::sqrt(s);
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.values()) s += v * v;
  return std::sqrt(s);
}

}  // namespace

EigenResult jacobi_eigen(Matrix a, double tolerance, std::size_t max_sweeps) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw DataError("jacobi_eigen: matrix is not square");
  Matrix v(n, n);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

  // Tolerance is relative to the matrix norm so raw-unit covariances converge.
  const double scale = std::max(frobenius_norm(a), std::numeric_limits<double>::min());
  std::size_t sweep = 0;
  while (sweep < max_sweeps && off_diagonal_norm(a) > tolerance * scale) {
    ++sweep;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });
  EigenResult result{Vector(n), Matrix(n, n), sweep};
  for (std::size_t k = 0; k < n; ++k) {
    result.values[k] = a(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) result.vectors(i, k) = v(i, order[k]);
  }
  return result;
}

PcaModel pca_fit(const Matrix& data, std::size_t k) {
  const std::size_t n = data.rows();
  const std::size_t d = data.cols();
  if (k == 0 || k > d) throw ConfigError("pca_fit: k must be in [1, feature count]");
  if (n < 2) throw DataError("pca_fit: need at least two records");

  PcaModel model;
  model.mean.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) model.mean[j] += data(i, j);
  }
  for (double& m : model.mean) m /= static_cast<double>(n);

  Matrix cov(d, d);
  Vector centered(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) centered[j] = data(i, j) - model.mean[j];
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = a; b < d; ++b) cov(a, b) += centered[a] * centered[b];
    }
  }
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a; b < d; ++b) {
      cov(a, b) /= static_cast<double>(n - 1);
      cov(b, a) = cov(a, b);
    }
  }
  for (std::size_t a = 0; a < d; ++a) model.total_variance += cov(a, a);

  const auto eig = jacobi_eigen(cov);
  model.components = Matrix(k, d);
  model.explained_variance.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    model.explained_variance[c] = eig.values[c];
    std::size_t peak = 0;
    for (std::size_t j = 1; j < d; ++j) {
      if (std::abs(eig.vectors(j, c)) > std::abs(eig.vectors(peak, c))) peak = j;
    }
    const double sign = eig.vectors(peak, c) < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < d; ++j) model.components(c, j) = sign * eig.vectors(j, c);
  }
  return model;
}

PcaModel pca_fit(const Dataset& data, std::size_t k) {
  return pca_fit(baselines::feature_matrix(data), k);
}

Matrix pca_transform(const PcaModel& model, const Matrix& data) {
  const std::size_t d = model.mean.size();
  if (data.cols() != d) throw DataError("pca_transform: feature count mismatch");
  Matrix out(data.rows(), model.k());
  for (std::size_t i = 0; i < data.rows(); ++i) {
    for (std::size_t c = 0; c < model.k(); ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += (data(i, j) - model.mean[j]) * model.components(c, j);
      out(i, c) = s;
    }
  }
  return out;
}

Matrix pca_inverse(const PcaModel& model, const Matrix& reduced) {
  if (reduced.cols() != model.k()) throw DataError("pca_inverse: component count mismatch");
  const std::size_t d = model.mean.size();
  Matrix out(reduced.rows(), d);
  for (std::size_t i = 0; i < reduced.rows(); ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      double s = model.mean[j];
      for (std::size_t c = 0; c < model.k(); ++c) s += reduced(i, c) * model.components(c, j);
      out(i, j) = s;
    }
  }
  return out;
}

double andrews_value(std::span<const double> x, double t) {
  if (x.empty()) return 0.0;
  double f = x[0] / std::sqrt(2.0);
  for (std::size_t i = 1; i < x.size(); ++i) {
    const double harmonic = static_cast<double>((i + 1) / 2);
    f += x[i] * (i % 2 == 1 ? std::sin(harmonic * t) : std::cos(harmonic * t));
  }
  return f;
}

}  // namespace ddosnet::analysis
