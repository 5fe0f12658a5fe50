#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dsoft {

/// Row-major dense matrix of doubles.
struct Matrix {
  std::size_t n = 0;
  std::size_t q = 0;
  std::vector<double> v;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols)
      : n(rows), q(cols), v(rows * cols, 0.0) {}

  double operator()(std::size_t i, std::size_t j) const { return v[i * q + j]; }
  double& operator()(std::size_t i, std::size_t j) { return v[i * q + j]; }
  std::span<const double> row(std::size_t i) const {
    return {v.data() + i * q, q};
  }
  std::span<double> row(std::size_t i) { return {v.data() + i * q, q}; }
};

/// Supervised dataset: features, response and (for simulated data) the true
/// predictors the response was generated from.
struct Dataset {
  Matrix X;
  std::vector<double> y;
  std::vector<std::string> feature_names;
  std::vector<double> eta_mu_true;     // empty unless simulated
  std::vector<double> eta_sigma_true;  // empty unless simulated

  std::size_t n() const { return X.n; }
  std::size_t q() const { return X.q; }

  Dataset subset(const std::vector<std::size_t>& rows) const {
    Dataset out;
    out.X = Matrix(rows.size(), X.q);
    out.y.resize(rows.size());
    out.feature_names = feature_names;
    if (!eta_mu_true.empty()) out.eta_mu_true.resize(rows.size());
    if (!eta_sigma_true.empty()) out.eta_sigma_true.resize(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const std::size_t i = rows[r];
      if (i >= X.n) throw std::out_of_range("dataset subset: row out of range");
      for (std::size_t j = 0; j < X.q; ++j) out.X(r, j) = (*this).X(i, j);
      out.y[r] = y[i];
      if (!eta_mu_true.empty()) out.eta_mu_true[r] = eta_mu_true[i];
      if (!eta_sigma_true.empty()) out.eta_sigma_true[r] = eta_sigma_true[i];
    }
    return out;
  }
};

/// Per-column standardization (mean 0, sd 1) with statistics frozen at fit
/// time; constant columns keep sd 1 so they pass through unchanged.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> sd;

  void fit(const Matrix& X) {
    mean.assign(X.q, 0.0);
    sd.assign(X.q, 1.0);
    if (X.n == 0) return;
    for (std::size_t j = 0; j < X.q; ++j) {
      double m = 0.0;
      for (std::size_t i = 0; i < X.n; ++i) m += X(i, j);
      m /= static_cast<double>(X.n);
      double s2 = 0.0;
      for (std::size_t i = 0; i < X.n; ++i) {
        const double d = X(i, j) - m;
        s2 += d * d;
      }
      s2 /= static_cast<double>(X.n);
      mean[j] = m;
      sd[j] = s2 > 0.0 ? std::sqrt(s2) : 1.0;
    }
  }

  Matrix apply(const Matrix& X) const {
    if (X.q != mean.size())
      throw std::invalid_argument("standardizer: column count mismatch");
    Matrix out(X.n, X.q);
    for (std::size_t i = 0; i < X.n; ++i)
      for (std::size_t j = 0; j < X.q; ++j)
        out(i, j) = (X(i, j) - mean[j]) / sd[j];
    return out;
  }
};

}  // namespace dsoft
