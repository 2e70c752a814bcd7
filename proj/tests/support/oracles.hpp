#pragma once

// Independent reference implementations used to check the library. They
// favor obviousness over speed and share no code with core/.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "cfk/geometry.hpp"
#include "cfk/image.hpp"

namespace oracle {

using Tri = std::array<std::size_t, 3>;

// Triangle with counter-clockwise order, smallest index first.
inline Tri canonical(std::size_t a, std::size_t b, std::size_t c, const std::vector<cfk::Point2>& p) {
  const auto cross = [&](std::size_t i, std::size_t j, std::size_t k) {
    return (p[j].x - p[i].x) * (p[k].y - p[i].y) - (p[j].y - p[i].y) * (p[k].x - p[i].x);
  };
  if (cross(a, b, c) < 0) std::swap(b, c);
  Tri t{a, b, c};
  while (t[0] > t[1] || t[0] > t[2]) t = {t[1], t[2], t[0]};
  return t;
}

/// Every triple whose circumcircle contains no other point strictly inside.
/// Valid for point sets without four cocircular points.
inline std::vector<Tri> brute_force_delaunay(const std::vector<cfk::Point2>& p) {
  std::vector<Tri> out;
  const std::size_t n = p.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      for (std::size_t k = j + 1; k < n; ++k) {
        const long double ax = p[i].x, ay = p[i].y, bx = p[j].x, by = p[j].y, cx = p[k].x, cy = p[k].y;
        const long double d = 2 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by));
        if (std::fabs(static_cast<double>(d)) < 1e-12) continue;
        const long double a2 = ax * ax + ay * ay, b2 = bx * bx + by * by, c2 = cx * cx + cy * cy;
        const long double ux = (a2 * (by - cy) + b2 * (cy - ay) + c2 * (ay - by)) / d;
        const long double uy = (a2 * (cx - bx) + b2 * (ax - cx) + c2 * (bx - ax)) / d;
        const long double r2 = (ax - ux) * (ax - ux) + (ay - uy) * (ay - uy);
        bool empty = true;
        for (std::size_t m = 0; m < n && empty; ++m) {
          if (m == i || m == j || m == k) continue;
          const long double dx = p[m].x - ux, dy = p[m].y - uy;
          if (dx * dx + dy * dy < r2 * (1 - 1e-12L)) empty = false;
        }
        if (empty) out.push_back(canonical(i, j, k, p));
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// 4-neighbor LBP by direct comparison with replicated borders.
inline std::vector<int> lbp_reference(const cfk::GrayImage& img) {
  std::vector<int> codes(static_cast<std::size_t>(img.width) * img.height);
  const auto px = [&](int x, int y) {
    x = std::clamp(x, 0, img.width - 1);
    y = std::clamp(y, 0, img.height - 1);
    return static_cast<int>(img.pixels[static_cast<std::size_t>(y) * img.width + x]);
  };
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const int c = px(x, y);
      int code = 0;
      if (px(x, y - 1) >= c) code |= 1;
      if (px(x + 1, y) >= c) code |= 2;
      if (px(x, y + 1) >= c) code |= 4;
      if (px(x - 1, y) >= c) code |= 8;
      codes[static_cast<std::size_t>(y) * img.width + x] = code;
    }
  }
  return codes;
}

struct LdaClosedForm {
  Eigen::VectorXd w;
  double b = 0.0;
};

/// Pooled-covariance LDA with equal priors, written out with explicit sums
/// and solved by full-pivot LU.
inline LdaClosedForm lda_closed_form(const Eigen::MatrixXd& X, const std::vector<int>& labels) {
  const Eigen::Index p = X.cols();
  Eigen::VectorXd m0 = Eigen::VectorXd::Zero(p), m1 = Eigen::VectorXd::Zero(p);
  double n0 = 0, n1 = 0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    if (labels[static_cast<std::size_t>(i)] == 0) {
      m0 += X.row(i).transpose();
      ++n0;
    } else {
      m1 += X.row(i).transpose();
      ++n1;
    }
  }
  m0 /= n0;
  m1 /= n1;
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const Eigen::VectorXd d = X.row(i).transpose() - (labels[static_cast<std::size_t>(i)] == 0 ? m0 : m1);
    S += d * d.transpose();
  }
  S /= (n0 + n1 - 2);
  LdaClosedForm out;
  out.w = S.fullPivLu().solve(m1 - m0);
  out.b = -0.5 * out.w.dot(m0 + m1);
  return out;
}

/// (1/n)||y - X b||^2 + lambda ||b||_1, evaluated directly.
inline double lasso_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& b,
                              double lambda) {
  return (y - X * b).squaredNorm() / static_cast<double>(X.rows()) + lambda * b.lpNorm<1>();
}

/// Minimum of the p = 3 lasso objective over the cubic grid with the given
/// step on [-bound, bound]^3.
inline double lasso_grid_minimum(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda, double bound,
                                 double step) {
  const double n = static_cast<double>(X.rows());
  const Eigen::MatrixXd G = X.transpose() * X / n;
  const Eigen::VectorXd q = X.transpose() * y / n;
  const double c = y.squaredNorm() / n;
  const int steps = static_cast<int>(std::lround(bound / step));
  double best = std::numeric_limits<double>::infinity();
  for (int i = -steps; i <= steps; ++i) {
    const double b0 = i * step;
    for (int j = -steps; j <= steps; ++j) {
      const double b1 = j * step;
      const double fixed = G(0, 0) * b0 * b0 + G(1, 1) * b1 * b1 + 2 * G(0, 1) * b0 * b1 - 2 * (q(0) * b0 + q(1) * b1) +
                           c + lambda * (std::fabs(b0) + std::fabs(b1));
      const double lin = 2 * (G(0, 2) * b0 + G(1, 2) * b1) - 2 * q(2);
      for (int k = -steps; k <= steps; ++k) {
        const double b2 = k * step;
        const double v = fixed + G(2, 2) * b2 * b2 + lin * b2 + lambda * std::fabs(b2);
        best = std::min(best, v);
      }
    }
  }
  return best;
}

/// Exact two-sided rank-sum p-value by listing every assignment of the pooled
/// midranks to the first sample.
inline double rank_sum_exact(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> all(x);
  all.insert(all.end(), y.begin(), y.end());
  const std::size_t n = all.size(), nx = x.size();
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    double less = 0, equal = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (all[j] < all[i]) ++less;
      if (all[j] == all[i]) ++equal;
    }
    rank[i] = less + (equal + 1) / 2.0;
  }
  double observed = 0;
  for (std::size_t i = 0; i < nx; ++i) observed += rank[i];
  const double mean = static_cast<double>(nx) * (static_cast<double>(n) + 1) / 2.0;
  const double dev = std::fabs(observed - mean);
  std::vector<int> pick(n, 0);
  std::fill(pick.begin(), pick.begin() + static_cast<long>(nx), 1);
  std::sort(pick.begin(), pick.end());
  std::size_t total = 0, extreme = 0;
  do {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (pick[i]) s += rank[i];
    }
    ++total;
    if (std::fabs(s - mean) >= dev - 1e-9) ++extreme;
  } while (std::next_permutation(pick.begin(), pick.end()));
  return static_cast<double>(extreme) / static_cast<double>(total);
}

/// Exact two-sided signed-rank p-value by listing all 2^n sign patterns.
inline double sign_rank_exact(const std::vector<double>& x, double mu0) {
  std::vector<double> d;
  for (double v : x) {
    if (v != mu0) d.push_back(v - mu0);
  }
  const std::size_t n = d.size();
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    double less = 0, equal = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::fabs(d[j]) < std::fabs(d[i])) ++less;
      if (std::fabs(d[j]) == std::fabs(d[i])) ++equal;
    }
    rank[i] = less + (equal + 1) / 2.0;
  }
  double observed = 0, total_rank = 0;
  for (std::size_t i = 0; i < n; ++i) {
    total_rank += rank[i];
    if (d[i] > 0) observed += rank[i];
  }
  const double mean = total_rank / 2.0, dev = std::fabs(observed - mean);
  std::size_t extreme = 0;
  const std::size_t patterns = std::size_t{1} << n;
  for (std::size_t mask = 0; mask < patterns; ++mask) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (std::size_t{1} << i)) s += rank[i];
    }
    if (std::fabs(s - mean) >= dev - 1e-9) ++extreme;
  }
  return static_cast<double>(extreme) / static_cast<double>(patterns);
}

}  // namespace oracle
