#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance binary. None of these call into the code under test.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lace/nn_core.hpp"
#include "lace/rng.hpp"
#include "lace/sample.hpp"

namespace oracle {

// Central finite differences of f with respect to every entry of `params`.
inline std::vector<double> fd_gradient(std::span<double> params, const std::function<double()>& f,
                                       double h = 1e-6) {
  std::vector<double> g(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double keep = params[i];
    params[i] = keep + h;
    const double up = f();
    params[i] = keep - h;
    const double down = f();
    params[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// ||a - b|| / max(||a||, ||b||, floor)
inline double rel_error(std::span<const double> a, std::span<const double> b, double floor = 1e-10) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), floor});
}

// Cyclic Jacobi rotations on a dense symmetric matrix; eigenvalues descending.
inline std::vector<double> jacobi_eigenvalues(std::vector<std::vector<double>> a, int sweeps = 100) {
  const std::size_t n = a.size();
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    }
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a[p][q] == 0.0) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a[i][i];
  std::sort(ev.rbegin(), ev.rend());
  return ev;
}

// Sample covariance with an n - 1 denominator, by explicit double loops.
inline std::vector<std::vector<double>> covariance(const std::vector<std::vector<double>>& rows) {
  const std::size_t n = rows.size(), d = rows.front().size();
  std::vector<double> mean(d, 0.0);
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += r[j] / static_cast<double>(n);
  }
  std::vector<std::vector<double>> c(d, std::vector<double>(d, 0.0));
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) c[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]);
    }
  }
  for (auto& row : c) {
    for (auto& v : row) v /= static_cast<double>(n - 1);
  }
  return c;
}

// Purity by brute force: for every cluster id, count each candidate label by
// rescanning the whole assignment list.
inline double counting_purity(const std::vector<std::size_t>& assign, const std::vector<std::size_t>& labels) {
  std::vector<std::size_t> clusters(assign);
  std::sort(clusters.begin(), clusters.end());
  clusters.erase(std::unique(clusters.begin(), clusters.end()), clusters.end());
  std::size_t total = 0;
  for (const std::size_t c : clusters) {
    std::size_t best = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      std::size_t count = 0;
      for (std::size_t j = 0; j < assign.size(); ++j) count += assign[j] == c && labels[j] == labels[i];
      if (assign[i] == c) best = std::max(best, count);
    }
    total += best;
  }
  return static_cast<double>(total) / static_cast<double>(assign.size());
}

// Nearest-centroid classifier over normalized character histograms.
class CentroidClassifier {
 public:
  explicit CentroidClassifier(std::size_t classes) : sums_(classes, Histogram{}), counts_(classes, 0) {}

  void fit(const lace::Sample& s) {
    const auto h = histogram(s);
    for (std::size_t i = 0; i < h.size(); ++i) sums_[s.label][i] += h[i];
    ++counts_[s.label];
  }

  std::size_t predict(const lace::Sample& s) const {
    const auto h = histogram(s);
    std::size_t best = 0;
    double best_d = INFINITY;
    for (std::size_t c = 0; c < sums_.size(); ++c) {
      if (counts_[c] == 0) continue;
      double d = 0.0;
      for (std::size_t i = 0; i < h.size(); ++i) {
        const double diff = h[i] - sums_[c][i] / static_cast<double>(counts_[c]);
        d += diff * diff;
      }
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    return best;
  }

 private:
  using Histogram = std::array<double, 128>;

  static Histogram histogram(const lace::Sample& s) {
    Histogram h{};
    for (const auto t : s.tokens) h[t & 0x7F] += 1.0 / static_cast<double>(s.tokens.size());
    return h;
  }

  std::vector<Histogram> sums_;
  std::vector<std::size_t> counts_;
};

// Well-separated Gaussian blobs: domain k is centred on a random direction
// scaled to `radius`, with unit-variance isotropic noise scaled by `noise`.
inline std::vector<std::vector<std::vector<double>>> blobs(std::size_t domains, std::size_t per_domain,
                                                           std::size_t dim, std::uint64_t seed,
                                                           double radius = 4.0, double noise = 0.3) {
  lace::Rng rng(seed);
  std::vector<std::vector<std::vector<double>>> out(domains);
  for (std::size_t k = 0; k < domains; ++k) {
    std::vector<double> centre(dim);
    double norm = 0.0;
    for (auto& c : centre) {
      c = rng.normal();
      norm += c * c;
    }
    for (auto& c : centre) c *= radius / std::sqrt(norm);
    for (std::size_t i = 0; i < per_domain; ++i) {
      std::vector<double> x(dim);
      for (std::size_t j = 0; j < dim; ++j) x[j] = centre[j] + noise * rng.normal();
      out[k].push_back(std::move(x));
    }
  }
  return out;
}

}  // namespace oracle
