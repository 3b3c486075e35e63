#include "tandem/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tandem {

std::vector<double> fractional_ranks(const std::vector<double>& x) {
  const size_t n = x.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw Error("spearman: length mismatch");
  if (x.size() < 2) throw Error("spearman: need at least two samples");
  const std::vector<double> rx = fractional_ranks(x);
  const std::vector<double> ry = fractional_ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0)
    throw Error("spearman: undefined for a constant input");
  return sxy / std::sqrt(sxx * syy);
}

namespace {

double accel_sum(const std::vector<double>& xy, double dt) {
  const size_t n = xy.size() / 2;
  double total = 0.0;
  for (size_t t = 1; t + 1 < n; ++t) {
    const double ax = (xy[2 * (t + 1)] - 2.0 * xy[2 * t] + xy[2 * (t - 1)]) /
                      (dt * dt);
    const double ay =
        (xy[2 * (t + 1) + 1] - 2.0 * xy[2 * t + 1] + xy[2 * (t - 1) + 1]) /
        (dt * dt);
    total += std::sqrt(ax * ax + ay * ay);
  }
  return total;
}

}  // namespace

double smoothness(const std::vector<double>& left_xy,
                  const std::vector<double>& right_xy, double dt) {
  if (left_xy.size() != right_xy.size())
    throw Error("smoothness: trajectory length mismatch");
  if (left_xy.size() % 2 != 0)
    throw Error("smoothness: flattened trajectories need x,y pairs");
  if (left_xy.size() < 6)
    throw Error("smoothness: need at least three samples");
  if (dt <= 0.0) throw Error("smoothness: dt must be positive");
  return accel_sum(left_xy, dt) + accel_sum(right_xy, dt);
}

}  // namespace tandem
