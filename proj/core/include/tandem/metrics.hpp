#ifndef TANDEM_METRICS_HPP_
#define TANDEM_METRICS_HPP_

#include <vector>

#include "tandem/common.hpp"

namespace tandem {

// Average ranks (1-based, fractional on ties).
std::vector<double> fractional_ranks(const std::vector<double>& x);

// Spearman rank correlation with fractional tie ranks (Pearson of the rank
// vectors). Throws if either input is constant or the lengths differ.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

// Sum over interior samples of |a_t| for both 2D trajectories, with
// accelerations from central second differences (p[t+1]-2p[t]+p[t-1])/dt^2.
// Positions are flattened as x0,y0,x1,y1,... per proxy; needs >= 3 samples.
double smoothness(const std::vector<double>& left_xy,
                  const std::vector<double>& right_xy, double dt);

}  // namespace tandem

#endif  // TANDEM_METRICS_HPP_
