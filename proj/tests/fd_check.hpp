#pragma once

// Central finite-difference checks against analytic gradients.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "uavbc/neural.hpp"
#include "uavbc/rng.hpp"

namespace uavbc::testing {

struct FdReport {
  std::size_t checked = 0;
  std::size_t failed = 0;
  double worst_rel = 0.0;
};

inline bool grad_close(double analytic, double numeric, double rel = 1e-3, double abs_floor = 1e-5) {
  return std::fabs(analytic - numeric) <= std::max(abs_floor, rel * std::max(std::fabs(analytic), std::fabs(numeric)));
}

/// Perturbs `count` randomly chosen parameters of `net` and compares the
/// central difference of `loss` with the matching entry of `analytic`.
inline FdReport fd_check(DenseNet& net, const std::vector<double>& analytic, const std::function<double()>& loss,
                         std::size_t count, CounterRng& rng, double h = 1e-6) {
  FdReport r;
  std::vector<double> params = net.flatten();
  const std::size_t n = params.size();
  for (std::size_t c = 0; c < count; ++c) {
    const std::size_t i = count >= n ? c % n : static_cast<std::size_t>(rng.below(n));
    const double orig = params[i];
    params[i] = orig + h;
    net.assign(params);
    const double up = loss();
    params[i] = orig - h;
    net.assign(params);
    const double down = loss();
    params[i] = orig;
    net.assign(params);
    const double numeric = (up - down) / (2.0 * h);
    ++r.checked;
    if (!grad_close(analytic[i], numeric)) ++r.failed;
    const double denom = std::max(1e-5, std::max(std::fabs(analytic[i]), std::fabs(numeric)));
    r.worst_rel = std::max(r.worst_rel, std::fabs(analytic[i] - numeric) / denom);
  }
  return r;
}

}  // namespace uavbc::testing
