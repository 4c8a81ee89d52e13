#include "gcasim/histogram.hpp"

#include <algorithm>
#include <cmath>

namespace gcasim {

namespace {

void check_histogram_args(std::span<const double> values, double lo, double hi, int bins) {
  if (bins < 1) throw ConfigError("soft_histogram: bins must be positive");
  if (values.empty()) throw ValidationError("soft_histogram: empty value set");
  if (!(lo <= hi)) throw ValidationError("soft_histogram: lo must not exceed hi");
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    throw NumericError("soft_histogram: non-finite range");
  }
}

}  // namespace

std::vector<double> soft_histogram(std::span<const double> values, double lo, double hi,
                                   int bins) {
  check_histogram_args(values, lo, hi, bins);
  std::vector<double> probs(static_cast<std::size_t>(bins), 0.0);
  const double n = static_cast<double>(values.size());
  if (lo == hi) {
    probs[0] = 1.0;
    return probs;
  }
  // Accumulate in ascending value order so the result depends only on the
  // multiset of values.
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double range = hi - lo;
  const double b = static_cast<double>(bins);
  for (double x : sorted) {
    if (!std::isfinite(x)) throw NumericError("soft_histogram: non-finite value");
    const double u = std::clamp(x, lo, hi);
    const double p = b * (u - lo) / range - 0.5;  // continuous bin-center coordinate
    if (p <= 0) {
      probs[0] += 1.0;
    } else if (p >= b - 1.0) {
      probs[static_cast<std::size_t>(bins) - 1] += 1.0;
    } else {
      const double j0 = std::floor(p);
      const double frac = p - j0;
      const auto j = static_cast<std::size_t>(j0);
      probs[j] += 1.0 - frac;
      probs[j + 1] += frac;
    }
  }
  for (auto& v : probs) v /= n;
  return probs;
}

void soft_histogram_backward(std::span<const double> values, double lo, double hi, int bins,
                             std::span<const double> dprobs, std::span<double> dvalues,
                             double& dlo, double& dhi) {
  check_histogram_args(values, lo, hi, bins);
  if (dprobs.size() != static_cast<std::size_t>(bins)) {
    throw ConfigError("soft_histogram_backward: dprobs size mismatch");
  }
  if (dvalues.size() != values.size()) {
    throw ConfigError("soft_histogram_backward: dvalues size mismatch");
  }
  if (lo == hi) return;  // constant output on the degenerate range
  const double n = static_cast<double>(values.size());
  const double range = hi - lo;
  const double b = static_cast<double>(bins);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double x = values[i];
    if (x <= lo || x >= hi) {
      // Clamped (or boundary) values sit at a constant kernel position:
      // no gradient flows to them or to the range through them.
      // Exception: the boundary value itself moves with lo/hi, which still
      // keeps p constant, so the derivative is genuinely zero here.
      continue;
    }
    const double p = b * (x - lo) / range - 0.5;
    if (p <= 0 || p >= b - 1.0) continue;  // saturated edge cells are flat in p
    const double j0 = std::floor(p);
    const auto j = static_cast<std::size_t>(j0);
    // mass_j = (1 - frac)/n, mass_{j+1} = frac/n, frac linear in p.
    const double dmass_dp = (dprobs[j + 1] - dprobs[j]) / n;
    const double dp_dx = b / range;
    const double dp_dlo = b * (x - hi) / (range * range);
    const double dp_dhi = -b * (x - lo) / (range * range);
    dvalues[i] += dmass_dp * dp_dx;
    dlo += dmass_dp * dp_dlo;
    dhi += dmass_dp * dp_dhi;
  }
}

double jsd(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ConfigError("jsd: distribution size mismatch");
  double total = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0 || q[i] < 0) throw ValidationError("jsd: negative probability");
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0) total += 0.5 * p[i] * std::log(p[i] / m);
    if (q[i] > 0) total += 0.5 * q[i] * std::log(q[i] / m);
  }
  return total;
}

void jsd_backward(std::span<const double> p, std::span<const double> q, double upstream,
                  std::span<double> dp, std::span<double> dq) {
  if (p.size() != q.size() || dp.size() != p.size() || dq.size() != q.size()) {
    throw ConfigError("jsd_backward: size mismatch");
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0 && m > 0) dp[i] += upstream * 0.5 * std::log(p[i] / m);
    if (q[i] > 0 && m > 0) dq[i] += upstream * 0.5 * std::log(q[i] / m);
  }
}

}  // namespace gcasim
