#pragma once

#include <span>
#include <vector>

#include "gcasim/common.hpp"

namespace gcasim {

// Differentiable histogram: `bins` equal cells over [lo, hi], each value
// clamped to the range and spread over the two nearest bin centers with a
// triangular kernel one bin wide, then normalized by the value count.
// A degenerate range (lo == hi) puts all mass in bin 0.
std::vector<double> soft_histogram(std::span<const double> values, double lo, double hi,
                                   int bins);

// Accumulates adjoints of the histogram probabilities back onto the values
// and onto the range endpoints. dvalues must have values.size() entries.
void soft_histogram_backward(std::span<const double> values, double lo, double hi, int bins,
                             std::span<const double> dprobs, std::span<double> dvalues,
                             double& dlo, double& dhi);

// Jensen-Shannon divergence in nats: 0.5 KL(P||M) + 0.5 KL(Q||M) with
// M = (P+Q)/2 and 0 log 0 taken as 0. Bounded by ln 2.
double jsd(std::span<const double> p, std::span<const double> q);

void jsd_backward(std::span<const double> p, std::span<const double> q, double upstream,
                  std::span<double> dp, std::span<double> dq);

}  // namespace gcasim
