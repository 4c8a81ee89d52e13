#pragma once

#include <cmath>
#include <vector>

#include "gcasim/common.hpp"

namespace gcasim {

// Minimal reverse-mode tape for scalar expressions with at most two parents
// per node. Used for the clustering-loss head, whose derivative w.r.t. the
// distance matrix entries is tedious to write by hand.
class Tape {
 public:
  struct Rec {
    int p1 = -1;
    int p2 = -1;
    double w1 = 0;
    double w2 = 0;
  };

  int leaf() {
    recs_.push_back({});
    return static_cast<int>(recs_.size()) - 1;
  }
  int node1(int p1, double w1) {
    recs_.push_back({p1, -1, w1, 0});
    return static_cast<int>(recs_.size()) - 1;
  }
  int node2(int p1, double w1, int p2, double w2) {
    recs_.push_back({p1, p2, w1, w2});
    return static_cast<int>(recs_.size()) - 1;
  }

  // Adjoints of every node w.r.t. the root, by reverse accumulation.
  std::vector<double> gradient(int root) const {
    std::vector<double> adj(recs_.size(), 0.0);
    adj[static_cast<std::size_t>(root)] = 1.0;
    for (std::size_t i = recs_.size(); i-- > 0;) {
      const double a = adj[i];
      if (a == 0) continue;
      const Rec& r = recs_[i];
      if (r.p1 >= 0) adj[static_cast<std::size_t>(r.p1)] += a * r.w1;
      if (r.p2 >= 0) adj[static_cast<std::size_t>(r.p2)] += a * r.w2;
    }
    return adj;
  }

  std::size_t size() const { return recs_.size(); }

 private:
  std::vector<Rec> recs_;
};

// Tracked scalar. Operations record local partials on the tape at the time
// they execute, so control flow on .v is fine.
struct Var {
  Tape* tape = nullptr;
  int idx = -1;
  double v = 0;

  Var() = default;
  Var(Tape& t, double value) : tape(&t), idx(t.leaf()), v(value) {}
  static Var make(Tape& t, int idx, double value) {
    Var x;
    x.tape = &t;
    x.idx = idx;
    x.v = value;
    return x;
  }
};

inline Var operator+(const Var& a, const Var& b) {
  return Var::make(*a.tape, a.tape->node2(a.idx, 1.0, b.idx, 1.0), a.v + b.v);
}
inline Var operator-(const Var& a, const Var& b) {
  return Var::make(*a.tape, a.tape->node2(a.idx, 1.0, b.idx, -1.0), a.v - b.v);
}
inline Var operator*(const Var& a, const Var& b) {
  return Var::make(*a.tape, a.tape->node2(a.idx, b.v, b.idx, a.v), a.v * b.v);
}
inline Var operator/(const Var& a, const Var& b) {
  return Var::make(*a.tape, a.tape->node2(a.idx, 1.0 / b.v, b.idx, -a.v / (b.v * b.v)),
                   a.v / b.v);
}
inline Var operator+(const Var& a, double c) {
  return Var::make(*a.tape, a.tape->node1(a.idx, 1.0), a.v + c);
}
inline Var operator+(double c, const Var& a) { return a + c; }
inline Var operator-(const Var& a, double c) { return a + (-c); }
inline Var operator-(double c, const Var& a) {
  return Var::make(*a.tape, a.tape->node1(a.idx, -1.0), c - a.v);
}
inline Var operator*(const Var& a, double c) {
  return Var::make(*a.tape, a.tape->node1(a.idx, c), a.v * c);
}
inline Var operator*(double c, const Var& a) { return a * c; }
// True division keeps the value bit-identical to a plain a/c.
inline Var operator/(const Var& a, double c) {
  return Var::make(*a.tape, a.tape->node1(a.idx, 1.0 / c), a.v / c);
}
inline Var vneg(const Var& a) { return a * -1.0; }
inline Var vexp(const Var& a) {
  const double e = std::exp(a.v);
  return Var::make(*a.tape, a.tape->node1(a.idx, e), e);
}
inline Var vlog(const Var& a) {
  return Var::make(*a.tape, a.tape->node1(a.idx, 1.0 / a.v), std::log(a.v));
}
inline Var vabs(const Var& a) {
  const double s = a.v > 0 ? 1.0 : (a.v < 0 ? -1.0 : 0.0);
  return Var::make(*a.tape, a.tape->node1(a.idx, s), std::abs(a.v));
}
// Max/min with the 0.5/0.5 tie subgradient.
inline Var vmax(const Var& a, const Var& b) {
  const double wa = a.v > b.v ? 1.0 : (a.v < b.v ? 0.0 : 0.5);
  return Var::make(*a.tape, a.tape->node2(a.idx, wa, b.idx, 1.0 - wa), std::max(a.v, b.v));
}
inline Var vmin(const Var& a, const Var& b) {
  const double wa = a.v < b.v ? 1.0 : (a.v > b.v ? 0.0 : 0.5);
  return Var::make(*a.tape, a.tape->node2(a.idx, wa, b.idx, 1.0 - wa), std::min(a.v, b.v));
}
// max(x, 0) with subgradient 0.5 at the corner.
inline Var vrelu(const Var& a) {
  const double w = a.v > 0 ? 1.0 : (a.v < 0 ? 0.0 : 0.5);
  return Var::make(*a.tape, a.tape->node1(a.idx, w), std::max(a.v, 0.0));
}

}  // namespace gcasim
