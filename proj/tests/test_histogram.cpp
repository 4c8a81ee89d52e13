#include <cmath>
#include <numeric>

#include "doctest.h"
#include "gcasim/histogram.hpp"
#include "test_support.hpp"

using namespace gcasim;

TEST_CASE("two points land on their bin centers") {
  const double values[] = {0.5, 2.5};
  const std::vector<double> h = soft_histogram(values, 0.0, 4.0, 4);
  REQUIRE(h.size() == 4);
  CHECK(h[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(h[1] == doctest::Approx(0.0));
  CHECK(h[2] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(h[3] == doctest::Approx(0.0));
}

TEST_CASE("a value between centers splits linearly") {
  // p = 4(x - 0)/4 - 0.5 = x - 0.5; x = 1.25 -> p = 0.75: bins 0/1 get
  // 0.25/0.75.
  const double values[] = {1.25};
  const std::vector<double> h = soft_histogram(values, 0.0, 4.0, 4);
  CHECK(h[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(h[1] == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("histogram mass is one and clamping catches outliers") {
  Rng rng(88);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> values(3 + uniform_index(rng, 30));
    for (auto& v : values) v = uniform_real(rng, -10, 10);
    const double lo = -4, hi = 4;
    const std::vector<double> h = soft_histogram(values, lo, hi, 16);
    const double mass = std::accumulate(h.begin(), h.end(), 0.0);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
  }
  const double big[] = {100.0, -100.0};
  const std::vector<double> h = soft_histogram(big, 0.0, 1.0, 8);
  CHECK(h[0] == doctest::Approx(0.5));
  CHECK(h[7] == doctest::Approx(0.5));
}

TEST_CASE("degenerate range puts all mass in bin zero") {
  const double values[] = {3.0, 3.0, 3.0};
  const std::vector<double> h = soft_histogram(values, 3.0, 3.0, 8);
  CHECK(h[0] == doctest::Approx(1.0));
  for (std::size_t b = 1; b < h.size(); ++b) CHECK(h[b] == 0.0);
}

TEST_CASE("histogram argument validation") {
  const double values[] = {1.0};
  CHECK_THROWS_AS(soft_histogram(values, 0.0, 1.0, 0), ConfigError);
  CHECK_THROWS_AS(soft_histogram(std::span<const double>(), 0.0, 1.0, 4), ValidationError);
  CHECK_THROWS_AS(soft_histogram(values, 2.0, 1.0, 4), ValidationError);
}

TEST_CASE("histogram gradients match finite differences") {
  Rng rng(2525);
  const double h = 1e-5, tol = 1e-4;
  int counted = 0, failed = 0, attempts = 0;
  while (counted < 140 && attempts < 600) {
    ++attempts;
    const int bins = 4 + static_cast<int>(uniform_index(rng, 28));
    std::vector<double> values(4 + uniform_index(rng, 24));
    for (auto& v : values) v = uniform_real(rng, -2, 2);
    double lo = -2.5, hi = 2.5;
    std::vector<double> coeff(static_cast<std::size_t>(bins));
    for (auto& c : coeff) c = uniform_real(rng, -1, 1);

    auto objective = [&](std::span<const double> vals, double l, double hgh) {
      const std::vector<double> probs = soft_histogram(vals, l, hgh, bins);
      double acc = 0;
      for (std::size_t b = 0; b < probs.size(); ++b) acc += coeff[b] * probs[b];
      return acc;
    };

    std::vector<double> dvalues(values.size(), 0.0);
    double dlo = 0, dhi = 0;
    soft_histogram_backward(values, lo, hi, bins, coeff, dvalues, dlo, dhi);

    // A few random value coordinates.
    for (int pick = 0; pick < 2; ++pick) {
      const std::size_t vi = uniform_index(rng, values.size());
      const double saved = values[vi];
      auto f = [&](double x) {
        values[vi] = x;
        const double out = objective(values, lo, hi);
        values[vi] = saved;
        return out;
      };
      auto check = testsup::fd_check(f, saved, dvalues[vi], h, tol);
      if (check.countable && !check.ok)
        check = testsup::fd_check(f, saved, dvalues[vi], h * 0.1, 1e-3);
      if (!check.countable) continue;
      ++counted;
      if (!check.ok) {
        ++failed;
        CAPTURE(check.analytic);
        CAPTURE(check.numeric);
        CHECK(check.ok);
      }
    }
    // Range endpoint channels.
    {
      auto flo = [&](double x) { return objective(values, x, hi); };
      auto check = testsup::fd_check(flo, lo, dlo, h, tol);
      if (check.countable && !check.ok) check = testsup::fd_check(flo, lo, dlo, h * 0.1, 1e-3);
      if (check.countable) {
        ++counted;
        if (!check.ok) {
          ++failed;
          CHECK(check.ok);
        }
      }
      auto fhi = [&](double x) { return objective(values, lo, x); };
      check = testsup::fd_check(fhi, hi, dhi, h, tol);
      if (check.countable && !check.ok) check = testsup::fd_check(fhi, hi, dhi, h * 0.1, 1e-3);
      if (check.countable) {
        ++counted;
        if (!check.ok) {
          ++failed;
          CHECK(check.ok);
        }
      }
    }
  }
  CHECK(counted >= 100);
  CHECK(failed == 0);
}

TEST_CASE("divergence of a point mass against a fair coin") {
  const double p[] = {1.0, 0.0};
  const double q[] = {0.5, 0.5};
  CHECK(std::abs(jsd(p, q) - 0.2158) < 1e-4);
}

TEST_CASE("divergence contract on random histograms") {
  Rng rng(31);
  const double ln2 = std::log(2.0);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 2 + uniform_index(rng, 30);
    std::vector<double> p(n), q(n);
    double sp = 0, sq = 0;
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = uniform_unit(rng);
      q[i] = uniform_unit(rng);
      sp += p[i];
      sq += q[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
      p[i] /= sp;
      q[i] /= sq;
    }
    const double d = jsd(p, q);
    CHECK(d >= 0.0);
    CHECK(d <= ln2 + 1e-12);
    CHECK(std::abs(d - jsd(q, p)) <= 1e-12);
    CHECK(jsd(p, p) <= 1e-12);
  }
  // Disjoint supports reach the bound exactly.
  const double a[] = {1.0, 0.0};
  const double b[] = {0.0, 1.0};
  CHECK(jsd(a, b) == doctest::Approx(ln2).epsilon(1e-12));
}

TEST_CASE("divergence gradients match finite differences") {
  Rng rng(37);
  const double h = 1e-5, tol = 1e-4;
  int counted = 0, failed = 0;
  for (int rep = 0; rep < 80; ++rep) {
    const std::size_t n = 3 + uniform_index(rng, 12);
    std::vector<double> p(n), q(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = uniform_real(rng, 0.05, 1.0);
      q[i] = uniform_real(rng, 0.05, 1.0);
    }
    std::vector<double> dp(n, 0.0), dq(n, 0.0);
    jsd_backward(p, q, 1.0, dp, dq);

    const std::size_t i = uniform_index(rng, n);
    auto fp = [&](double x) {
      const double saved = p[i];
      p[i] = x;
      const double out = jsd(p, q);
      p[i] = saved;
      return out;
    };
    auto check = testsup::fd_check(fp, p[i], dp[i], h, tol);
    if (check.countable) {
      ++counted;
      if (!check.ok) {
        ++failed;
        CHECK(check.ok);
      }
    }
    auto fq = [&](double x) {
      const double saved = q[i];
      q[i] = x;
      const double out = jsd(p, q);
      q[i] = saved;
      return out;
    };
    check = testsup::fd_check(fq, q[i], dq[i], h, tol);
    if (check.countable) {
      ++counted;
      if (!check.ok) {
        ++failed;
        CHECK(check.ok);
      }
    }
  }
  CHECK(counted >= 100);
  CHECK(failed == 0);
}

TEST_CASE("histogram to divergence pipeline gradients") {
  // Chained backward through jsd and both histograms, perturbing raw values.
  Rng rng(404);
  const double h = 1e-5, tol = 1e-4;
  int counted = 0, failed = 0, attempts = 0;
  while (counted < 100 && attempts < 500) {
    ++attempts;
    const int bins = 8;
    std::vector<double> a(6 + uniform_index(rng, 10)), b(6 + uniform_index(rng, 10));
    for (auto& v : a) v = uniform_real(rng, -1, 1);
    for (auto& v : b) v = uniform_real(rng, -1, 1);
    const double lo = -1.2, hi = 1.2;

    auto objective = [&]() {
      return jsd(soft_histogram(a, lo, hi, bins), soft_histogram(b, lo, hi, bins));
    };
    const std::vector<double> pa = soft_histogram(a, lo, hi, bins);
    const std::vector<double> pb = soft_histogram(b, lo, hi, bins);
    std::vector<double> dpa(pa.size(), 0.0), dpb(pb.size(), 0.0);
    jsd_backward(pa, pb, 1.0, dpa, dpb);
    std::vector<double> da(a.size(), 0.0), db(b.size(), 0.0);
    double dlo = 0, dhi = 0;
    soft_histogram_backward(a, lo, hi, bins, dpa, da, dlo, dhi);
    soft_histogram_backward(b, lo, hi, bins, dpb, db, dlo, dhi);

    const std::size_t ia = uniform_index(rng, a.size());
    auto fa = [&](double x) {
      const double saved = a[ia];
      a[ia] = x;
      const double out = objective();
      a[ia] = saved;
      return out;
    };
    auto check = testsup::fd_check(fa, a[ia], da[ia], h, tol);
    if (check.countable && !check.ok) check = testsup::fd_check(fa, a[ia], da[ia], h * 0.1, 1e-3);
    if (check.countable) {
      ++counted;
      if (!check.ok) {
        ++failed;
        CHECK(check.ok);
      }
    }
    const std::size_t ib = uniform_index(rng, b.size());
    auto fb = [&](double x) {
      const double saved = b[ib];
      b[ib] = x;
      const double out = objective();
      b[ib] = saved;
      return out;
    };
    check = testsup::fd_check(fb, b[ib], db[ib], h, tol);
    if (check.countable && !check.ok) check = testsup::fd_check(fb, b[ib], db[ib], h * 0.1, 1e-3);
    if (check.countable) {
      ++counted;
      if (!check.ok) {
        ++failed;
        CHECK(check.ok);
      }
    }
  }
  CHECK(counted >= 100);
  CHECK(failed == 0);
}
