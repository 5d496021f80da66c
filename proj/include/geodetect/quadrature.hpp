#pragma once

// Globally adaptive Gauss-Kronrod integration with error propagation for
// nested (iterated) integrals.
//
// An integrand may return either a double or an `Estimate`; in the latter
// case the inner error is integrated with the Kronrod weights and added to
// the rule's own error estimate, so an outer integral reports a bound that
// covers the inner ones. Subdivision always splits the interval with the
// largest error (ties broken by position), which keeps results reproducible.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <type_traits>
#include <vector>

#include "geodetect/numeric.hpp"

namespace geodetect {

struct Estimate {
  double value = 0.0;
  double error = 0.0;
};

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  std::size_t evaluations = 0;
  std::size_t intervals = 0;
  bool converged = false;
};

enum class KronrodRule { gk15 = 15, gk21 = 21 };

namespace detail {

struct KronrodNodes {
  // Nodes in [0,1] (abscissae of the positive half, largest first, centre last).
  const double* x;
  const double* wk;
  const double* wg;  // Gauss weights for odd-indexed nodes; centre handled apart
  int half;          // number of positive nodes
  double wg_center;  // Gauss weight at the centre (0 if the centre is not a Gauss node)
};

KronrodNodes kronrod_nodes(KronrodRule rule) noexcept;

template <class F>
Estimate as_estimate(F& f, double x) {
  if constexpr (std::is_same_v<std::invoke_result_t<F&, double>, Estimate>) {
    return f(x);
  } else {
    return {static_cast<double>(f(x)), 0.0};
  }
}

struct Panel {
  double a, b;
  double value, error;
};

template <class F>
Panel apply_rule(F& f, double a, double b, const KronrodNodes& k,
                 std::size_t& evals) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const Estimate fc = as_estimate(f, c);
  double kron = fc.value * k.wk[k.half];
  double gauss = fc.value * k.wg_center;
  double inner_err = fc.error * k.wk[k.half];
  for (int j = 0; j < k.half; ++j) {
    const double dx = h * k.x[j];
    const Estimate f1 = as_estimate(f, c - dx);
    const Estimate f2 = as_estimate(f, c + dx);
    kron += k.wk[j] * (f1.value + f2.value);
    inner_err += k.wk[j] * (f1.error + f2.error);
    if (j % 2 == 1) gauss += k.wg[j / 2] * (f1.value + f2.value);
  }
  evals += 2 * static_cast<std::size_t>(k.half) + 1;
  const double rule_err = std::abs((kron - gauss) * h);
  // Round-off floor so flat integrands do not force endless refinement.
  const double floor =
      50.0 * std::numeric_limits<double>::epsilon() * std::abs(kron * h);
  return {a, b, kron * h, std::max(rule_err, floor) + std::abs(h) * inner_err};
}

}  // namespace detail

/// Integrates f over [a,b] (finite) to absolute tolerance abs_tol, starting
/// from `initial_panels` equal panels and bisecting at most `max_intervals`
/// times in total.
template <class F>
QuadResult integrate_adaptive(F&& f, double a, double b, double abs_tol,
                              std::size_t max_intervals = 200,
                              KronrodRule rule = KronrodRule::gk15,
                              std::size_t initial_panels = 1) {
  QuadResult res;
  if (a == b) {
    res.converged = true;
    return res;
  }
  const auto nodes = detail::kronrod_nodes(rule);
  // Max-heap on error; ties resolved by position for reproducibility.
  auto less = [](const detail::Panel& l, const detail::Panel& r) {
    if (l.error != r.error) return l.error < r.error;
    return l.a > r.a;
  };
  std::vector<detail::Panel> panels;
  panels.reserve(initial_panels + 2 * max_intervals + 1);
  initial_panels = std::max<std::size_t>(1, initial_panels);
  for (std::size_t i = 0; i < initial_panels; ++i) {
    const double lo = a + (b - a) * static_cast<double>(i) /
                              static_cast<double>(initial_panels);
    const double hi = i + 1 == initial_panels
                          ? b
                          : a + (b - a) * static_cast<double>(i + 1) /
                                    static_cast<double>(initial_panels);
    panels.push_back(detail::apply_rule(f, lo, hi, nodes, res.evaluations));
  }
  std::make_heap(panels.begin(), panels.end(), less);
  auto total_error = [&panels] {
    CompensatedSum e;
    for (const auto& p : panels) e.add(p.error);
    return e.value();
  };
  double total_err = total_error();
  std::size_t splits = 0;
  while (total_err > abs_tol && splits < max_intervals) {
    const auto worst = panels.front();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > std::min(worst.a, worst.b) &&
          mid < std::max(worst.a, worst.b))) {
      break;  // interval exhausted at machine precision
    }
    std::pop_heap(panels.begin(), panels.end(), less);
    panels.back() = detail::apply_rule(f, worst.a, mid, nodes, res.evaluations);
    std::push_heap(panels.begin(), panels.end(), less);
    panels.push_back(detail::apply_rule(f, mid, worst.b, nodes, res.evaluations));
    std::push_heap(panels.begin(), panels.end(), less);
    ++splits;
    total_err = total_error();
  }
  std::sort(panels.begin(), panels.end(),
            [](const auto& l, const auto& r) { return l.a < r.a; });
  CompensatedSum value, error;
  for (const auto& p : panels) {
    value.add(p.value);
    error.add(p.error);
  }
  res.value = value.value();
  res.error = error.value();
  res.intervals = panels.size();
  res.converged = res.error <= abs_tol;
  return res;
}

/// Integral over [a, inf) via the substitution x = a + (1 - s)/s, s in (0,1].
/// Requires a > -inf and an integrand that decays at least like x^(-1-delta).
template <class F>
QuadResult integrate_to_infinity(F&& f, double a, double abs_tol,
                                 std::size_t max_intervals = 200,
                                 KronrodRule rule = KronrodRule::gk15) {
  auto mapped = [&](double s) -> Estimate {
    if (s <= 0.0) return {};
    const double x = a + (1.0 - s) / s;
    const double jac = 1.0 / (s * s);
    const Estimate e = detail::as_estimate(f, x);
    return {e.value * jac, e.error * jac};
  };
  return integrate_adaptive(mapped, 0.0, 1.0, abs_tol, max_intervals, rule);
}

}  // namespace geodetect
