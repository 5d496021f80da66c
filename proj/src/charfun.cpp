#include "geodetect/charfun.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "geodetect/ensembles.hpp"
#include "geodetect/error.hpp"
#include "geodetect/numeric.hpp"

namespace geodetect {

namespace {

constexpr double kPi3 = M_PI * M_PI * M_PI;

// Values, cubes and multiplicities of a (possibly rescaled) spectrum.
struct Kernel {
  std::vector<double> a2, a3, m;

  Kernel(const AlphaSpectrum& alpha, double scale) {
    const SpectrumGroups g = group_spectrum(alpha);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double a = g.value[i] / scale;
      a2.push_back(a * a);
      a3.push_back(a * a * a);
      m.push_back(g.count[i]);
    }
  }

  double power_sum(int q) const {
    CompensatedSum s;
    for (std::size_t i = 0; i < m.size(); ++i) {
      s.add(m[i] * std::pow(std::sqrt(a2[i]), q));
    }
    return s.value();
  }

  // log|phi| and half the summed arctangent (arg phi = -half_arg).
  void polar(double r2, double x, double& log_mag, double& half_arg) const {
    double l = 0.0, arg = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double u = a2[i] * r2;
      const double y = 2.0 * a3[i] * x / (1.0 + u);
      l += m[i] * (2.0 * std::log1p(u) + std::log1p(y * y));
      arg += m[i] * std::atan(y);
    }
    log_mag = -0.25 * l;
    half_arg = 0.5 * arg;
  }

  double half(double r2, double x, double log_mag, double half_arg) const {
    const double mag = std::exp(log_mag);
    if (std::abs(x) < 1e-6 * (1.0 + r2)) {
      // sin(y)/x with y = S1 x - (4/3) S3 x^3 + O(x^5).
      double s1 = 0.0, s3 = 0.0;
      for (std::size_t i = 0; i < m.size(); ++i) {
        const double inv = 1.0 / (1.0 + a2[i] * r2);
        const double q = a3[i] * inv;
        s1 += m[i] * q;
        s3 += m[i] * q * q * q;
      }
      return (s1 - x * x * (4.0 / 3.0 * s3 + s1 * s1 * s1 / 6.0)) * mag;
    }
    return std::sin(half_arg) * mag / x;
  }

  double half(double r2, double x) const {
    double lm, ha;
    polar(r2, x, lm, ha);
    return half(r2, x, lm, ha);
  }

  double log_psi(double a, double b, double c) const {
    double s = 0.0;
    const double aa = a * a, bb = b * b, cc = c * c;
    for (std::size_t i = 0; i < m.size(); ++i) {
      s += m[i] * (std::log1p(a2[i] * aa) + std::log1p(a2[i] * bb) +
                   std::log1p(a2[i] * cc));
    }
    return -0.5 * s;
  }

  double log_phi2(double r2) const {
    double s = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) s += m[i] * std::log1p(a2[i] * r2);
    return -0.5 * s;
  }
};

double sinc(double x) {
  if (std::abs(x) < 1e-4) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

void check_quad(const QuadratureParams& q) {
  if (!(q.rel_tol > 0.0 && q.rel_tol <= 0.1)) {
    throw InvalidParameter("rel_tol must lie in (0, 0.1]");
  }
  if (q.truncation_radius < 0.0 || !std::isfinite(q.truncation_radius)) {
    throw InvalidParameter("truncation radius must be finite and >= 0");
  }
}

// sqrt(6!) (2/||gamma||^2)^3: for ||gamma||_2^2 >= 12 and entries <= 1,
// prod (1 + gamma_i^2 r^2)^(-1/2) <= C6 r^-6.
double decay_constant(double s2) {
  const double q = 2.0 / s2;
  return std::sqrt(720.0) * q * q * q;
}

constexpr double kDecayBoundMinNorm = 12.0;

// Angles are sampled through x = x_max g(u), g(u) = 3u^2 - 2u^3, whose
// derivative vanishes at both ends; this flattens the logarithmic ridge
// that abc -> 0 produces along the faces of the octant.
inline double smooth_map(double u) { return u * u * (3.0 - 2.0 * u); }
inline double smooth_jacobian(double u) { return 6.0 * u * (1.0 - u); }

// Octant integral of ray(ua, ub, uc, tol) over directions, the ray
// returning the radial integral with the r^2 Jacobian included.
//
// The ray must be invariant under permutations of its direction, so only
// the sector c >= a >= b is integrated and the result multiplied by 6. In
// polar angles about the c axis this is phi in [0, pi/4] and theta up to
// atan(1 / cos phi). The azimuth is split into fixed panels that run in
// parallel and are summed in order.
template <class Ray>
QuadResult octant_integral(const Ray& ray, double tol,
                           const QuadratureParams& q,
                           const ExecContext& exec) {
  constexpr std::size_t kPanels = 8;
  constexpr double kQuarterPi = 0.25 * M_PI;
  constexpr double kSectors = 6.0;
  const double theta_cap = std::atan(std::sqrt(2.0));
  const double w = 1.0 / kPanels;
  const double panel_tol = tol / kPanels;
  // Half of each level's budget goes to its own rule, half to the inner
  // errors it inherits: the phi weight is at most 6 * 1.5 * pi/4 over a
  // panel of width w, the theta weight integrates to at most theta_cap.
  const double theta_tol = panel_tol / (2.0 * w * kSectors * 1.5 * kQuarterPi);
  const double ray_tol = theta_tol / (2.0 * theta_cap);
  const auto parts = exec.map<QuadResult>(kPanels, [&](std::size_t k) {
    auto f_phi = [&](double up) -> Estimate {
      const double jp = kSectors * kQuarterPi * smooth_jacobian(up);
      if (jp == 0.0) return {};
      const double ph = kQuarterPi * smooth_map(up);
      const double cp = std::cos(ph), sp = std::sin(ph);
      const double th_max = std::atan(1.0 / cp);
      auto f_theta = [&](double ut) -> Estimate {
        const double jt = th_max * smooth_jacobian(ut);
        if (jt == 0.0) return {};
        const double th = th_max * smooth_map(ut);
        const double st = std::sin(th);
        const Estimate e = ray(st * cp, st * sp, std::cos(th), ray_tol);
        return {jt * st * e.value, jt * st * e.error};
      };
      const QuadResult r = integrate_adaptive(f_theta, 0.0, 1.0, theta_tol,
                                              q.max_subdivisions, q.octant_rule);
      return {jp * r.value, jp * r.error};
    };
    return integrate_adaptive(f_phi, static_cast<double>(k) * w,
                              static_cast<double>(k + 1) * w, panel_tol,
                              q.max_subdivisions, q.octant_rule);
  });
  QuadResult total;
  CompensatedSum v, e;
  total.converged = true;
  for (const auto& r : parts) {
    v.add(r.value);
    e.add(r.error);
    total.evaluations += r.evaluations;
    total.converged = total.converged && r.converged;
  }
  total.value = v.value();
  total.error = e.value();
  return total;
}

// Quadrant integral of ray(uc, us, tol), Jacobian r included by the ray.
template <class Ray>
QuadResult quadrant_integral(const Ray& ray, double tol,
                             const QuadratureParams& q) {
  const double ray_tol = tol / M_PI;
  auto f_phi = [&](double ph) -> Estimate {
    return ray(std::cos(ph), std::sin(ph), ray_tol);
  };
  return integrate_adaptive(f_phi, 0.0, 0.5 * M_PI, tol, q.max_subdivisions,
                            q.octant_rule);
}

template <class F>
Estimate radial(const F& f, double r0, double r1, bool tail, double tol,
                const QuadratureParams& q) {
  const double share = tail ? 0.5 * tol : tol;
  const QuadResult a =
      integrate_adaptive(f, r0, r1, share, q.max_subdivisions, q.octant_rule);
  Estimate e{a.value, a.error};
  if (tail) {
    // Logarithmic radius: a slowly decaying tail becomes a plateau followed
    // by exponential decay, which the mapped rule resolves cheaply.
    auto g = [&](double v) {
      if (v > 200.0) return 0.0;  // r > 1e87: keeps r^3 finite
      const double r = r1 * std::exp(v);
      return f(r) * r;
    };
    const QuadResult b =
        integrate_to_infinity(g, 0.0, share, q.max_subdivisions, q.octant_rule);
    e.value += b.value;
    e.error += b.error;
  }
  return e;
}

}  // namespace

std::string to_string(ProbMethod m) {
  return m == ProbMethod::mc ? "mc" : "charfun";
}

std::string to_string(TailTreatment t) {
  switch (t) {
    case TailTreatment::none:
      return "none";
    case TailTreatment::decay_bound:
      return "decay_bound";
    case TailTreatment::integrated:
      return "integrated";
    case TailTreatment::shell_estimate:
      return "shell_estimate";
  }
  return "unknown";
}

std::complex<double> phi(const AlphaSpectrum& alpha, double a, double b,
                         double c) {
  const Kernel k(alpha, 1.0);
  double lm, ha;
  k.polar(a * a + b * b + c * c, a * b * c, lm, ha);
  return std::polar(std::exp(lm), -ha);
}

double psi(const AlphaSpectrum& alpha, double a, double b, double c) {
  return std::exp(Kernel(alpha, 1.0).log_psi(a, b, c));
}

double integrand_half(const AlphaSpectrum& alpha, double a, double b,
                      double c) {
  return Kernel(alpha, 1.0).half(a * a + b * b + c * c, a * b * c);
}

namespace {

struct GeneralSetup {
  double radius = 0.0;
  double trunc = 0.0;  // analytic tail bound on P, from the decay bound
  TailTreatment tail = TailTreatment::none;
};

// Chooses the radial cut-off. t is in normalized units; ref_tol is the
// absolute error budget on the probability.
GeneralSetup choose_radius(const Kernel& k, double t, double ref_tol,
                           const QuadratureParams& q) {
  GeneralSetup s;
  const double s2 = k.power_sum(2);
  const double s3 = k.power_sum(3);
  const bool decay = s2 >= kDecayBoundMinNorm;
  const double c6 = decay ? decay_constant(s2) : 0.0;
  const double at = std::abs(t);
  auto bound = [&](double r) {
    const double tri = (s3 + 2.0 * at * at * at) * c6 / (6.0 * M_PI * M_PI * r * r * r);
    const double pair = 3.0 / (8.0 * M_PI) * at * at * c6 / (r * r * r * r);
    return tri + pair;
  };
  if (decay) {
    s.tail = TailTreatment::decay_bound;
    if (q.truncation_radius > 0.0) {
      s.radius = q.truncation_radius;
    } else {
      double r = 1.0;
      while (bound(r) > 0.1 * ref_tol) r *= 1.25;
      s.radius = r;
    }
    s.trunc = bound(s.radius);
    return s;
  }
  if (t == 0.0) {
    s.tail = TailTreatment::integrated;
    s.radius = q.truncation_radius > 0.0 ? q.truncation_radius : 4.0;
  } else {
    s.tail = TailTreatment::shell_estimate;
    s.radius = q.truncation_radius > 0.0 ? q.truncation_radius : 256.0;
  }
  return s;
}

}  // namespace

ProbabilityEstimate triangle_prob_half(const AlphaSpectrum& alpha,
                                       const QuadratureParams& q,
                                       const ExecContext& exec) {
  check_quad(q);
  const Kernel k(alpha, alpha.max());
  const double ref_tol = q.rel_tol * 0.125;
  const GeneralSetup setup = choose_radius(k, 0.0, ref_tol, q);
  const bool tail = setup.tail == TailTreatment::integrated;
  const double radius = setup.radius;

  auto ray = [&](double ua, double ub, double uc, double tol) -> Estimate {
    const double s3 = ua * ub * uc;
    auto f = [&](double r) {
      const double r2 = r * r;
      return k.half(r2, r2 * r * s3) * r2;
    };
    return radial(f, 0.0, radius, tail, tol, q);
  };
  const double quad_tol = std::max(ref_tol - setup.trunc, 0.5 * ref_tol) * kPi3;
  const QuadResult j = octant_integral(ray, quad_tol, q, exec);

  ProbabilityEstimate est;
  est.method = ProbMethod::charfun;
  est.value = 0.125 + j.value / kPi3;
  est.quadrature_error = j.error / kPi3;
  est.truncation_error = setup.trunc;
  est.error_bound = est.quadrature_error + est.truncation_error;
  est.truncation_radius = radius;
  est.tail = setup.tail;
  if (!(est.error_bound <= ref_tol * (1.0 + 1e-9))) {
    throw NumericError("triangle_prob_half did not reach rel_tol", est.value,
                       est.error_bound);
  }
  return est;
}

namespace {

struct GeneralParts {
  Estimate k3;  // Kc - Ks
  Estimate k2;
};

GeneralParts general_parts(const Kernel& k, double t, double r0, double r1,
                           bool tail, double tol3, double tol2,
                           const QuadratureParams& q, const ExecContext& exec,
                           CharModel model) {
  const bool joint = model == CharModel::joint;
  auto ray3 = [&](double ua, double ub, double uc, double tol) -> Estimate {
    const double s3 = ua * ub * uc;
    const double ta = t * ua, tb = t * ub, tc = t * uc;
    const double t3 = t * t * t;
    auto f = [&](double r) {
      const double r2 = r * r;
      const double x = r2 * r * s3;
      const double lpsi = k.log_psi(r * ua, r * ub, r * uc);
      double h = 0.0, re = std::exp(lpsi);
      if (joint) {
        double lm, ha;
        k.polar(r2, x, lm, ha);
        h = k.half(r2, x, lm, ha);
        re = std::exp(lm) * std::cos(ha);
      }
      const double cosine = std::cos(ta * r) * std::cos(tb * r) * std::cos(tc * r);
      const double sine = t3 * sinc(ta * r) * sinc(tb * r) * sinc(tc * r);
      return (h * cosine - (re - std::exp(lpsi)) * sine) * r2;
    };
    return radial(f, r0, r1, tail, tol, q);
  };
  auto ray2 = [&](double uc, double us, double tol) -> Estimate {
    const double ta = t * uc, tb = t * us;
    auto f = [&](double r) {
      const double lpsi2 = k.log_psi(r * uc, r * us, 0.0);
      const double phi2 = joint ? std::exp(k.log_phi2(r * r)) : std::exp(lpsi2);
      return (phi2 - std::exp(lpsi2)) * t * t * sinc(ta * r) * sinc(tb * r) * r;
    };
    return radial(f, r0, r1, tail, tol, q);
  };
  GeneralParts parts;
  if (std::isfinite(tol3)) {
    const QuadResult a = octant_integral(ray3, tol3, q, exec);
    parts.k3 = {a.value, a.error};
  }
  if (t != 0.0) {
    const QuadResult b = quadrant_integral(ray2, tol2, q);
    parts.k2 = {b.value, b.error};
  }
  return parts;
}

}  // namespace

ProbabilityEstimate triangle_prob_general(const AlphaSpectrum& alpha,
                                          double p, double t,
                                          const QuadratureParams& q,
                                          const ExecContext& exec,
                                          CharModel model) {
  check_quad(q);
  if (!(p > 0.0 && p < 1.0)) throw InvalidParameter("p must be in (0,1)");
  if (!std::isfinite(t)) throw InvalidParameter("threshold must be finite");
  const double scale = alpha.max();
  const Kernel k(alpha, scale);
  const double ts = t / scale;
  const double p3 = p * p * p;
  const double ref_tol = q.rel_tol * p3;
  const GeneralSetup setup = choose_radius(k, ts, ref_tol, q);
  const double radius = setup.radius;
  const bool tail = setup.tail == TailTreatment::integrated;

  const double budget = std::max(ref_tol - setup.trunc, 0.5 * ref_tol);
  const double tol3 = 0.6 * budget * kPi3;
  const double tol2 = 0.3 * budget * M_PI * M_PI / 1.5;
  const GeneralParts main =
      general_parts(k, ts, 0.0, radius, tail, tol3, tol2, q, exec, model);

  ProbabilityEstimate est;
  est.method = ProbMethod::charfun;
  est.value = p3 + 1.5 * main.k2.value / (M_PI * M_PI) + main.k3.value / kPi3;
  est.quadrature_error = 1.5 * main.k2.error / (M_PI * M_PI) + main.k3.error / kPi3;
  est.truncation_error = setup.trunc;
  est.truncation_radius = radius;
  est.tail = setup.tail;
  if (setup.tail == TailTreatment::shell_estimate) {
    const GeneralParts shell = general_parts(k, ts, 0.5 * radius, radius, false,
                                             tol3, tol2, q, exec, model);
    est.truncation_error = 1.5 * std::abs(shell.k2.value) / (M_PI * M_PI) +
                           std::abs(shell.k3.value) / kPi3;
    est.quadrature_error +=
        1.5 * shell.k2.error / (M_PI * M_PI) + shell.k3.error / kPi3;
  }
  est.error_bound = est.quadrature_error + est.truncation_error;
  if (!std::isfinite(est.value) || !std::isfinite(est.error_bound)) {
    throw NumericError("triangle_prob_general: non-finite quadrature result");
  }
  if (est.value < -est.error_bound || est.value > 1.0 + est.error_bound) {
    throw NumericError(
        "triangle_prob_general left [0,1]: value " + std::to_string(est.value) +
            ", error " + std::to_string(est.error_bound) +
            "; check that t is t_{p,alpha} in inner-product units",
        est.value, est.error_bound);
  }
  return est;
}

Estimate pair_prob(const AlphaSpectrum& alpha, double p, double t,
                   const QuadratureParams& q, CharModel model) {
  check_quad(q);
  if (!(p > 0.0 && p < 1.0)) throw InvalidParameter("p must be in (0,1)");
  const double scale = alpha.max();
  const Kernel k(alpha, scale);
  const double ts = t / scale;
  if (ts == 0.0) return {0.25, 0.0};
  const double ref_tol = q.rel_tol * p * p;
  const GeneralSetup setup = choose_radius(k, ts, ref_tol, q);
  const bool tail = setup.tail == TailTreatment::integrated;
  const double tol2 = 0.5 * ref_tol * M_PI * M_PI;
  constexpr double kNoTriple = std::numeric_limits<double>::infinity();
  const GeneralParts main = general_parts(k, ts, 0.0, setup.radius, tail,
                                          kNoTriple, tol2, q, {}, model);
  double err = main.k2.error / (M_PI * M_PI) + setup.trunc;
  if (setup.tail == TailTreatment::shell_estimate) {
    const GeneralParts shell = general_parts(
        k, ts, 0.5 * setup.radius, setup.radius, false, kNoTriple, tol2, q, {},
        model);
    err += std::abs(shell.k2.value) / (M_PI * M_PI);
  }
  return {p * p + main.k2.value / (M_PI * M_PI), err};
}

ProbabilityEstimate triangle_prob_mc(const AlphaSpectrum& alpha, double p,
                                     double t, std::size_t n_samples,
                                     SeededStream stream,
                                     const ExecContext& exec) {
  (void)p;
  if (n_samples < 10000) {
    throw InvalidParameter("triangle_prob_mc needs at least 10^4 samples");
  }
  constexpr std::size_t kBatch = std::size_t{1} << 16;
  const std::size_t batches = (n_samples + kBatch - 1) / kBatch;
  const GramSampler proto(alpha, 3, 1.0, false);
  const auto hits = exec.map<std::size_t>(batches, [&](std::size_t b) {
    GramSampler sampler = proto;
    RandomStream rng(stream.with_stream(b));
    double g[9];
    std::size_t count = 0;
    const std::size_t end = std::min(n_samples, (b + 1) * kBatch);
    for (std::size_t i = b * kBatch; i < end; ++i) {
      sampler.sample(rng, g);
      if (g[1] >= t && g[2] >= t && g[5] >= t) ++count;
    }
    return count;
  });
  std::size_t total = 0;
  for (auto h : hits) total += h;
  const Proportion pr = proportion(total, n_samples);
  ProbabilityEstimate est;
  est.method = ProbMethod::mc;
  est.value = pr.value;
  est.std_error = pr.std_error;
  est.error_bound = 3.0 * pr.std_error;
  return est;
}

Estimate coordinate_free_gap(const AlphaSpectrum& alpha,
                             const QuadratureParams& q,
                             const ExecContext& exec) {
  check_quad(q);
  const Kernel k(alpha, alpha.max());
  const double n2 = std::sqrt(k.power_sum(2));
  const double radius = q.truncation_radius > 0.0 ? q.truncation_radius : 8.0;

  auto ray = [&](double ua, double ub, double uc, double tol) -> Estimate {
    auto f = [&](double rp) {
      const double r = rp / n2;
      const double r2 = r * r;
      double lm, ha;
      k.polar(r2, r2 * r * ua * ub * uc, lm, ha);
      const double re = std::exp(lm) * std::cos(ha);
      const double ps = std::exp(k.log_psi(r * ua, r * ub, r * uc));
      return std::abs(re - ps) * rp * rp;
    };
    const QuadResult res = integrate_adaptive(f, 0.0, radius, tol,
                                              q.max_subdivisions, q.octant_rule);
    return {res.value, res.error};
  };
  // A single-rule pass sets the scale for the relative tolerance.
  QuadratureParams coarse = q;
  coarse.max_subdivisions = 0;
  const QuadResult rough = octant_integral(ray, 1e300, coarse, exec);
  const double tol = q.rel_tol * std::max(std::abs(rough.value), 1e-300);
  const QuadResult r = octant_integral(ray, tol, q, exec);
  if (!(r.error <= tol * (1.0 + 1e-9))) {
    throw NumericError("coordinate_free_gap did not reach rel_tol",
                       8.0 * r.value, 8.0 * r.error);
  }
  return {8.0 * r.value, 8.0 * r.error};
}

}  // namespace geodetect
