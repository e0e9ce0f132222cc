#include "slm/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/tools/minima.hpp>

#include "slm/errors.hpp"

namespace slm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLog2 = 0.69314718055994530942;

// Taylor branch switch for the Bernoulli derivatives (v^2 below this).
constexpr double kBernoulliSeriesSwitch = 1e-4;
// Relative distance to gamma0 below which the implicit dual uses its asymptotics.
constexpr double kNearGamma0 = 1e-6;

constexpr double kGammaLo = 1e-12;
constexpr double kGammaHi = 1e12;
constexpr double kStationarityTol = 1e-12;
constexpr int kMaxScalarIterations = 100;

double log_cosh(double v) {
  v = std::abs(v);
  return v + std::log1p(std::exp(-2.0 * v)) - kLog2;
}

Derivs bernoulli_g(const PotentialSpec& pot, double x) {
  const double a = 0.25 * pot.tau * pot.tau;  // (y tau / 2)^2
  const double c = 0.5 * a;
  const double v2 = a * x;
  const double v = std::sqrt(v2);
  Derivs out;
  out.value = -log_cosh(v) - kLog2;
  if (v2 < kBernoulliSeriesSwitch) {
    // tanh(v)/v and (tanh(v)/v + tanh(v)^2 - 1)/v^2 expanded to O(v^6)
    out.d1 = -c * (1.0 - v2 / 3.0 + 2.0 * v2 * v2 / 15.0 - 17.0 * v2 * v2 * v2 / 315.0);
    out.d2 = c * c * (2.0 / 3.0 - 8.0 * v2 / 15.0 + 34.0 * v2 * v2 / 105.0);
  } else {
    const double t = std::tanh(v);
    out.d1 = -c * t / v;
    out.d2 = 0.5 * c / x * (t / v + t * t - 1.0);
  }
  return out;
}

// h for a log-concave potential without closed form: h(gamma) = -min_x (x/gamma + 2 g(x)).
Derivs implicit_h(const PotentialSpec& pot, double gamma, PotentialCache* cache) {
  const Derivs at0 = g_value_derivs(pot, 0.0);
  const double gamma0 = -0.5 / at0.d1;
  if (gamma <= gamma0) {
    if (cache) cache->x = 0.0;
    return {-2.0 * at0.value, 0.0, 0.0};
  }
  const double xi0 = -at0.d1 / at0.d2;
  const double log_ratio = std::log(gamma / gamma0);
  double x = 0.0;
  if (gamma - gamma0 <= kNearGamma0 * gamma0) {
    x = xi0 * log_ratio;
    const Derivs g = g_value_derivs(pot, x);
    if (cache) cache->x = x;
    return {-x / gamma - 2.0 * g.value, x / (gamma * gamma), (xi0 - 2.0 * x) / (gamma * gamma * gamma)};
  }

  // Solve 1 + 2 gamma g'(x) = 0; the left side increases in x.
  auto residual = [&](double xx) { return 1.0 + 2.0 * gamma * g_value_derivs(pot, xx).d1; };
  double lo = 0.0;
  double hi = std::max(xi0 * log_ratio, 1e-8);
  if (cache && cache->x > 0.0) hi = std::max(hi, cache->x);
  int grow = 0;
  while (residual(hi) < 0.0) {
    lo = hi;
    hi *= 2.0;
    if (++grow > 2000) throw IterationLimitError("implicit h: cannot bracket x_*", lo, hi);
  }
  x = (cache && cache->x > lo && cache->x < hi) ? cache->x : 0.5 * (lo + hi);
  Derivs g;
  bool converged = false;
  for (int it = 0; it < kMaxScalarIterations; ++it) {
    g = g_value_derivs(pot, x);
    const double r = 1.0 + 2.0 * gamma * g.d1;
    if (std::abs(r) <= 1e-14) {
      converged = true;
      break;
    }
    if (r < 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    if (hi - lo <= 1e-15 * hi) {
      converged = true;
      break;
    }
    double next = x - r / (2.0 * gamma * g.d2);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    x = next;
  }
  if (!converged) throw IterationLimitError("implicit h: Newton/bisection on x_*", lo, hi);
  g = g_value_derivs(pot, x);
  if (cache) cache->x = x;
  const double g3 = gamma * gamma * gamma;
  return {-x / gamma - 2.0 * g.value, x / (gamma * gamma), (0.5 / (gamma * g.d2) - 2.0 * x) / g3};
}

struct InnerMinimum {
  double gamma = 0.0;
  double k = 0.0;
  double k3 = 0.0;  // gamma^3 * d^2 k / d gamma^2
};

// Safeguarded Newton with bisection fallback on
//   k(gamma) = zx/gamma + z2 gamma - z3 log gamma + h(gamma),
// a convex function of gamma for log-concave potentials.
InnerMinimum minimize_k(const PotentialSpec& pot, double zx, double z2, double z3,
                        PotentialCache* cache) {
  struct Eval {
    double f;   // gamma^2 k_gamma
    double k3;  // gamma^3 k_gamma_gamma
    double scale;
    Derivs h;
  };
  auto eval = [&](double g) {
    Eval e;
    e.h = h_value_derivs(pot, g, cache);
    e.f = -zx - z3 * g + g * g * (z2 + e.h.d1);
    e.k3 = 2.0 * zx + g * z3 + g * g * g * e.h.d2;
    e.scale = zx + z3 * g + g * g * std::abs(z2 + e.h.d1);
    return e;
  };
  auto finish = [&](double g) {
    const Eval e = eval(g);
    if (cache) cache->gamma = g;
    return InnerMinimum{g, zx / g + z2 * g - z3 * std::log(g) + e.h.value, e.k3};
  };

  double lo = kGammaLo;
  double hi = kGammaHi;
  if (eval(lo).f >= 0.0) return finish(lo);
  if (eval(hi).f <= 0.0) return finish(hi);

  double g = 1.0;
  if (cache && cache->gamma > lo && cache->gamma < hi) {
    g = cache->gamma;
  } else if (zx > 0.0 && z2 > 0.0) {
    g = std::clamp(std::sqrt(zx / z2), lo * 10.0, hi / 10.0);
  }
  for (int it = 0; it < kMaxScalarIterations; ++it) {
    const Eval e = eval(g);
    if (std::abs(e.f) <= kStationarityTol * e.scale) return finish(g);
    if (e.f < 0.0) {
      lo = g;
    } else {
      hi = g;
    }
    if (hi / lo - 1.0 <= 1e-15) return finish(g);
    double next = e.k3 > 0.0 ? g - g * e.f / e.k3 : -1.0;
    if (!(next > lo && next < hi)) next = std::sqrt(lo * hi);
    g = next;
  }
  throw IterationLimitError("h*: Newton/bisection on gamma_*", lo, hi);
}

// theta_tilde, rho, kappa from the inner minimizer (generic relations).
PenaltyEval from_inner_minimum(const InnerMinimum& m, double x) {
  PenaltyEval out;
  out.gamma_star = m.gamma;
  out.hstar = 0.5 * m.k;
  out.theta_tilde = 1.0 / m.gamma;
  out.rho = (1.0 - 2.0 * x / m.k3) / m.gamma;
  out.kappa = std::sqrt(2.0 / (m.gamma * m.k3));
  return out;
}

PenaltyEval laplace_star(const PotentialSpec& pot, double x, const BoundCoefficients& bc,
                         PotentialCache* cache) {
  const double tau2 = pot.tau * pot.tau;
  PenaltyEval out;
  if (bc.z3 == 0.0) {
    const double q = std::sqrt(bc.z2 + tau2);
    const double p = bc.z1 + x;
    if (p == 0.0) return out;  // kink of q|s| at s = 0; kappa defined as 0
    const double sp = std::sqrt(p);
    out.gamma_star = sp / q;
    out.hstar = q * sp;
    out.theta_tilde = q / sp;
    out.rho = q * bc.z1 / (p * sp);
    out.kappa = std::sqrt(q / (p * sp));
    return out;
  }
  if (bc.z3 == 1.0 && bc.z1 == 0.0) {
    const double q = 2.0 * (bc.z2 + tau2);
    const double p = std::sqrt(1.0 + 2.0 * q * x);
    out.gamma_star = (p + 1.0) / q;
    out.hstar = 0.5 * (p - std::log(p + 1.0) + std::log(q));
    out.theta_tilde = q / (p + 1.0);
    out.rho = q / (p * (p + 1.0));
    out.kappa = std::sqrt(2.0 / p) * out.theta_tilde;
    return out;
  }
  return from_inner_minimum(minimize_k(pot, bc.z1 + x, bc.z2, bc.z3, cache), x);
}

PenaltyEval student_t_star(const PotentialSpec& pot, double x, const BoundCoefficients& bc) {
  if (!(bc.z2 > 0.0)) {
    throw DomainError("Student's t h*: z2 must include the positive h_cap slope");
  }
  const double nu1 = pot.nu + 1.0;
  const double alpha = pot.alpha();
  const double gamma0 = pot.gamma0();
  const double zx = bc.z1 + x;

  InnerMinimum m;
  const double gamma1 = std::sqrt((zx + alpha) / bc.z2);
  if (gamma1 >= gamma0) {
    const double c_const = -nu1 * (std::log(gamma0) + 1.0);
    m.gamma = gamma1;
    m.k = 2.0 * std::sqrt(bc.z2 * (zx + alpha)) + c_const;
    m.k3 = 2.0 * zx + 2.0 * alpha;
  } else {
    const double a = nu1 / gamma0;
    const double za = bc.z2 + a;
    const double c = za * zx;
    const double d = std::sqrt(nu1 * nu1 + c);
    m.gamma = (nu1 + d) / za;
    m.k = 2.0 * d + nu1 * (2.0 * std::log(za) - 2.0 * std::log(nu1 + d) + std::log(gamma0) - 1.0);
    m.k3 = 2.0 * zx + 2.0 * nu1 * m.gamma;
  }
  return from_inner_minimum(m, x);
}

PenaltyEval generic_star(const PotentialSpec& pot, double x, const BoundCoefficients& bc,
                         PotentialCache* cache) {
  if (bc.z2 == 0.0 && bc.z3 == 0.0) {
    const double p = bc.z1 + x;
    const Derivs g = g_value_derivs(pot, p);
    PenaltyEval out;
    out.hstar = -g.value;
    out.theta_tilde = -2.0 * g.d1;
    out.rho = -4.0 * g.d2 * x - 2.0 * g.d1;
    out.kappa = 2.0 * std::sqrt(g.d2);
    out.gamma_star = -0.5 / g.d1;
    return out;
  }
  return from_inner_minimum(minimize_k(pot, bc.z1 + x, bc.z2, bc.z3, cache), x);
}

PenaltyEval star_on_norm(const PotentialSpec& pot, double x, const BoundCoefficients& bc,
                         PotentialCache* cache) {
  switch (pot.kind) {
    case PotentialKind::Laplace:
      return laplace_star(pot, x, bc, cache);
    case PotentialKind::StudentT:
      return student_t_star(pot, x, bc);
    case PotentialKind::Bernoulli:
      return generic_star(pot, x, bc, cache);
  }
  throw UnsupportedError("unknown potential kind");
}

}  // namespace

const char* to_string(PotentialKind kind) {
  switch (kind) {
    case PotentialKind::Laplace:
      return "laplace";
    case PotentialKind::StudentT:
      return "student_t";
    case PotentialKind::Bernoulli:
      return "bernoulli";
  }
  return "unknown";
}

PotentialSpec PotentialSpec::laplace(double tau) {
  PotentialSpec p;
  p.kind = PotentialKind::Laplace;
  p.tau = tau;
  p.validate();
  return p;
}

PotentialSpec PotentialSpec::student_t(double nu, double tau) {
  PotentialSpec p;
  p.kind = PotentialKind::StudentT;
  p.nu = nu;
  p.tau = tau;
  p.validate();
  return p;
}

PotentialSpec PotentialSpec::student_t_matching_laplace(double nu, double tau_laplace) {
  if (!(nu > 2.0)) throw DomainError("variance matching needs nu > 2");
  const double alpha = 2.0 * (nu - 2.0) / (tau_laplace * tau_laplace);
  return student_t(nu, nu / alpha);
}

PotentialSpec PotentialSpec::bernoulli(int label, double tau) {
  PotentialSpec p;
  p.kind = PotentialKind::Bernoulli;
  p.y = label;
  p.tau = tau;
  p.b = 0.5 * label * tau;
  p.validate();
  return p;
}

void PotentialSpec::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("potential: tau must be positive");
  if (kind == PotentialKind::StudentT && !(nu > 0.0)) {
    throw DomainError("Student's t: nu must be positive");
  }
  if (kind == PotentialKind::Bernoulli) {
    if (y != 1 && y != -1) throw DomainError("Bernoulli: label must be +1 or -1");
    if (b != 0.5 * y * tau) throw DomainError("Bernoulli: b must equal y*tau/2");
  } else if (b != 0.0) {
    throw DomainError("even potential with nonzero b");
  }
}

double PotentialSpec::gamma0() const {
  switch (kind) {
    case PotentialKind::Laplace:
      return 0.0;
    case PotentialKind::StudentT:
      return alpha() / (nu + 1.0);
    case PotentialKind::Bernoulli:
      return 4.0 / (tau * tau);
  }
  return 0.0;
}

Derivs g_value_derivs(const PotentialSpec& pot, double x) {
  if (!(x >= 0.0)) throw DomainError("g(x): x must be nonnegative");
  switch (pot.kind) {
    case PotentialKind::Laplace: {
      if (x == 0.0) return {0.0, -kInf, kInf};
      const double r = std::sqrt(x);
      return {-pot.tau * r, -0.5 * pot.tau / r, 0.25 * pot.tau / (x * r)};
    }
    case PotentialKind::StudentT: {
      const double alpha = pot.alpha();
      const double c = 0.5 * (pot.nu + 1.0);
      const double ax = alpha + x;
      return {-c * std::log1p(x / alpha), -c / ax, c / (ax * ax)};
    }
    case PotentialKind::Bernoulli:
      return bernoulli_g(pot, x);
  }
  throw UnsupportedError("unknown potential kind");
}

Derivs h_value_derivs(const PotentialSpec& pot, double gamma, PotentialCache* cache) {
  if (!(gamma > 0.0)) throw DomainError("h(gamma): gamma must be positive");
  switch (pot.kind) {
    case PotentialKind::Laplace: {
      const double t2 = pot.tau * pot.tau;
      return {t2 * gamma, t2, 0.0};
    }
    case PotentialKind::StudentT: {
      const double gamma0 = pot.gamma0();
      if (gamma <= gamma0) return {0.0, 0.0, 0.0};
      const double alpha = pot.alpha();
      const double nu1 = pot.nu + 1.0;
      const double c = -nu1 * (std::log(gamma0) + 1.0);
      return {alpha / gamma + nu1 * std::log(gamma) + c,
              -alpha / (gamma * gamma) + nu1 / gamma,
              2.0 * alpha / (gamma * gamma * gamma) - nu1 / (gamma * gamma)};
    }
    case PotentialKind::Bernoulli:
      return implicit_h(pot, gamma, cache);
  }
  throw UnsupportedError("unknown potential kind");
}

void BoundCoefficients::validate() const {
  if (!(z1 >= 0.0) || !(z2 >= 0.0) || !(z3 >= 0.0)) {
    throw DomainError("bound coefficients must be nonnegative");
  }
  const bool type_a = z1 > 0.0 && z3 == 0.0;
  const bool type_b = z1 == 0.0 && z2 > 0.0 && z3 >= 1.0;
  if (!type_a && !type_b) {
    throw DomainError("bound coefficients: need (z1>0, z3=0) or (z1=0, z2>0, z3>=1)");
  }
}

PenaltyEval h_star(const PotentialSpec& pot, double s, const BoundCoefficients& bc,
                   PotentialCache* cache) {
  return h_star(pot, std::span<const double>(&s, 1), bc, cache);
}

PenaltyEval h_star(const PotentialSpec& pot, std::span<const double> s,
                   const BoundCoefficients& bc, PotentialCache* cache) {
  if (s.empty()) throw ShapeError("h*: empty group");
  if (s.size() > 1 && pot.b != 0.0) {
    throw UnsupportedError("h*: group potentials must be even (b = 0)");
  }
  double x = 0.0;
  for (double v : s) x += v * v;
  PenaltyEval out = star_on_norm(pot, x, bc, cache);
  if (s.size() == 1) {
    out.theta = out.theta_tilde * s[0] - pot.b;
  } else {
    out.theta = out.theta_tilde * std::sqrt(x);
  }
  return out;
}

StudentTSplit h_decompose_student_t(const PotentialSpec& pot, double gamma, double z3) {
  if (pot.kind != PotentialKind::StudentT) {
    throw UnsupportedError("h_cap/h_cup split is defined for Student's t only");
  }
  if (!(gamma > 0.0)) throw DomainError("h split: gamma must be positive");
  const double nu1 = pot.nu + 1.0;
  if (z3 > nu1) throw UnsupportedError("h split: z3 exceeds nu+1, h_cap would not be concave");
  const double alpha = pot.alpha();
  const double gamma0 = pot.gamma0();
  const double b = nu1 * std::log(gamma0);
  const double a = nu1 / gamma0;
  const double lg = std::log(gamma);
  StudentTSplit out;
  if (gamma >= gamma0) {
    const double c = -nu1 * (std::log(gamma0) + 1.0);
    out.h_cap = (nu1 - z3) * lg;
    out.h_cap_d1 = (nu1 - z3) / gamma;
    out.h_cup = alpha / gamma + c;
    out.h_cup_d1 = -alpha / (gamma * gamma);
    out.h_cup_d2 = 2.0 * alpha / (gamma * gamma * gamma);
  } else {
    out.h_cap = (2.0 * nu1 - z3) * lg - a * (gamma - gamma0) - b;
    out.h_cap_d1 = (2.0 * nu1 - z3) / gamma - a;
    out.h_cup = -2.0 * nu1 * lg + a * (gamma - gamma0) + b;
    out.h_cup_d1 = -2.0 * nu1 / gamma + a;
    out.h_cup_d2 = 2.0 * nu1 / (gamma * gamma);
  }
  return out;
}

double fenchel_gap(const PotentialSpec& pot, double x, std::span<const double> gamma_grid) {
  if (!(x >= 0.0)) throw DomainError("fenchel_gap: x must be nonnegative");
  if (gamma_grid.empty()) throw DomainError("fenchel_gap: empty gamma grid");
  PotentialCache cache;
  auto objective = [&](double gamma) { return x / gamma + h_value_derivs(pot, gamma, &cache).value; };

  std::size_t best = 0;
  double best_value = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < gamma_grid.size(); ++i) {
    const double v = objective(gamma_grid[i]);
    if (v < best_value) {
      best_value = v;
      best = i;
    }
  }
  if (gamma_grid.size() > 1) {
    const double lo = std::log(gamma_grid[best == 0 ? 0 : best - 1]);
    const double hi = std::log(gamma_grid[std::min(best + 1, gamma_grid.size() - 1)]);
    if (hi > lo) {
      auto in_log = [&](double t) { return objective(std::exp(t)); };
      const auto refined = boost::math::tools::brent_find_minima(in_log, lo, hi, 52);
      best_value = std::min(best_value, refined.second);
    }
  }
  return best_value + 2.0 * g_value_derivs(pot, x).value;
}

std::vector<double> log_grid(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi > lo) || count < 2) throw DomainError("log_grid: need 0 < lo < hi, count >= 2");
  std::vector<double> out(static_cast<std::size_t>(count));
  const double a = std::log(lo);
  const double step = (std::log(hi) - a) / (count - 1);
  for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = std::exp(a + step * i);
  out.back() = hi;
  return out;
}

}  // namespace slm
