#include "ree/estimation.hpp"

#include <gsl/gsl_cdf.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <stdexcept>

#include "ree/efficient_price.hpp"

namespace ree {

const std::array<const char*, Theta::kSize>& Theta::names() {
  static const std::array<const char*, kSize> n{"alpha_D", "alpha_I", "alpha_Theta", "sigma_0",
                                                "sigma_D", "sigma_Theta", "rho_I"};
  return n;
}

std::array<double, Theta::kSize> Theta::to_array() const {
  return {alpha_D, alpha_I, alpha_Theta, sigma_0, sigma_D, sigma_Theta, rho_I};
}

Theta Theta::from_array(const std::array<double, kSize>& a) {
  return Theta{a[0], a[1], a[2], a[3], a[4], a[5], a[6]};
}

KalmanOptions default_estimation_kalman() {
  KalmanOptions k;
  k.diffuse_mask = permanent_dividend_mask();
  return k;
}

ModelParams params_from_theta(const Theta& th, double r, double xi) {
  ModelParams p;
  p.r = r;
  p.xi = xi;
  p.alpha_D = th.alpha_D;
  p.alpha_I = th.alpha_I;
  p.alpha_Theta = th.alpha_Theta;
  p.sigma_0 = th.sigma_0;
  p.sigma_D = th.sigma_D;
  p.sigma_Theta = th.sigma_Theta;
  p.sigma_I = std::sqrt(2.0 * th.rho_I) * th.sigma_0;
  return p;
}

std::string to_string(EstimationMode m) {
  return m == EstimationMode::TypeAConstrained ? "typeA" : "typeB";
}

std::string to_string(Rejection r) {
  switch (r) {
    case Rejection::At5: return "reject at 5%";
    case Rejection::At1: return "reject at 1%";
    case Rejection::At01: return "reject at 0.1%";
    default: return "no rejection";
  }
}

void EstimationSpec::validate() const {
  auto in = [](double v, const Bound& b) { return v >= b.lo && v <= b.hi; };
  if (!(bounds.alpha.lo > 0.0) || !(bounds.sigma.lo > 0.0) || bounds.rho.lo < 0.0 || bounds.rho.hi > 2.0)
    throw std::invalid_argument("estimation: bounds must keep alphas, sigmas positive and rho in [0, 2]");
  const Theta& t = theta_init;
  if (!in(t.alpha_D, bounds.alpha) || !in(t.alpha_I, bounds.alpha) || !in(t.alpha_Theta, bounds.alpha) ||
      !in(t.sigma_0, bounds.sigma) || !in(t.sigma_D, bounds.sigma) || !in(t.sigma_Theta, bounds.sigma) ||
      !in(t.rho_I, bounds.rho))
    throw std::invalid_argument("estimation: initial theta outside bounds");
  if (!(rate.r > xi)) throw std::invalid_argument("estimation: rate must exceed xi");
  if (optimizer.max_evals < 1 || optimizer.restarts < 0 || !(optimizer.tol > 0.0))
    throw std::invalid_argument("estimation: invalid optimizer settings");
}

PriceCoefficients mode_coefficients(EstimationMode mode, const Theta& theta, double r, double xi,
                                    const PriceCoefficients& free_coeffs) {
  if (mode == EstimationMode::TypeBFree) return free_coeffs;
  PriceCoefficients c = efficient_coefficients(params_from_theta(theta, r, xi));
  c.p0 = free_coeffs.p0;
  return c;
}

double evaluate_loglik(const ObservationSeries& series, const Theta& theta, double r, double xi,
                       const PriceCoefficients& coeffs, const KalmanOptions& opt) {
  const ModelParams p = params_from_theta(theta, r, xi);
  return kalman_loglik(exact_discretize(p, coeffs, series.dt()), series, opt);
}

namespace {

// Maps an unconstrained coordinate onto a box.
struct Transform {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool bounded() const { return std::isfinite(lo) && std::isfinite(hi); }
  double to_x(double u) const { return bounded() ? lo + (hi - lo) / (1.0 + std::exp(-u)) : u; }
  double to_u(double x) const {
    if (!bounded()) return x;
    const double w = hi - lo;
    const double s = std::clamp((x - lo) / w, 1e-9, 1.0 - 1e-9);
    return std::log(s / (1.0 - s));
  }
  double step(double x) const { return bounded() ? 0.5 : 0.1 * std::max(std::abs(x), 1.0); }
};

struct Problem {
  const ObservationSeries& series;
  const EstimationSpec& spec;
  Eigen::MatrixXd y;
  std::vector<Transform> tf;
  int n_evals = 0;

  std::size_t rate_slot() const { return Theta::kSize; }
  std::size_t coeff_slot() const { return Theta::kSize + (spec.rate.free ? 1 : 0); }

  struct Point {
    Theta theta;
    double r;
    PriceCoefficients coeffs;
  };

  Point decode(const std::vector<double>& x) const {
    Point pt;
    std::array<double, Theta::kSize> a{};
    for (std::size_t i = 0; i < Theta::kSize; ++i) a[i] = x[i];
    pt.theta = Theta::from_array(a);
    pt.r = spec.rate.free ? x[rate_slot()] : spec.rate.r;
    PriceCoefficients free{};
    const std::size_t k = coeff_slot();
    free.p0 = x[k];
    if (spec.mode == EstimationMode::TypeBFree) {
      free.pD0 = x[k + 1];
      free.pD1 = x[k + 2];
      free.pI = x[k + 3];
    }
    pt.coeffs = mode_coefficients(spec.mode, pt.theta, pt.r, spec.xi, free);
    return pt;
  }

  std::vector<double> to_x(const gsl_vector* u) const {
    std::vector<double> x(tf.size());
    for (std::size_t i = 0; i < tf.size(); ++i) x[i] = tf[i].to_x(gsl_vector_get(u, i));
    return x;
  }

  double loglik(const std::vector<double>& x) const {
    const Point pt = decode(x);
    const ModelParams p = params_from_theta(pt.theta, pt.r, spec.xi);
    return kalman_loglik(exact_discretize(p, pt.coeffs, series.dt()), y, spec.kalman);
  }

  double objective(const gsl_vector* u) {
    ++n_evals;
    try {
      const double ll = loglik(to_x(u));
      return std::isfinite(ll) ? -ll : kPenalty;
    } catch (const std::exception&) {
      return kPenalty;
    }
  }

  static constexpr double kPenalty = 1e300;
};

double gsl_objective(const gsl_vector* u, void* ctx) { return static_cast<Problem*>(ctx)->objective(u); }

struct MinimizerDeleter {
  void operator()(gsl_multimin_fminimizer* m) const { gsl_multimin_fminimizer_free(m); }
};
struct VectorDeleter {
  void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};
using VectorPtr = std::unique_ptr<gsl_vector, VectorDeleter>;

struct RunOutcome {
  std::vector<double> u;
  double value = 0.0;
  bool converged = false;
};

RunOutcome nelder_mead(Problem& prob, const std::vector<double>& u0, const std::vector<double>& steps,
                       const OptimizerSettings& s) {
  const std::size_t n = u0.size();
  gsl_multimin_function fn{&gsl_objective, n, &prob};
  VectorPtr x(gsl_vector_alloc(n)), ss(gsl_vector_alloc(n));
  for (std::size_t i = 0; i < n; ++i) {
    gsl_vector_set(x.get(), i, u0[i]);
    gsl_vector_set(ss.get(), i, steps[i]);
  }
  std::unique_ptr<gsl_multimin_fminimizer, MinimizerDeleter> m(
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n));
  RunOutcome out;
  if (gsl_multimin_fminimizer_set(m.get(), &fn, x.get(), ss.get()) != GSL_SUCCESS) {
    out.u = u0;
    out.value = Problem::kPenalty;
    return out;
  }
  const int start_evals = prob.n_evals;
  while (prob.n_evals - start_evals < s.max_evals) {
    if (gsl_multimin_fminimizer_iterate(m.get()) != GSL_SUCCESS) break;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(m.get()), s.tol) == GSL_SUCCESS) {
      out.converged = true;
      break;
    }
  }
  const gsl_vector* best = gsl_multimin_fminimizer_x(m.get());
  out.u.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.u[i] = gsl_vector_get(best, i);
  out.value = gsl_multimin_fminimizer_minimum(m.get());
  return out;
}

}  // namespace

EstimationResult estimate_ml(const ObservationSeries& series, const EstimationSpec& spec) {
  spec.validate();
  series.validate();
  gsl_set_error_handler_off();

  Problem prob{series, spec, series.as_matrix(), {}, 0};
  const auto& b = spec.bounds;
  prob.tf = {{b.alpha.lo, b.alpha.hi}, {b.alpha.lo, b.alpha.hi}, {b.alpha.lo, b.alpha.hi},
             {b.sigma.lo, b.sigma.hi}, {b.sigma.lo, b.sigma.hi}, {b.sigma.lo, b.sigma.hi},
             {b.rho.lo, b.rho.hi}};
  if (spec.rate.free) prob.tf.push_back({spec.xi + b.rate_excess.lo, spec.xi + b.rate_excess.hi});
  const int n_coeffs = spec.mode == EstimationMode::TypeBFree ? 4 : 1;
  for (int i = 0; i < n_coeffs; ++i) prob.tf.push_back(Transform{});

  auto encode = [&](const StartPoint& sp) {
    std::vector<double> x;
    for (double v : sp.theta.to_array()) x.push_back(v);
    if (spec.rate.free) x.push_back(sp.r);
    x.push_back(sp.coeffs.p0);
    if (spec.mode == EstimationMode::TypeBFree) {
      x.push_back(sp.coeffs.pD0);
      x.push_back(sp.coeffs.pD1);
      x.push_back(sp.coeffs.pI);
    }
    std::vector<double> u(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) u[i] = prob.tf[i].to_u(x[i]);
    return std::make_pair(x, u);
  };

  const auto [x0, u0] = encode({spec.theta_init, spec.rate.r, spec.coeff_init});
  const std::size_t n = x0.size();
  std::vector<double> steps(n);
  for (std::size_t i = 0; i < n; ++i) steps[i] = prob.tf[i].step(x0[i]);

  RunOutcome best = nelder_mead(prob, u0, steps, spec.optimizer);
  for (const auto& sp : spec.extra_starts) {
    RunOutcome run = nelder_mead(prob, encode(sp).second, steps, spec.optimizer);
    if (run.value < best.value) best = run;
  }
  std::mt19937_64 gen(spec.optimizer.seed);
  std::normal_distribution<double> jitter(0.0, 0.25);
  for (int k = 0; k < spec.optimizer.restarts; ++k) {
    std::vector<double> start = best.u;
    for (std::size_t i = 0; i < n; ++i) start[i] += jitter(gen) * steps[i];
    RunOutcome run = nelder_mead(prob, start, steps, spec.optimizer);
    if (run.value < best.value) best = run;
  }
  // Final polish from the incumbent with a fresh simplex.
  RunOutcome polish = nelder_mead(prob, best.u, steps, spec.optimizer);
  if (polish.value <= best.value) best = polish;
  else best.converged = polish.converged;

  std::vector<double> xb(n);
  for (std::size_t i = 0; i < n; ++i) xb[i] = prob.tf[i].to_x(best.u[i]);
  const Problem::Point pt = prob.decode(xb);

  EstimationResult res;
  res.mode = spec.mode;
  res.rate_free = spec.rate.free;
  res.theta_hat = pt.theta;
  res.r_hat = pt.r;
  res.coeffs_hat = pt.coeffs;
  res.converged = best.converged && best.value < Problem::kPenalty;
  res.n_evals = prob.n_evals;
  try {
    res.loglik = prob.loglik(xb);
    const ModelParams p = params_from_theta(pt.theta, pt.r, spec.xi);
    res.filtered_states = filter_states(exact_discretize(p, pt.coeffs, series.dt()), series, spec.kalman);
  } catch (const std::exception&) {
    res.loglik = -std::numeric_limits<double>::infinity();
    res.converged = false;
  }
  return res;
}

std::array<double, 3> chi2_critical_values(int dof) {
  if (dof < 1) throw std::invalid_argument("chi-square: dof must be >= 1");
  if (dof == 3) return {7.82, 11.35, 16.27};
  const double k = static_cast<double>(dof);
  return {gsl_cdf_chisq_Qinv(0.05, k), gsl_cdf_chisq_Qinv(0.01, k), gsl_cdf_chisq_Qinv(0.001, k)};
}

LrTestResult lr_test(double loglik_A, double loglik_B, int dof) {
  LrTestResult out;
  out.dof = dof;
  out.statistic = 2.0 * (loglik_B - loglik_A);
  out.thresholds = chi2_critical_values(dof);
  if (out.statistic >= out.thresholds[2]) out.decision = Rejection::At01;
  else if (out.statistic >= out.thresholds[1]) out.decision = Rejection::At1;
  else if (out.statistic >= out.thresholds[0]) out.decision = Rejection::At5;
  return out;
}

}  // namespace ree
