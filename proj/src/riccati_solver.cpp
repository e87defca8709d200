#include "ree/riccati_solver.hpp"

#include <unsupported/Eigen/AutoDiff>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>

#include "ree/detail/equilibrium_terms.hpp"

namespace ree {

namespace {

constexpr int kUnknowns = 19;
constexpr int kLEntries = 15;
using VecN = Eigen::Matrix<double, kUnknowns, 1>;
using MatN = Eigen::Matrix<double, kUnknowns, kUnknowns>;
using AD = Eigen::AutoDiffScalar<VecN>;

// Upper-triangle (i <= j) entries of L in row-major order.
template <typename Scalar, typename Vec>
Eigen::Matrix<Scalar, 5, 5> unpack_L(const Vec& x) {
  Eigen::Matrix<Scalar, 5, 5> L;
  int k = 4;
  for (int i = 0; i < 5; ++i)
    for (int j = i; j < 5; ++j) {
      L(i, j) = x(k++);
      L(j, i) = L(i, j);
    }
  return L;
}

VecN pack(const PriceCoefficients& c, const Mat5& L) {
  VecN x;
  x(0) = c.p0;
  x(1) = c.pD0;
  x(2) = c.pD1;
  x(3) = c.pI;
  int k = 4;
  for (int i = 0; i < 5; ++i)
    for (int j = i; j < 5; ++j) x(k++) = L(i, j);
  return x;
}

PriceCoefficients coeffs_of(const VecN& x) { return {x(0), x(1), x(2), x(3)}; }

struct System {
  const ModelParams& p;
  SystemMatrices sys;

  template <typename Scalar>
  Eigen::Matrix<Scalar, kUnknowns, 1> residual(const Eigen::Matrix<Scalar, kUnknowns, 1>& x,
                                               Scalar* noise_gap = nullptr) const {
    Eigen::Matrix<Scalar, 1, 5> pbar;
    pbar << x(0), x(1), x(2), x(3), Scalar(1.0);
    const auto L = unpack_L<Scalar>(x);
    const auto l = detail::loadings<Scalar>(sys, p.effective_rate(), pbar);
    const auto b = detail::blocks<Scalar>(sys, p.r, l);
    const auto ric = detail::riccati<Scalar>(L, b);
    const auto psi = detail::demand<Scalar>(sys, p.r, p.phi, l, L);
    Eigen::Matrix<Scalar, kUnknowns, 1> f;
    int k = 0;
    for (int i = 0; i < 5; ++i)
      for (int j = i; j < 5; ++j) f(k++) = ric(i, j);
    f(k++) = psi(0) - Scalar(1.0);
    f(k++) = psi(1);
    f(k++) = psi(2);
    f(k++) = psi(3);
    if (noise_gap) *noise_gap = psi(4) - Scalar(1.0);
    return f;
  }

  VecN value(const VecN& x) const { return residual<double>(x); }

  VecN value_and_jacobian(const VecN& x, MatN& J) const {
    Eigen::Matrix<AD, kUnknowns, 1> ax;
    for (int i = 0; i < kUnknowns; ++i) ax(i) = AD(x(i), kUnknowns, i);
    const auto af = residual<AD>(ax);
    VecN f;
    for (int i = 0; i < kUnknowns; ++i) {
      f(i) = af(i).value();
      J.row(i) = af(i).derivatives().transpose();
    }
    return f;
  }
};

double inf_norm(const VecN& v) {
  return v.allFinite() ? v.cwiseAbs().maxCoeff() : std::numeric_limits<double>::infinity();
}

// 53-bit uniform draw in [0, 1), independent of the standard library's
// distribution implementation.
double unit_uniform(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

VecN random_start(const SolverConfig& c, int index) {
  std::seed_seq seq{static_cast<std::uint32_t>(c.rng_seed), static_cast<std::uint32_t>(c.rng_seed >> 32),
                    static_cast<std::uint32_t>(index)};
  std::mt19937_64 g(seq);
  VecN x;
  for (int i = 0; i < kUnknowns; ++i) {
    const Interval& box = i < 4 ? c.coeff_range : c.L_range;
    x(i) = box.lo + (box.hi - box.lo) * unit_uniform(g);
  }
  return x;
}

struct NewtonOutcome {
  VecN x;
  double residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  std::string stop;
};

NewtonOutcome damped_newton(const System& s, VecN x, const SolverConfig& c) {
  NewtonOutcome out;
  MatN J;
  VecN f = s.value_and_jacobian(x, J);
  double nf = inf_norm(f);
  out.stop = "max_iter";
  const double target = 0.01 * c.residual_tol;
  int it = 0;
  for (; it < c.newton_max_iter; ++it) {
    if (!std::isfinite(nf)) {
      out.stop = "non_finite";
      break;
    }
    if (nf < target) {
      out.stop = "converged";
      break;
    }
    Eigen::JacobiSVD<MatN> svd(J, Eigen::ComputeFullU | Eigen::ComputeFullV);
    svd.setThreshold(1e-12);
    const VecN dx = svd.solve(-f);
    double t = 1.0;
    bool improved = false;
    VecN xn, fn;
    double nn = 0.0;
    for (int k = 0; k < c.max_backtracks; ++k) {
      xn = x + t * dx;
      fn = s.value(xn);
      nn = inf_norm(fn);
      if (nn < nf) {
        improved = true;
        break;
      }
      t *= 0.5;
    }
    if (!improved) {
      out.stop = "stalled";
      break;
    }
    x = xn;
    f = s.value_and_jacobian(x, J);
    nf = inf_norm(f);
  }
  out.x = x;
  out.residual = nf;
  out.iterations = it;
  return out;
}

double jacobian_rcond(const System& s, const VecN& x) {
  MatN J;
  s.value_and_jacobian(x, J);
  Eigen::JacobiSVD<MatN> svd(J);
  const auto& sv = svd.singularValues();
  return sv(0) > 0.0 ? sv(kUnknowns - 1) / sv(0) : 0.0;
}

bool passes(const CandidateEquilibrium& c, double tol) {
  return c.coeffs.finite() && c.L.allFinite() && std::isfinite(c.essential_utility) && c.T_value > 0.0 &&
         c.riccati_residual_norm <= tol && c.clearing_residual_norm <= tol;
}

double distance(const CandidateEquilibrium& a, const CandidateEquilibrium& b) {
  return inf_norm(pack(a.coeffs, a.L) - pack(b.coeffs, b.L));
}

}  // namespace

void SolverConfig::validate() const {
  if (n_starts < 1) throw std::invalid_argument("solver: n_starts must be >= 1");
  if (!(residual_tol > 0.0)) throw std::invalid_argument("solver: residual_tol must be positive");
  if (!(dedupe_tol > 0.0)) throw std::invalid_argument("solver: dedupe_tol must be positive");
  if (!(classify_tol > 0.0)) throw std::invalid_argument("solver: classify_tol must be positive");
  if (newton_max_iter < 1 || max_backtracks < 1)
    throw std::invalid_argument("solver: iteration limits must be >= 1");
  if (!(coeff_range.lo < coeff_range.hi) || !(L_range.lo < L_range.hi))
    throw std::invalid_argument("solver: empty start box");
}

RiccatiBlocks build_riccati_blocks(const ModelParams& params, const PriceCoefficients& coeffs) {
  const SystemMatrices sys = build_system_matrices(params);
  const auto l = detail::loadings<double>(sys, params.effective_rate(), coeffs.row());
  if (!std::isfinite(l.T)) throw std::invalid_argument("build_riccati_blocks: non-finite T");
  const auto b = detail::blocks<double>(sys, params.r, l);
  return RiccatiBlocks{b.U, b.X, b.Y};
}

Mat5 riccati_residual(const Mat5& L, const RiccatiBlocks& b) {
  return L * b.U * L - L * b.X - b.X.transpose() * L - b.Y;
}

Vec5 clearing_residual(const ModelParams& params, const PriceCoefficients& coeffs, const Mat5& L) {
  const SystemMatrices sys = build_system_matrices(params);
  const auto l = detail::loadings<double>(sys, params.effective_rate(), coeffs.row());
  if (!(l.T > 0.0)) throw std::invalid_argument("clearing_residual: T must be positive");
  Vec5 psi = detail::demand<double>(sys, params.r, params.phi, l, L).transpose();
  psi(0) -= 1.0;
  psi(4) -= 1.0;
  return psi;
}

double lambda_closed_form(const ModelParams& params, const Mat5& L) {
  if (!(params.r > 0.0)) throw std::invalid_argument("lambda: r must be positive");
  const Mat54 B = build_system_matrices(params).Bhalf;
  const double tr = (B.transpose() * L * B).trace();
  return params.beta / params.r - 1.0 + std::log(params.r) + tr / (2.0 * params.r);
}

double essential_utility(const Mat5& L, double lambda) { return lambda + 0.5 * L(0, 0); }

double optimal_consumption(const ModelParams& params, const Mat5& L, double lambda, const StateVector& z,
                           double wealth) {
  if (!(params.phi > 0.0)) throw std::invalid_argument("consumption: phi must be positive");
  const Vec5& v = z.z();
  const double quad = 0.5 * v.dot(L * v);
  return (quad + params.r * params.phi * wealth + lambda - std::log(params.r)) / params.phi;
}

CandidateEquilibrium evaluate_candidate(const ModelParams& params, const PriceCoefficients& coeffs,
                                        const Mat5& L, double classify_tol) {
  CandidateEquilibrium c;
  c.coeffs = coeffs;
  c.L = L;
  const SystemMatrices sys = build_system_matrices(params);
  const auto l = detail::loadings<double>(sys, params.effective_rate(), coeffs.row());
  c.T_value = l.T;
  c.riccati_residual_norm = riccati_residual(L, build_riccati_blocks(params, coeffs)).cwiseAbs().maxCoeff();
  if (l.T > 0.0) {
    const Vec5 cl = clearing_residual(params, coeffs, L);
    c.clearing_residual_norm = cl.head<4>().cwiseAbs().maxCoeff();
    c.noise_clearing_gap = cl(4);
  } else {
    c.clearing_residual_norm = std::numeric_limits<double>::infinity();
    c.noise_clearing_gap = std::numeric_limits<double>::quiet_NaN();
  }
  c.lambda = lambda_closed_form(params, L);
  c.essential_utility = essential_utility(L, c.lambda);
  c.cls = classify(coeffs, params, classify_tol, ClassifyBasis::SlopesOnly);
  return c;
}

std::optional<CandidateEquilibrium> solve_from(const ModelParams& params, const PriceCoefficients& coeffs,
                                               const Mat5& L, const SolverConfig& config,
                                               StartDiagnostics* diag) {
  const System s{params, build_system_matrices(params)};
  const NewtonOutcome n = damped_newton(s, pack(coeffs, L), config);
  if (diag) {
    diag->iterations = n.iterations;
    diag->final_residual = n.residual;
    diag->outcome = n.stop;
    diag->converged = false;
  }
  if (!(n.residual <= config.residual_tol)) return std::nullopt;
  const Mat5 Lx = unpack_L<double>(n.x);
  CandidateEquilibrium c = evaluate_candidate(params, coeffs_of(n.x), Lx, config.classify_tol);
  if (!passes(c, config.residual_tol)) {
    if (diag) diag->outcome = c.T_value > 0.0 ? "recheck_failed" : "nonpositive_T";
    return std::nullopt;
  }
  c.jacobian_rcond = jacobian_rcond(s, n.x);
  c.isolated = c.jacobian_rcond > config.isolation_rcond;
  if (diag) diag->converged = true;
  return c;
}

SolveReport solve_candidates_with_diagnostics(const ModelParams& params, const SolverConfig& config) {
  params.validate();
  config.validate();
  const int extra = config.closed_form_start ? 1 : 0;
  const int total = config.n_starts + extra;

  std::vector<std::optional<CandidateEquilibrium>> found(total);
  std::vector<StartDiagnostics> diags(total);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < total; i = next++) {
      diags[i].start_index = i;
      PriceCoefficients c0;
      Mat5 L0 = Mat5::Zero();
      if (i < extra) {
        c0 = efficient_coefficients(params);
      } else {
        const VecN x = random_start(config, i - extra);
        c0 = coeffs_of(x);
        L0 = unpack_L<double>(x);
      }
      found[i] = solve_from(params, c0, L0, config, &diags[i]);
    }
  };
  unsigned n_threads = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(total));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }

  // Aggregation in start order keeps the output independent of scheduling.
  SolveReport report;
  for (int i = 0; i < total; ++i) {
    if (!found[i]) continue;
    auto dup = std::find_if(report.candidates.begin(), report.candidates.end(), [&](const auto& c) {
      return distance(c, *found[i]) < config.dedupe_tol;
    });
    if (dup != report.candidates.end()) {
      ++dup->hits;
      diags[i].outcome = "duplicate";
      continue;
    }
    found[i]->hits = 1;
    found[i]->first_start = i;
    report.candidates.push_back(*found[i]);
  }
  std::stable_sort(report.candidates.begin(), report.candidates.end(),
                   [](const auto& a, const auto& b) { return a.essential_utility > b.essential_utility; });
  report.starts = std::move(diags);
  return report;
}

std::vector<CandidateEquilibrium> solve_candidates(const ModelParams& params, const SolverConfig& config) {
  return solve_candidates_with_diagnostics(params, config).candidates;
}

std::string to_string(Dominance d) {
  switch (d) {
    case Dominance::TypeA: return "TypeA";
    case Dominance::TypeB: return "TypeB";
    default: return "none";
  }
}

SweepRecord summarize_node(double phi, double sigma_Theta, const std::vector<CandidateEquilibrium>& cands) {
  SweepRecord rec;
  rec.phi = phi;
  rec.sigma_Theta = sigma_Theta;
  rec.n_candidates = cands.size();
  for (const auto& c : cands) {
    auto& slot = c.cls.tag == EquilibriumType::TypeA ? rec.best_typeA_utility : rec.best_typeB_utility;
    if (!slot || c.essential_utility > *slot) slot = c.essential_utility;
  }
  if (!cands.empty())
    rec.dominant = cands.front().cls.tag == EquilibriumType::TypeA ? Dominance::TypeA : Dominance::TypeB;
  return rec;
}

std::vector<SweepRecord> sweep(const ModelParams& base, const std::vector<double>& phi_grid,
                               const std::vector<double>& sigma_theta_grid, const SolverConfig& config) {
  if (phi_grid.empty() || sigma_theta_grid.empty()) throw std::invalid_argument("sweep: empty grid");
  std::vector<SweepRecord> out;
  for (double phi : phi_grid) {
    for (double st : sigma_theta_grid) {
      ModelParams p = base;
      p.phi = phi;
      p.sigma_Theta = st;
      try {
        out.push_back(summarize_node(phi, st, solve_candidates(p, config)));
      } catch (const std::exception& e) {
        SweepRecord rec;
        rec.phi = phi;
        rec.sigma_Theta = st;
        rec.error = e.what();
        out.push_back(rec);
      }
    }
  }
  return out;
}

}  // namespace ree
