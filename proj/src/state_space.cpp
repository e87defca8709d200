#include "ree/state_space.hpp"

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>

namespace ree {

namespace {

constexpr int kOrder[4] = {kD0, kInfo, kD1, kNoise};

// Steps taken while the covariance still carries a large diffuse prior cancel
// about log10(max |P|) digits, so they run in extended precision. So does the
// whole pass when a step's rounding estimate, eps * cond(f) * |increment|, is too large.
constexpr double kExtendedPrecisionAbove = 1e4;
constexpr double kDoubleStepErrorBudget = 1e-10;

template <typename Real, int N, int M>
struct KalmanState {
  using VecN = Eigen::Matrix<Real, N, 1>;
  using MatN = Eigen::Matrix<Real, N, N>;
  using VecM = Eigen::Matrix<Real, M, 1>;
  using MatM = Eigen::Matrix<Real, M, M>;
  using MatMN = Eigen::Matrix<Real, M, N>;

  MatN F, Omega;
  MatMN H;
  VecM c;
  VecN a;
  MatN P;
  Real condition = 1;  // of the latest innovation covariance

  explicit KalmanState(const StateSpaceModel& model)
      : F(model.F.cast<Real>()),
        Omega(model.Omega.cast<Real>()),
        H(model.H.cast<Real>()),
        c(model.measurement_intercept.cast<Real>()) {}

  // Predict (except at t = 0) and update; returns the log-density increment.
  Real step(const Eigen::MatrixXd& y, Eigen::Index t, bool include_constant) {
    const auto m = H.rows();
    if (t > 0) {
      a = F * a;
      P = F * P * F.transpose() + Omega;
    }
    const VecM v = y.col(t).cast<Real>() - c - H * a;
    MatM f = H * P * H.transpose();
    f = (Real(0.5) * (f + f.transpose())).eval();
    Eigen::LLT<MatM> llt(f);
    if (llt.info() != Eigen::Success || !f.allFinite())
      throw std::domain_error("kalman: innovation covariance not positive definite at t = " +
                              std::to_string(t + 1));
    const auto& Lf = llt.matrixL();
    Real logdet = 0;
    for (Eigen::Index i = 0; i < m; ++i) logdet += 2 * std::log(Lf(i, i));
    const auto diag = Lf.nestedExpression().diagonal();
    condition = diag.maxCoeff() / diag.minCoeff();
    condition *= condition;
    const VecM fv = llt.solve(v);
    Real inc = -(logdet + v.dot(fv)) / 2;
    if (include_constant) inc -= static_cast<Real>(m) * std::log(2 * std::numbers::pi_v<Real>) / 2;

    const Eigen::Matrix<Real, N, M> PHt = P * H.transpose();
    a += PHt * fv;
    // Joseph form: gain errors enter quadratically, so a collapsing diffuse
    // prior does not leave kappa-scale cancellation residue in P.
    const Eigen::Matrix<Real, M, N> Kt = llt.solve(PHt.transpose());
    const MatN A = MatN::Identity(P.rows(), P.cols()) - Kt.transpose() * H;
    P = A * P * A.transpose();
    P = (Real(0.5) * (P + P.transpose())).eval();
    return inc;
  }
};

// Visitor receives the filtered mean and covariance at every step. Returns
// nothing when a double-precision step is too ill-conditioned to trust.
template <int N, int M, typename Visit>
std::optional<double> run_core(const StateSpaceModel& model, const Eigen::MatrixXd& y, const KalmanOptions& opt,
                               bool extended_only, Visit&& visit) {
  const auto n = model.state_dim();
  const Eigen::MatrixXd P1 = initial_covariance(model, opt);
  long double ll = 0;
  Eigen::Index t = 0;
  KalmanState<double, N, M> st(model);
  st.a = KalmanState<double, N, M>::VecN::Zero(n);
  st.P = P1;
  if (extended_only || P1.cwiseAbs().maxCoeff() > kExtendedPrecisionAbove) {
    KalmanState<long double, N, M> ext(model);
    ext.a = st.a.template cast<long double>();
    ext.P = P1.cast<long double>();
    bool large = true;
    for (; t < y.cols() && (extended_only || large); ++t) {
      ll += ext.step(y, t, opt.include_constant);
      const Eigen::Matrix<double, N, 1> a = ext.a.template cast<double>();
      const Eigen::Matrix<double, N, N> P = ext.P.template cast<double>();
      visit(a, P);
      large = ext.P.cwiseAbs().maxCoeff() > kExtendedPrecisionAbove;
    }
    st.a = ext.a.template cast<double>();
    st.P = ext.P.template cast<double>();
  }
  double tail = 0.0;
  for (; t < y.cols(); ++t) {
    const double inc = st.step(y, t, opt.include_constant);
    if (std::numeric_limits<double>::epsilon() * st.condition * (std::abs(inc) + 1.0) > kDoubleStepErrorBudget)
      return std::nullopt;
    tail += inc;
    visit(st.a, st.P);
  }
  return static_cast<double>(ll + tail);
}

// Restart is called before an extended-precision rerun replays every step.
template <typename Visit, typename Restart>
double run_filter(const StateSpaceModel& model, const Eigen::MatrixXd& y, const KalmanOptions& opt,
                  Visit&& visit, Restart&& restart) {
  model.validate();
  if (y.rows() != model.obs_dim()) throw std::invalid_argument("kalman: observation dimension mismatch");
  if (y.cols() < 1) throw std::invalid_argument("kalman: empty series");
  const bool fixed = model.state_dim() == 4 && model.obs_dim() == 2;
  const auto pass = [&](bool extended_only) {
    return fixed ? run_core<4, 2>(model, y, opt, extended_only, visit)
                 : run_core<Eigen::Dynamic, Eigen::Dynamic>(model, y, opt, extended_only, visit);
  };
  if (const auto ll = pass(false)) return *ll;
  restart();
  return *pass(true);
}

}  // namespace

void StateSpaceModel::validate() const {
  const auto n = F.rows();
  if (F.cols() != n || Omega.rows() != n || Omega.cols() != n || H.cols() != n ||
      measurement_intercept.size() != H.rows() || n < 1 || H.rows() < 1)
    throw std::invalid_argument("state-space model: inconsistent dimensions");
}

std::vector<bool> permanent_dividend_mask() { return {true, false, false, false}; }

Eigen::MatrixXd stationary_covariance(const Eigen::MatrixXd& F, const Eigen::MatrixXd& Omega) {
  const auto n = F.rows();
  const Eigen::MatrixXd K = Eigen::MatrixXd::Identity(n * n, n * n) - Eigen::kroneckerProduct(F, F).eval();
  const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(Omega.data(), n * n);
  const Eigen::VectorXd v = K.fullPivLu().solve(w);
  Eigen::MatrixXd V = Eigen::Map<const Eigen::MatrixXd>(v.data(), n, n);
  return 0.5 * (V + V.transpose());
}

Eigen::MatrixXd initial_covariance(const StateSpaceModel& model, const KalmanOptions& opt) {
  const auto n = model.state_dim();
  if (opt.diffuse_mask.empty())
    return Eigen::MatrixXd::Identity(n, n) * opt.diffuse_variance + model.Omega;
  if (static_cast<Eigen::Index>(opt.diffuse_mask.size()) != n)
    throw std::invalid_argument("kalman: diffuse mask size mismatch");
  std::vector<Eigen::Index> diff, stat;
  for (Eigen::Index i = 0; i < n; ++i)
    (opt.diffuse_mask[static_cast<std::size_t>(i)] ? diff : stat).push_back(i);
  const auto k = static_cast<Eigen::Index>(stat.size());
  Eigen::MatrixXd Fss(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) Fss(i, j) = model.F(stat[i], stat[j]);

  // Basis whose masked columns are the unit-root directions: a stationary
  // state mean-reverting towards a masked one drifts along with it.
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n, n);
  if (k > 0) {
    const Eigen::MatrixXd Iss = Eigen::MatrixXd::Identity(k, k);
    const auto lu = (Fss - Iss).fullPivLu();
    for (const auto d : diff) {
      Eigen::VectorXd rhs(k);
      for (Eigen::Index i = 0; i < k; ++i) rhs(i) = -model.F(stat[i], d);
      const Eigen::VectorXd u = lu.solve(rhs);
      for (Eigen::Index i = 0; i < k; ++i) M(stat[i], d) = u(i);
    }
  }
  const Eigen::MatrixXd Minv = M.inverse();
  const Eigen::MatrixXd Ft = Minv * model.F * M;
  const Eigen::MatrixXd Ot = Minv * model.Omega * Minv.transpose();
  Eigen::MatrixXd Fs(k, k), Os(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) {
      Fs(i, j) = Ft(stat[i], stat[j]);
      Os(i, j) = Ot(stat[i], stat[j]);
    }
  const Eigen::MatrixXd Vs = k > 0 ? stationary_covariance(Fs, Os) : Eigen::MatrixXd();
  Eigen::MatrixXd Pt = Eigen::MatrixXd::Zero(n, n);
  for (const auto d : diff) Pt(d, d) = opt.diffuse_variance;
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) Pt(stat[i], stat[j]) = Vs(i, j);
  const Eigen::MatrixXd P = M * Pt * M.transpose();
  return 0.5 * (P + P.transpose());
}

Eigen::Matrix4d continuous_drift(const ModelParams& p) {
  const Mat5 A = build_system_matrices(p).A;
  Eigen::Matrix4d out;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) out(i, j) = A(kOrder[i], kOrder[j]);
  return out;
}

Eigen::Matrix4d diffusion_covariance(const ModelParams& p) {
  const Mat54 B = build_system_matrices(p).Bhalf;
  const Mat5 S = B * B.transpose();
  Eigen::Matrix4d out;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) out(i, j) = S(kOrder[i], kOrder[j]);
  return out;
}

void discretize_ou(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Sigma, double dt, Eigen::MatrixXd& F,
                   Eigen::MatrixXd& Omega) {
  if (!(dt > 0.0)) throw std::invalid_argument("discretize: dt must be positive");
  const auto n = A.rows();
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  C.topLeftCorner(n, n) = -A * dt;
  C.topRightCorner(n, n) = Sigma * dt;
  C.bottomRightCorner(n, n) = A.transpose() * dt;
  const Eigen::MatrixXd G = C.exp();
  F = G.bottomRightCorner(n, n).transpose();
  Omega = F * G.topRightCorner(n, n);
  Omega = 0.5 * (Omega + Omega.transpose()).eval();
}

StateSpaceModel exact_discretize(const ModelParams& params, const PriceCoefficients& coeffs, double dt) {
  StateSpaceModel m;
  m.dt = dt;
  discretize_ou(continuous_drift(params), diffusion_covariance(params), dt, m.F, m.Omega);
  m.measurement_intercept = Eigen::Vector2d(coeffs.p0, 0.0);
  m.H.resize(2, 4);
  m.H << coeffs.pD0, coeffs.pI, coeffs.pD1, 1.0,
         1.0, 0.0, 1.0, 0.0;
  return m;
}

double ObservationSeries::dt() const {
  if (times.size() < 2) return 1.0;
  return (times.back() - times.front()) / static_cast<double>(times.size() - 1);
}

void ObservationSeries::validate() const {
  if (times.empty()) throw std::invalid_argument("series: no observations");
  if (price.size() != times.size() || dividend.size() != times.size())
    throw std::invalid_argument("series: column lengths differ");
  for (std::size_t i = 0; i < times.size(); ++i)
    if (!std::isfinite(times[i]) || !std::isfinite(price[i]) || !std::isfinite(dividend[i]))
      throw std::invalid_argument("series: missing or non-finite value at row " + std::to_string(i + 1));
  const double h = dt();
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double step = times[i] - times[i - 1];
    if (!(step > 0.0)) throw std::invalid_argument("series: times not strictly increasing");
    if (std::abs(step - h) > 1e-6 * std::max(1.0, h))
      throw std::invalid_argument("series: unequal spacing at row " + std::to_string(i + 1));
  }
}

Eigen::MatrixXd ObservationSeries::as_matrix() const {
  Eigen::MatrixXd y(2, static_cast<Eigen::Index>(size()));
  for (std::size_t t = 0; t < size(); ++t) {
    y(0, static_cast<Eigen::Index>(t)) = price[t];
    y(1, static_cast<Eigen::Index>(t)) = dividend[t];
  }
  return y;
}

double kalman_loglik(const StateSpaceModel& model, const Eigen::MatrixXd& y, const KalmanOptions& opt) {
  return run_filter(model, y, opt, [](const auto&, const auto&) {}, [] {});
}

double kalman_loglik(const StateSpaceModel& model, const ObservationSeries& series, const KalmanOptions& opt) {
  series.validate();
  return kalman_loglik(model, series.as_matrix(), opt);
}

std::vector<FilteredState> filter_states(const StateSpaceModel& model, const Eigen::MatrixXd& y,
                                         const KalmanOptions& opt) {
  std::vector<FilteredState> out;
  out.reserve(static_cast<std::size_t>(y.cols()));
  run_filter(model, y, opt, [&](const auto& a, const auto& P) { out.push_back({a, P}); }, [&] { out.clear(); });
  return out;
}

std::vector<FilteredState> filter_states(const StateSpaceModel& model, const ObservationSeries& series,
                                         const KalmanOptions& opt) {
  series.validate();
  return filter_states(model, series.as_matrix(), opt);
}

Simulation simulate(const StateSpaceModel& model, std::size_t T, std::uint64_t seed) {
  model.validate();
  if (T < 1) throw std::invalid_argument("simulate: T must be >= 1");
  const auto n = model.state_dim();
  // Symmetric square root tolerates singular innovation covariances.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(model.Omega);
  const Eigen::MatrixXd root =
      eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();

  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Simulation sim;
  sim.states.resize(n, static_cast<Eigen::Index>(T));
  Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd e(n);
  const Eigen::Index m = model.obs_dim();
  sim.series.times.reserve(T);
  for (std::size_t t = 0; t < T; ++t) {
    for (Eigen::Index i = 0; i < n; ++i) e(i) = normal(gen);
    z = model.F * z + root * e;
    sim.states.col(static_cast<Eigen::Index>(t)) = z;
    const Eigen::VectorXd yt = model.measurement_intercept + model.H * z;
    sim.series.times.push_back(static_cast<double>(t + 1) * model.dt);
    sim.series.price.push_back(yt(0));
    sim.series.dividend.push_back(m > 1 ? yt(1) : 0.0);
  }
  sim.series.meta.source = "simulated seed=" + std::to_string(seed);
  return sim;
}

}  // namespace ree
