#include "dtd/linear_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dtd/errors.hpp"
#include "dtd/random.hpp"

namespace dtd {

namespace {

std::vector<std::complex<double>> eigenvalues_of(const Eigen::MatrixXd& M) {
  std::vector<std::complex<double>> out;
  if (M.rows() == 0) return out;
  Eigen::EigenSolver<Eigen::MatrixXd> es(M, false);
  const auto ev = es.eigenvalues();
  out.assign(ev.data(), ev.data() + ev.size());
  return out;
}

double max_symmetric_eigenvalue(const Eigen::MatrixXd& M) {
  const Eigen::MatrixXd sym = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

void check_rank(FeatureSet& fs) {
  if (fs.dim() == 0) throw DomainError("feature matrix has no columns");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(fs.phi_tilde, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smax = sv.maxCoeff();
  const double smin = fs.dim() > fs.num_states() ? 0.0 : sv.minCoeff();
  fs.singular_ratio = smax > 0.0 ? smin / smax : 0.0;
  if (fs.singular_ratio > kRankTolerance) return;

  std::ostringstream os;
  os << "expanded features are rank deficient (sigma_min/sigma_max = " << fs.singular_ratio << ")";
  if (fs.has_bias && fs.phi.cols() > 0) {
    // Is the bias column already spanned by the raw features?
    const Eigen::VectorXd bias = fs.phi_tilde.col(0);
    const Eigen::MatrixXd raw = fs.phi_tilde.rightCols(fs.dim() - 1);
    const Eigen::VectorXd resid = bias - raw * raw.colPivHouseholderQr().solve(bias);
    if (resid.norm() <= 1e-8 * std::max(1.0, bias.norm()))
      os << "; the " << (fs.mode == FeatureMode::continuing ? "constant vector" : "non-terminal indicator e")
         << " lies in the span of the raw features";
  }
  if (fs.dim() <= fs.num_states()) {
    const Eigen::VectorXd null_dir = svd.matrixV().col(fs.dim() - 1);
    os << "; null direction [";
    for (int i = 0; i < null_dir.size(); ++i) os << (i ? ", " : "") << null_dir[i];
    os << "]";
  }
  throw DomainError(os.str());
}

FeatureSet make_features(const Eigen::MatrixXd& phi, const std::vector<bool>& terminal, FeatureMode mode,
                         bool with_bias) {
  const int n = static_cast<int>(terminal.size());
  if (phi.rows() != n)
    throw ConfigError("features have " + std::to_string(phi.rows()) + " rows but there are " + std::to_string(n) +
                      " states");
  FeatureSet fs;
  fs.phi = phi;
  fs.mode = mode;
  fs.has_bias = with_bias;
  fs.terminal = terminal;
  const int off = with_bias ? 1 : 0;
  fs.phi_tilde = Eigen::MatrixXd::Zero(n, phi.cols() + off);
  if (with_bias) fs.phi_tilde.col(0).setOnes();
  fs.phi_tilde.rightCols(phi.cols()) = phi;
  if (mode == FeatureMode::episodic)
    for (int s = 0; s < n; ++s)
      if (terminal[s]) fs.phi_tilde.row(s).setZero();
  check_rank(fs);
  return fs;
}

}  // namespace

std::string to_string(FeatureMode mode) { return mode == FeatureMode::continuing ? "continuing" : "episodic"; }

FeatureSet expand_features(const Eigen::MatrixXd& phi, const std::vector<bool>& terminal, FeatureMode mode) {
  return make_features(phi, terminal, mode, true);
}

FeatureSet expand_features(const Eigen::MatrixXd& phi, const TabularMDP& mdp, FeatureMode mode) {
  return make_features(phi, mdp.terminal(), mode, true);
}

FeatureSet plain_features(const Eigen::MatrixXd& phi, const std::vector<bool>& terminal, FeatureMode mode) {
  return make_features(phi, terminal, mode, false);
}

Eigen::MatrixXd gaussian_features(int n, int d, std::uint64_t seed, bool project_out_constant) {
  Rng rng = make_rng(seed, 0x66656174);
  Eigen::MatrixXd phi(n, d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < n; ++i) phi(i, j) = standard_normal(rng);
  if (project_out_constant && n > 0)
    for (int j = 0; j < d; ++j) phi.col(j).array() -= phi.col(j).mean();
  return phi;
}

Eigen::MatrixXd tabular_nonterminal_features(const std::vector<bool>& terminal) {
  const int n = static_cast<int>(terminal.size());
  const int m = static_cast<int>(std::count(terminal.begin(), terminal.end(), false));
  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(n, m);
  int j = 0;
  for (int s = 0; s < n; ++s)
    if (!terminal[s]) phi(s, j++) = 1.0;
  return phi;
}

MeanFieldSystem build_system(const FeatureSet& features, const ChainView& chain, double gamma, double eta) {
  if (chain.size() != features.num_states()) throw ConfigError("features and chain disagree on the number of states");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
  const bool any_terminal = std::any_of(chain.terminal.begin(), chain.terminal.end(), [](bool t) { return t; });
  if (features.mode == FeatureMode::episodic && any_terminal && chain.convention != TerminalConvention::restart)
    throw ConfigError("episodic systems are built on the unrolled chain");

  const Eigen::VectorXd d = chain.d ? *chain.d : stationary_distribution(chain);
  const int n = chain.size();
  const Eigen::MatrixXd& X = features.phi_tilde;
  const Eigen::MatrixXd M = gamma * chain.P - Eigen::MatrixXd::Identity(n, n);

  MeanFieldSystem sys;
  sys.A_tilde = X.transpose() * d.asDiagonal() * M * X;
  sys.b_tilde = X.transpose() * d.asDiagonal() * chain.r;
  sys.k_diag = Eigen::VectorXd::Ones(X.cols());
  if (features.has_bias && X.cols() > 0) sys.k_diag[0] = eta;
  sys.gamma = gamma;
  sys.eta = eta;
  return sys;
}

Eigen::VectorXd fixed_point(const MeanFieldSystem& sys) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(sys.A_tilde);
  if (!lu.isInvertible())
    throw DomainError("expected update matrix is singular; check ergodicity and feature rank");
  Eigen::VectorXd w = -lu.solve(sys.b_tilde);
  return w;
}

double fixed_point_residual(const MeanFieldSystem& sys, const Eigen::VectorXd& w) {
  return (sys.A_tilde * w + sys.b_tilde).norm();
}

DefinitenessReport definiteness_report(const MeanFieldSystem& sys) {
  DefinitenessReport rep;
  rep.eigenvalues = eigenvalues_of(sys.A_tilde);
  rep.max_symmetric_eigenvalue = max_symmetric_eigenvalue(sys.A_tilde);
  rep.negative_definite = rep.max_symmetric_eigenvalue < -kSpectralTolerance;
  return rep;
}

HurwitzReport hurwitz_check(const MeanFieldSystem& sys) {
  if (!((sys.k_diag.array() > 0.0).all()))
    throw DomainError("Hurwitz check needs eta > 0 (K must be positive definite)");
  HurwitzReport rep;
  rep.eta = sys.eta;
  const Eigen::MatrixXd KA = sys.k_diag.asDiagonal() * sys.A_tilde;
  rep.eigenvalues = eigenvalues_of(KA);
  rep.max_real_part = -std::numeric_limits<double>::infinity();
  rep.min_abs_real_part = std::numeric_limits<double>::infinity();
  for (const auto& ev : rep.eigenvalues) {
    rep.max_real_part = std::max(rep.max_real_part, ev.real());
    rep.min_abs_real_part = std::min(rep.min_abs_real_part, std::abs(ev.real()));
  }
  rep.hurwitz = rep.max_real_part < -kSpectralTolerance;

  const Eigen::VectorXd root = sys.k_diag.cwiseSqrt();
  const Eigen::MatrixXd S = root.asDiagonal() * sys.A_tilde * root.asDiagonal();
  rep.similar_max_symmetric_eigenvalue = max_symmetric_eigenvalue(S);
  rep.similar_negative_definite = rep.similar_max_symmetric_eigenvalue < -kSpectralTolerance;
  return rep;
}

BStarReport b_star(const TabularMDP& mdp, const PolicyTable& pi, double gamma) {
  if (!mdp.has_terminal()) throw ConfigError("b_star needs an episodic MDP");
  const Eigen::VectorXd d = occupancy_distribution(unroll(mdp, pi));
  const Values vals = exact_values(mdp, pi, gamma);
  const Eigen::VectorXd T = expected_remaining_length(mdp, pi);
  const Eigen::VectorXd m = discounted_termination(mdp, pi, gamma);

  BStarReport rep;
  rep.visitation = Eigen::VectorXd::Zero(mdp.num_states());
  for (StateId s = 0; s < mdp.num_states(); ++s)
    if (!mdp.is_terminal(s)) rep.visitation[s] = d[s];
  rep.visitation /= rep.visitation.sum();
  rep.remaining_length = T;

  for (StateId s = 0; s < mdp.num_states(); ++s) {
    if (mdp.is_terminal(s)) continue;
    const double w = rep.visitation[s] * vals.v[s];
    if (gamma == 1.0) {
      // (1 - gamma) / (1 - gamma^T) -> 1 / T, and 1 - E[gamma^T] over 1 - gamma -> E[T].
      rep.formula += w / T[s];
      rep.exact_discount += w / T[s];
    } else {
      rep.formula += w * (1.0 - gamma) / (1.0 - std::pow(gamma, T[s]));
      rep.exact_discount += w * (1.0 - gamma) / (1.0 - m[s]);
    }
  }
  return rep;
}

}  // namespace dtd
