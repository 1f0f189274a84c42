#pragma once

// Expanded-feature linear algebra for differential TD with a bias unit:
//   phi_tilde(s) = [bias(s), phi(s)],  w_tilde = [b, w],
//   A = Phi~^T D (gamma P - I) Phi~,   b~ = Phi~^T D r,   K = diag(eta, 1, ..., 1).
// The learning dynamics follow w' = K (A w + b~) with fixed point -A^{-1} b~.

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dtd/mdp.hpp"

namespace dtd {

/// "Strictly negative" threshold for eigenvalues and real parts.
inline constexpr double kSpectralTolerance = 1e-10;
/// Features are accepted when sigma_min > kRankTolerance * sigma_max.
inline constexpr double kRankTolerance = 1e-8;

enum class FeatureMode {
  continuing,  // bias column is all ones
  episodic,    // bias column is 1 on non-terminal states, 0 on terminal states; terminal rows are zero
};

std::string to_string(FeatureMode mode);

struct FeatureSet {
  Eigen::MatrixXd phi;
  FeatureMode mode = FeatureMode::continuing;
  Eigen::MatrixXd phi_tilde;
  bool has_bias = true;
  double singular_ratio = 0.0;  // sigma_min / sigma_max of phi_tilde
  std::vector<bool> terminal;

  int num_states() const noexcept { return static_cast<int>(phi_tilde.rows()); }
  int dim() const noexcept { return static_cast<int>(phi_tilde.cols()); }
  Eigen::VectorXd row(StateId s) const { return phi_tilde.row(s).transpose(); }
};

/// Prepends the bias column and checks full column rank (DomainError names the null direction).
FeatureSet expand_features(const Eigen::MatrixXd& phi, const std::vector<bool>& terminal, FeatureMode mode);
FeatureSet expand_features(const Eigen::MatrixXd& phi, const TabularMDP& mdp, FeatureMode mode);
/// Like expand_features without a bias column (K becomes the identity).
FeatureSet plain_features(const Eigen::MatrixXd& phi, const std::vector<bool>& terminal, FeatureMode mode);

/// n x d Gaussian features. With project_out_constant the columns are made orthogonal to the
/// all-ones vector, so [1, Phi] keeps full column rank.
Eigen::MatrixXd gaussian_features(int n, int d, std::uint64_t seed, bool project_out_constant);

/// One-hot features over the non-terminal states (terminal rows are zero).
Eigen::MatrixXd tabular_nonterminal_features(const std::vector<bool>& terminal);

struct MeanFieldSystem {
  Eigen::MatrixXd A_tilde;
  Eigen::VectorXd b_tilde;
  Eigen::VectorXd k_diag;
  double gamma = 0.0;
  double eta = 1.0;

  Eigen::MatrixXd K() const { return k_diag.asDiagonal(); }
  int dim() const noexcept { return static_cast<int>(A_tilde.rows()); }
};

/// Episodic feature sets need the unrolled chain. The stationary distribution is computed when absent.
MeanFieldSystem build_system(const FeatureSet& features, const ChainView& chain, double gamma, double eta);

/// -A^{-1} b~. Throws DomainError when A is singular.
Eigen::VectorXd fixed_point(const MeanFieldSystem& sys);
double fixed_point_residual(const MeanFieldSystem& sys, const Eigen::VectorXd& w);

struct DefinitenessReport {
  double max_symmetric_eigenvalue = 0.0;
  std::vector<std::complex<double>> eigenvalues;
  bool negative_definite = false;
};

DefinitenessReport definiteness_report(const MeanFieldSystem& sys);

struct HurwitzReport {
  double eta = 0.0;
  std::vector<std::complex<double>> eigenvalues;  // of K A
  double max_real_part = 0.0;
  double min_abs_real_part = 0.0;
  bool hurwitz = false;
  double similar_max_symmetric_eigenvalue = 0.0;  // of K^{1/2} A K^{1/2}
  bool similar_negative_definite = false;
};

/// Throws DomainError when eta <= 0.
HurwitzReport hurwitz_check(const MeanFieldSystem& sys);

struct BStarReport {
  double formula = 0.0;          // E_d[ v (1 - gamma) / (1 - gamma^{T(s)}) ]
  double exact_discount = 0.0;   // same with gamma^{T(s)} replaced by E[gamma^T | s]
  Eigen::VectorXd visitation;    // d over non-terminal states, renormalized (0 on terminal states)
  Eigen::VectorXd remaining_length;
};

/// Visitation is the occupancy distribution of the unrolled chain (periodic chains are fine).
BStarReport b_star(const TabularMDP& mdp, const PolicyTable& pi, double gamma);

}  // namespace dtd
