#pragma once

#include "triproxy/prob.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace triproxy {

enum class Alignment { UnalignedPermutation, AlignedToReference };
std::string_view to_string(Alignment a);

struct HsOptions {
  std::size_t latent_dim = 2;
  double eigen_gap_tol = 1e-6;
  double imag_tol = 1e-7;
  std::uint64_t seed = 0;
  int max_retries = 8;
  double rank_tol = 1e-8;
  double negativity_tol = 1e-6;
};

struct HsDiagnostics {
  std::vector<double> singular_values;  // of M_ZV
  double eigen_gap = 0;
  int draws = 0;
  double cond_z_given_w = 0;
  double cond_projected = 0;  // of U' M_ZV R
  double max_imag = 0;
  double max_negativity_clipped = 0;
  double reconstruction_residual = 0;
};

/// Factors of joint(z,c,v) = sum_w f_{Z|W}(z|w) f_{C|W}(c|w) f_{WV}(w,v).
struct HsFactors {
  MarkovKernel c_given_w;
  MarkovKernel w_given_v;
  MarkovKernel z_given_w;
  ProbTensor wv_joint;  // axes (W, V)
  std::size_t latent_dim = 0;
  Alignment alignment = Alignment::UnalignedPermutation;
  HsDiagnostics diagnostics;
};

/// `joint` has exactly three axes, read as (Z, C, V). Latent states are
/// returned sorted lexicographically by their f_{Z|W} columns.
HsFactors hs_decompose(const ProbTensor& joint, const HsOptions& opts, const std::string& latent_name = "W");

/// p[i] = j means latent state j of `b` corresponds to state i of `a`.
using Permutation = std::vector<std::size_t>;

/// Optimal assignment on total column L1 distance; AmbiguousMatch when another
/// assignment is within 1e-9 of the optimum.
Permutation match_permutation(const MarkovKernel& a, const MarkovKernel& b);
/// Matches on the f_{Z|W} and f_{C|W} columns together.
Permutation match_permutation(const HsFactors& a, const HsFactors& b);

/// Latent state i of the result is state p[i] of the input.
Eigen::MatrixXd permute_columns(const Eigen::MatrixXd& m, const Permutation& p);
MarkovKernel permute_latent_columns(const MarkovKernel& k, const Permutation& p);
HsFactors permute_latent(const HsFactors& f, const Permutation& p);

/// Minimum-cost perfect assignment (Hungarian method): result[i] = column for row i.
Permutation min_cost_assignment(const Eigen::MatrixXd& cost);

struct CompletenessReport {
  std::vector<double> singular_values;
  std::size_t numerical_rank = 0;
  double threshold = 1e-8;
  bool pass = false;
};

/// Singular values of the kernel matrix (target x configs), rank counted
/// relative to the largest singular value.
CompletenessReport completeness_diagnostics(const MarkovKernel& k, std::size_t latent_dim, double threshold = 1e-8);
CompletenessReport completeness_diagnostics(const Eigen::MatrixXd& m, std::size_t latent_dim, double threshold = 1e-8);

/// Lexicographic order of the columns of `m` (first row most significant).
Permutation lexicographic_column_order(const Eigen::MatrixXd& m);

}  // namespace triproxy
