#pragma once

#include "triproxy/pipelines.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace triproxy {

enum class Functional { Mean, Median };
enum class RelabelMode { Unbiased, Monotone };
std::string_view to_string(Functional f);
std::string_view to_string(RelabelMode m);

struct RelabelRule {
  Functional functional = Functional::Mean;
  RelabelMode mode = RelabelMode::Unbiased;
  /// Per-coordinate level counts of a product-coded W (row-major, first
  /// coordinate slowest). Empty means scalar W.
  std::vector<std::size_t> w_coordinates;
  /// Per-coordinate numeric levels of a product-coded Z, same layout. Empty
  /// means Z is scalar and its own numeric levels are used.
  std::vector<std::vector<double>> z_coordinates;

  /// Parses "mean-unbiased", "median-unbiased", "mean-monotone", "median-monotone".
  static RelabelRule parse(std::string_view name);
  std::string name() const;
};

/// alpha[w][j]: functional of coordinate j of Z under column w of f_{Z|W}.
using AlphaTable = std::vector<std::vector<double>>;

/// Values closer than this count as equal when checking injectivity.
inline constexpr double kAlphaTolerance = 1e-9;

AlphaTable compute_alpha(const MarkovKernel& z_given_w, const RelabelRule& rule);

struct QuantileState {
  double tau = 0;
  std::vector<double> alpha_quantile;  // Q_{alpha_j(W)}(tau) per coordinate
  std::size_t state = 0;               // q(tau), index into the relabeled model
  std::optional<double> cate;          // E[Y(1)-Y(0) | W = q(tau)]
};

struct LabeledLatentModel {
  LatentOutcomeModel base;  // latent states sorted by alpha
  RelabelRule rule;
  AlphaTable alpha;
  std::vector<double> latent_pmf;
  /// Unbiased mode: recovered W value of each state (= alpha).
  AlphaTable w_values;
  /// Monotone mode: F_{alpha_j(W)}(alpha_j(w)) per state and coordinate.
  AlphaTable quantile_rank;
  std::vector<QuantileState> quantile_map;
};

/// Under unbiasedness each state's W value is its alpha; throws AlphaCollision
/// when two states share one.
LabeledLatentModel relabel_unbiased(const LatentOutcomeModel& m, const RelabelRule& rule);

/// Coordinatewise quantiles of alpha(W) under f_W, each tau mapped to the state
/// carrying those alphas. Only the order of alpha is used.
LabeledLatentModel relabel_monotone(const LatentOutcomeModel& m, const RelabelRule& rule,
                                    const std::vector<double>& tau_grid);

LabeledLatentModel relabel(const LatentOutcomeModel& m, const RelabelRule& rule, const std::vector<double>& tau_grid);

/// E[Y(1)-Y(0) | W=w] in the model's own latent order (binary X, numeric Y).
std::vector<double> stratum_cate(const LatentOutcomeModel& m);

struct ConfounderEffects {
  /// joints[x][w]: f_{Y(x,w) X} over axes (Y(X=x,W=w), X).
  std::vector<std::vector<ProbTensor>> joints;
  /// means[x][w] = E[Y(x,w)], empty without numeric Y levels.
  std::vector<std::vector<double>> means;
  /// partial[x][w] = E[Y(x,w+1)] - E[Y(x,w)] between adjacent latent labels.
  std::vector<std::vector<double>> partial;
};

/// Joint law of Y(x,w) and X. Outcome, treatment and conditional-treatment
/// designs use f_{Y|XW} f_X; the auxiliary design integrates over V.
ConfounderEffects confounder_effects(const LatentOutcomeModel& m, DesignTag design);
ConfounderEffects confounder_effects(const LabeledLatentModel& m);

Json to_json(const LabeledLatentModel& m);
Json to_json(const ConfounderEffects& e);

}  // namespace triproxy
