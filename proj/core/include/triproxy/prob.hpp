#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace triproxy {

/// Entries in (-kClipTolerance, 0) are treated as round-off and clipped.
inline constexpr double kClipTolerance = 1e-12;
/// Allowed deviation of total mass (or of a kernel column sum) from one.
inline constexpr double kMassTolerance = 1e-10;

/// Finite categorical support, optionally carrying a numeric value per level.
struct VarSpace {
  std::string name;
  std::size_t cardinality = 1;
  std::optional<std::vector<double>> levels;

  static VarSpace categorical(std::string name, std::size_t cardinality);
  static VarSpace numeric(std::string name, std::vector<double> levels);

  void validate() const;
  bool has_levels() const { return levels.has_value(); }
  /// Numeric value of level `i`; throws MissingLevels when the space is unlabeled.
  double level(std::size_t i) const;
  /// Same space under a different name.
  VarSpace renamed(std::string new_name) const;

  friend bool operator==(const VarSpace&, const VarSpace&) = default;
};

std::size_t total_cells(std::span<const VarSpace> axes);

/// Exact joint pmf over an ordered tuple of categorical axes, stored dense and
/// row-major (last axis varies fastest). Immutable after construction.
class ProbTensor {
 public:
  /// Validates shape, clips round-off negatives and checks that the total mass
  /// is one to kMassTolerance. Values are renormalized only if clipping occurred,
  /// so a serialized tensor parses back bit-identically.
  ProbTensor(std::vector<VarSpace> axes, std::vector<double> values);

  /// Builds from non-negative weights of any positive total, dividing by the total.
  static ProbTensor from_weights(std::vector<VarSpace> axes, std::vector<double> weights);

  const std::vector<VarSpace>& axes() const { return axes_; }
  std::span<const double> values() const { return values_; }
  std::size_t rank() const { return axes_.size(); }
  std::size_t size() const { return values_.size(); }

  bool has_axis(std::string_view name) const;
  std::size_t axis_index(std::string_view name) const;
  const VarSpace& axis(std::string_view name) const { return axes_[axis_index(name)]; }
  std::vector<std::string> names() const;
  std::vector<std::size_t> strides() const;

  double at(std::span<const std::size_t> index) const;
  double operator[](std::size_t flat) const { return values_[flat]; }
  double total_mass() const;

 private:
  std::vector<VarSpace> axes_;
  std::vector<double> values_;
};

/// Conditional pmf of one target variable given an ordered conditioning tuple.
/// Stored column-major as a |target| x |given configs| matrix; every column is a pmf.
class MarkovKernel {
 public:
  MarkovKernel(VarSpace target, std::vector<VarSpace> given, std::vector<double> values);

  static MarkovKernel from_matrix(VarSpace target, std::vector<VarSpace> given, const Eigen::MatrixXd& columns);

  const VarSpace& target() const { return target_; }
  const std::vector<VarSpace>& given() const { return given_; }
  std::size_t given_configs() const { return values_.size() / target_.cardinality; }
  double operator()(std::size_t target_level, std::size_t given_config) const {
    return values_[given_config * target_.cardinality + target_level];
  }
  std::span<const double> values() const { return values_; }
  Eigen::MatrixXd matrix() const;

 private:
  VarSpace target_;
  std::vector<VarSpace> given_;
  std::vector<double> values_;
};

/// Sums out the named axes.
ProbTensor marginalize(const ProbTensor& t, std::span<const std::string> drop);
/// Marginal over `keep`, with axes in the listed order.
ProbTensor marginal(const ProbTensor& t, std::span<const std::string> keep);
/// Reorders axes; `order` must be a permutation of the axis names.
ProbTensor permute_axes(const ProbTensor& t, std::span<const std::string> order);
/// Renames one axis.
ProbTensor rename_axis(const ProbTensor& t, std::string_view from, std::string to);
/// f_{target | on}: the single axis not in `on` becomes the target.
MarkovKernel condition(const ProbTensor& t, std::span<const std::string> on);
/// Law of the remaining axes given `axis` = `level`.
ProbTensor slice(const ProbTensor& t, std::string_view axis, std::size_t level);
/// Outer product of tensors over disjoint axes.
ProbTensor product(const ProbTensor& a, const ProbTensor& b);
/// f(target, m-axes) = k(target | given) * m(...): the chain rule, no contraction.
ProbTensor chain(const MarkovKernel& k, const ProbTensor& m);
/// Chain rule followed by summing out `sum_out` (a subset of the given axes).
ProbTensor kernel_product(const MarkovKernel& k, const ProbTensor& m, std::span<const std::string> sum_out);
/// Contraction over every conditioning axis of `k`.
ProbTensor kernel_product(const MarkovKernel& k, const ProbTensor& m);

/// View of a rank-2 tensor as a matrix (rows = first axis).
Eigen::MatrixXd as_matrix(const ProbTensor& t);
/// Dense copy of the values of the named axes in the given order, as a matrix
/// whose rows index `rows` (row-major flattened) and columns index `cols`.
Eigen::MatrixXd as_matrix(const ProbTensor& t, std::span<const std::string> rows,
                          std::span<const std::string> cols);

}  // namespace triproxy
