#include "triproxy/prob.hpp"

#include "triproxy/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace triproxy {
namespace {

std::vector<std::size_t> row_major_strides(std::span<const VarSpace> axes) {
  std::vector<std::size_t> strides(axes.size(), 1);
  for (std::size_t i = axes.size(); i-- > 1;) strides[i - 1] = strides[i] * axes[i].cardinality;
  return strides;
}

// Walks every multi-index of `cards` in row-major order, maintaining a second
// flat offset computed from `out_strides` (zero stride = axis not in output).
template <typename Fn>
void walk(std::span<const std::size_t> cards, std::span<const std::size_t> out_strides, Fn&& fn) {
  const std::size_t rank = cards.size();
  std::size_t total = 1;
  for (auto c : cards) total *= c;
  std::vector<std::size_t> idx(rank, 0);
  std::size_t out = 0;
  for (std::size_t flat = 0; flat < total; ++flat) {
    fn(flat, out);
    for (std::size_t a = rank; a-- > 0;) {
      if (++idx[a] < cards[a]) {
        out += out_strides[a];
        break;
      }
      out -= out_strides[a] * (cards[a] - 1);
      idx[a] = 0;
    }
  }
}

std::vector<std::size_t> cards_of(std::span<const VarSpace> axes) {
  std::vector<std::size_t> c;
  c.reserve(axes.size());
  for (const auto& a : axes) c.push_back(a.cardinality);
  return c;
}

void check_unique_names(std::span<const VarSpace> axes) {
  std::set<std::string_view> seen;
  for (const auto& a : axes) {
    if (!seen.insert(a.name).second) throw Error(ErrorCode::InvalidArgument, "duplicate axis name '" + a.name + "'");
  }
}

std::vector<std::size_t> positions(const ProbTensor& t, std::span<const std::string> names) {
  std::vector<std::size_t> pos;
  std::set<std::size_t> seen;
  for (const auto& n : names) {
    const std::size_t p = t.axis_index(n);
    if (!seen.insert(p).second) throw Error(ErrorCode::InvalidArgument, "axis '" + n + "' listed twice");
    pos.push_back(p);
  }
  return pos;
}

// Clips round-off negatives in place; returns true if any entry changed.
bool clip_negatives(std::vector<double>& values, const std::string& what) {
  bool clipped = false;
  for (auto& v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, what + " has a non-finite entry");
    if (v < 0.0) {
      if (v < -kClipTolerance) {
        throw Error(ErrorCode::NegativeProbability, what + " has entry " + std::to_string(v) + " below -1e-12");
      }
      v = 0.0;
      clipped = true;
    }
  }
  return clipped;
}

}  // namespace

VarSpace VarSpace::categorical(std::string name, std::size_t cardinality) {
  VarSpace v{std::move(name), cardinality, std::nullopt};
  v.validate();
  return v;
}

VarSpace VarSpace::numeric(std::string name, std::vector<double> levels) {
  const std::size_t card = levels.size();
  VarSpace v{std::move(name), card, std::move(levels)};
  v.validate();
  return v;
}

void VarSpace::validate() const {
  if (name.empty()) throw Error(ErrorCode::InvalidArgument, "variable name must be non-empty");
  if (cardinality < 1) throw Error(ErrorCode::InvalidArgument, "variable '" + name + "' has cardinality 0");
  if (levels) {
    if (levels->size() != cardinality) {
      throw Error(ErrorCode::InvalidArgument, "variable '" + name + "' has " + std::to_string(levels->size()) +
                                                  " levels but cardinality " + std::to_string(cardinality));
    }
    for (double l : *levels) {
      if (!std::isfinite(l)) throw Error(ErrorCode::InvalidArgument, "variable '" + name + "' has a non-finite level");
    }
  }
}

double VarSpace::level(std::size_t i) const {
  if (!levels) throw Error(ErrorCode::MissingLevels, "variable '" + name + "' carries no numeric levels");
  return (*levels)[i];
}

VarSpace VarSpace::renamed(std::string new_name) const {
  VarSpace v = *this;
  v.name = std::move(new_name);
  return v;
}

std::size_t total_cells(std::span<const VarSpace> axes) {
  std::size_t n = 1;
  for (const auto& a : axes) n *= a.cardinality;
  return n;
}

// ---------------------------------------------------------------------------
// ProbTensor

ProbTensor::ProbTensor(std::vector<VarSpace> axes, std::vector<double> values)
    : axes_(std::move(axes)), values_(std::move(values)) {
  for (const auto& a : axes_) a.validate();
  check_unique_names(axes_);
  if (values_.size() != total_cells(axes_)) {
    throw Error(ErrorCode::AxisMismatch, "tensor has " + std::to_string(values_.size()) + " values but axes need " +
                                             std::to_string(total_cells(axes_)));
  }
  const bool clipped = clip_negatives(values_, "tensor");
  const double mass = total_mass();
  if (std::abs(mass - 1.0) > kMassTolerance) {
    throw Error(ErrorCode::InvalidArgument, "tensor mass " + std::to_string(mass) + " differs from 1 by more than 1e-10");
  }
  if (clipped) {
    for (auto& v : values_) v /= mass;
  }
}

ProbTensor ProbTensor::from_weights(std::vector<VarSpace> axes, std::vector<double> weights) {
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error(ErrorCode::InvalidArgument, "weights must be finite and >= 0");
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw Error(ErrorCode::ZeroConditioningCell, "weights sum to zero");
  for (auto& w : weights) w /= total;
  return ProbTensor(std::move(axes), std::move(weights));
}

bool ProbTensor::has_axis(std::string_view name) const {
  return std::any_of(axes_.begin(), axes_.end(), [&](const VarSpace& a) { return a.name == name; });
}

std::size_t ProbTensor::axis_index(std::string_view name) const {
  for (std::size_t i = 0; i < axes_.size(); ++i) {
    if (axes_[i].name == name) return i;
  }
  throw Error(ErrorCode::UnknownAxis, "no axis named '" + std::string(name) + "'");
}

std::vector<std::string> ProbTensor::names() const {
  std::vector<std::string> out;
  for (const auto& a : axes_) out.push_back(a.name);
  return out;
}

std::vector<std::size_t> ProbTensor::strides() const { return row_major_strides(axes_); }

double ProbTensor::at(std::span<const std::size_t> index) const {
  if (index.size() != axes_.size()) throw Error(ErrorCode::AxisMismatch, "index rank mismatch");
  std::size_t flat = 0;
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= axes_[i].cardinality) throw Error(ErrorCode::InvalidArgument, "index out of range");
    flat = flat * axes_[i].cardinality + index[i];
  }
  return values_[flat];
}

double ProbTensor::total_mass() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }

// ---------------------------------------------------------------------------
// MarkovKernel

MarkovKernel::MarkovKernel(VarSpace target, std::vector<VarSpace> given, std::vector<double> values)
    : target_(std::move(target)), given_(std::move(given)), values_(std::move(values)) {
  target_.validate();
  for (const auto& g : given_) {
    g.validate();
    if (g.name == target_.name) throw Error(ErrorCode::InvalidArgument, "kernel target also listed as conditioner");
  }
  check_unique_names(given_);
  const std::size_t configs = total_cells(given_);
  if (values_.size() != configs * target_.cardinality) {
    throw Error(ErrorCode::AxisMismatch, "kernel value count does not match |target| x |given|");
  }
  clip_negatives(values_, "kernel");
  const std::size_t nt = target_.cardinality;
  for (std::size_t g = 0; g < configs; ++g) {
    double s = 0.0;
    for (std::size_t t = 0; t < nt; ++t) s += values_[g * nt + t];
    if (std::abs(s - 1.0) > kMassTolerance) {
      throw Error(ErrorCode::InvalidArgument, "kernel column " + std::to_string(g) + " sums to " + std::to_string(s));
    }
  }
}

MarkovKernel MarkovKernel::from_matrix(VarSpace target, std::vector<VarSpace> given, const Eigen::MatrixXd& columns) {
  std::vector<double> values(static_cast<std::size_t>(columns.size()));
  Eigen::Map<Eigen::MatrixXd>(values.data(), columns.rows(), columns.cols()) = columns;
  return MarkovKernel(std::move(target), std::move(given), std::move(values));
}

Eigen::MatrixXd MarkovKernel::matrix() const {
  return Eigen::Map<const Eigen::MatrixXd>(values_.data(), static_cast<Eigen::Index>(target_.cardinality),
                                           static_cast<Eigen::Index>(given_configs()));
}

// ---------------------------------------------------------------------------
// operations

ProbTensor marginalize(const ProbTensor& t, std::span<const std::string> drop) {
  const auto drop_pos = positions(t, drop);
  std::vector<bool> dropped(t.rank(), false);
  for (auto p : drop_pos) dropped[p] = true;

  std::vector<VarSpace> out_axes;
  for (std::size_t i = 0; i < t.rank(); ++i) {
    if (!dropped[i]) out_axes.push_back(t.axes()[i]);
  }
  const auto out_strides_dense = row_major_strides(out_axes);
  std::vector<std::size_t> out_strides(t.rank(), 0);
  for (std::size_t i = 0, k = 0; i < t.rank(); ++i) {
    if (!dropped[i]) out_strides[i] = out_strides_dense[k++];
  }
  std::vector<double> out(total_cells(out_axes), 0.0);
  const auto cards = cards_of(t.axes());
  const auto vals = t.values();
  walk(cards, out_strides, [&](std::size_t flat, std::size_t o) { out[o] += vals[flat]; });
  return ProbTensor::from_weights(std::move(out_axes), std::move(out));
}

ProbTensor permute_axes(const ProbTensor& t, std::span<const std::string> order) {
  if (order.size() != t.rank()) throw Error(ErrorCode::AxisMismatch, "permutation must list every axis exactly once");
  const auto pos = positions(t, order);
  std::vector<VarSpace> out_axes;
  for (auto p : pos) out_axes.push_back(t.axes()[p]);
  const auto dense = row_major_strides(out_axes);
  std::vector<std::size_t> out_strides(t.rank(), 0);
  for (std::size_t k = 0; k < pos.size(); ++k) out_strides[pos[k]] = dense[k];
  std::vector<double> out(t.size(), 0.0);
  const auto vals = t.values();
  walk(cards_of(t.axes()), out_strides, [&](std::size_t flat, std::size_t o) { out[o] = vals[flat]; });
  return ProbTensor(std::move(out_axes), std::move(out));
}

ProbTensor marginal(const ProbTensor& t, std::span<const std::string> keep) {
  std::vector<std::string> drop;
  std::set<std::string> keep_set(keep.begin(), keep.end());
  for (const auto& a : t.axes()) {
    if (!keep_set.count(a.name)) drop.push_back(a.name);
  }
  for (const auto& k : keep) (void)t.axis_index(k);
  ProbTensor m = marginalize(t, drop);
  return permute_axes(m, keep);
}

ProbTensor rename_axis(const ProbTensor& t, std::string_view from, std::string to) {
  auto axes = t.axes();
  axes[t.axis_index(from)].name = std::move(to);
  return ProbTensor(std::move(axes), std::vector<double>(t.values().begin(), t.values().end()));
}

MarkovKernel condition(const ProbTensor& t, std::span<const std::string> on) {
  const auto on_pos = positions(t, on);
  if (on_pos.size() + 1 != t.rank()) {
    throw Error(ErrorCode::AxisMismatch, "condition() needs exactly one target axis outside the conditioning set");
  }
  std::vector<bool> is_given(t.rank(), false);
  for (auto p : on_pos) is_given[p] = true;
  std::size_t target_pos = 0;
  while (is_given[target_pos]) ++target_pos;

  std::vector<VarSpace> given;
  for (auto p : on_pos) given.push_back(t.axes()[p]);
  const VarSpace& target = t.axes()[target_pos];
  const std::size_t nt = target.cardinality;

  // Output layout: column = given config (row-major over `on` order), row = target.
  const auto given_dense = row_major_strides(given);
  std::vector<std::size_t> out_strides(t.rank(), 0);
  for (std::size_t k = 0; k < on_pos.size(); ++k) out_strides[on_pos[k]] = given_dense[k] * nt;
  out_strides[target_pos] = 1;

  std::vector<double> joint(t.size(), 0.0);
  const auto vals = t.values();
  walk(cards_of(t.axes()), out_strides, [&](std::size_t flat, std::size_t o) { joint[o] = vals[flat]; });

  const std::size_t configs = total_cells(given);
  for (std::size_t g = 0; g < configs; ++g) {
    double s = 0.0;
    for (std::size_t i = 0; i < nt; ++i) s += joint[g * nt + i];
    if (!(s > 0.0)) {
      std::string cell;
      std::size_t rem = g;
      for (std::size_t k = 0; k < given.size(); ++k) {
        const std::size_t lvl = rem / given_dense[k];
        rem %= given_dense[k];
        if (!cell.empty()) cell += ",";
        cell += given[k].name + "=" + std::to_string(lvl);
      }
      throw Error(ErrorCode::ZeroConditioningCell, "conditioning cell (" + cell + ") has zero probability",
                  "positivity: HS Assumption 1 / Assumption 1", cell);
    }
    for (std::size_t i = 0; i < nt; ++i) joint[g * nt + i] /= s;
  }
  return MarkovKernel(target, std::move(given), std::move(joint));
}

ProbTensor slice(const ProbTensor& t, std::string_view axis, std::size_t level) {
  const std::size_t p = t.axis_index(axis);
  if (level >= t.axes()[p].cardinality) throw Error(ErrorCode::InvalidArgument, "slice level out of range");
  std::vector<VarSpace> out_axes;
  for (std::size_t i = 0; i < t.rank(); ++i) {
    if (i != p) out_axes.push_back(t.axes()[i]);
  }
  const auto strides = t.strides();
  const auto out_dense = row_major_strides(out_axes);
  std::vector<double> out(total_cells(out_axes), 0.0);
  std::vector<std::size_t> out_strides(t.rank(), 0);
  for (std::size_t i = 0, k = 0; i < t.rank(); ++i) {
    if (i != p) out_strides[i] = out_dense[k++];
  }
  const auto vals = t.values();
  walk(cards_of(t.axes()), out_strides, [&](std::size_t flat, std::size_t o) {
    if ((flat / strides[p]) % t.axes()[p].cardinality == level) out[o] = vals[flat];
  });
  const double mass = std::accumulate(out.begin(), out.end(), 0.0);
  if (!(mass > 0.0)) {
    const std::string cell = std::string(axis) + "=" + std::to_string(level);
    throw Error(ErrorCode::ZeroConditioningCell, "stratum " + cell + " has zero probability",
                "positivity: HS Assumption 1 / Assumption 1", cell);
  }
  return ProbTensor::from_weights(std::move(out_axes), std::move(out));
}

ProbTensor product(const ProbTensor& a, const ProbTensor& b) {
  std::vector<VarSpace> axes = a.axes();
  axes.insert(axes.end(), b.axes().begin(), b.axes().end());
  check_unique_names(axes);
  std::vector<double> out;
  out.reserve(a.size() * b.size());
  for (double x : a.values()) {
    for (double y : b.values()) out.push_back(x * y);
  }
  return ProbTensor(std::move(axes), std::move(out));
}

ProbTensor chain(const MarkovKernel& k, const ProbTensor& m) {
  if (m.has_axis(k.target().name)) {
    throw Error(ErrorCode::AxisMismatch, "kernel target '" + k.target().name + "' already present in tensor");
  }
  std::vector<std::size_t> given_pos;
  for (const auto& g : k.given()) {
    const std::size_t p = [&] {
      try {
        return m.axis_index(g.name);
      } catch (const Error&) {
        throw Error(ErrorCode::AxisMismatch, "conditioning axis '" + g.name + "' missing from tensor");
      }
    }();
    if (m.axes()[p].cardinality != g.cardinality) {
      throw Error(ErrorCode::AxisMismatch, "axis '" + g.name + "' cardinality differs between kernel and tensor");
    }
    given_pos.push_back(p);
  }
  std::vector<VarSpace> axes;
  axes.push_back(k.target());
  axes.insert(axes.end(), m.axes().begin(), m.axes().end());

  const std::size_t nt = k.target().cardinality;
  const auto given_dense = row_major_strides(k.given());
  std::vector<std::size_t> cfg_strides(m.rank(), 0);
  for (std::size_t i = 0; i < given_pos.size(); ++i) cfg_strides[given_pos[i]] = given_dense[i];

  std::vector<double> out(nt * m.size(), 0.0);
  const auto vals = m.values();
  walk(cards_of(m.axes()), cfg_strides, [&](std::size_t flat, std::size_t cfg) {
    for (std::size_t t = 0; t < nt; ++t) out[t * m.size() + flat] = k(t, cfg) * vals[flat];
  });
  return ProbTensor(std::move(axes), std::move(out));
}

ProbTensor kernel_product(const MarkovKernel& k, const ProbTensor& m, std::span<const std::string> sum_out) {
  for (const auto& s : sum_out) {
    const bool is_given =
        std::any_of(k.given().begin(), k.given().end(), [&](const VarSpace& g) { return g.name == s; });
    if (!is_given) throw Error(ErrorCode::AxisMismatch, "can only contract conditioning axes, not '" + s + "'");
  }
  return marginalize(chain(k, m), sum_out);
}

ProbTensor kernel_product(const MarkovKernel& k, const ProbTensor& m) {
  std::vector<std::string> all;
  for (const auto& g : k.given()) all.push_back(g.name);
  return kernel_product(k, m, all);
}

Eigen::MatrixXd as_matrix(const ProbTensor& t) {
  if (t.rank() != 2) throw Error(ErrorCode::AxisMismatch, "as_matrix needs a rank-2 tensor");
  const auto r = static_cast<Eigen::Index>(t.axes()[0].cardinality);
  const auto c = static_cast<Eigen::Index>(t.axes()[1].cardinality);
  Eigen::MatrixXd out(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) out(i, j) = t[static_cast<std::size_t>(i * c + j)];
  }
  return out;
}

Eigen::MatrixXd as_matrix(const ProbTensor& t, std::span<const std::string> rows, std::span<const std::string> cols) {
  std::vector<std::string> order(rows.begin(), rows.end());
  order.insert(order.end(), cols.begin(), cols.end());
  const ProbTensor p = permute_axes(t, order);
  std::size_t nr = 1;
  for (const auto& r : rows) nr *= t.axis(r).cardinality;
  const std::size_t nc = p.size() / nr;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(nr), static_cast<Eigen::Index>(nc));
  for (std::size_t i = 0; i < nr; ++i) {
    for (std::size_t j = 0; j < nc; ++j) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = p[i * nc + j];
  }
  return out;
}

}  // namespace triproxy
