#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <vector>

#include "kinex/errors.hpp"

namespace kinex {

/// Uniform-weight atom measure on [0, inf), stored sorted ascending.
template <typename Scalar>
class EmpiricalMeasure {
 public:
  using Values = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  EmpiricalMeasure() = default;

  template <typename Derived>
  explicit EmpiricalMeasure(const Eigen::DenseBase<Derived>& values) : values_(values.derived()) {
    normalize();
  }

  explicit EmpiricalMeasure(const std::vector<Scalar>& values)
      : values_(Eigen::Map<const Values>(values.data(), static_cast<Eigen::Index>(values.size()))) {
    normalize();
  }

  EmpiricalMeasure(std::initializer_list<Scalar> values)
      : EmpiricalMeasure(std::vector<Scalar>(values)) {}

  Eigen::Index size() const { return values_.size(); }
  bool empty() const { return values_.size() == 0; }
  const Values& values() const { return values_; }
  Scalar operator[](Eigen::Index i) const { return values_[i]; }

  Scalar mean() const { return empty() ? Scalar(0) : values_.mean(); }

  /// Left-continuous quantile: the atom covering mass level u in [0, 1).
  Scalar quantile(Scalar u) const {
    if (empty()) throw EmptyMeasure("quantile of an empty measure");
    const auto n = values_.size();
    auto k = static_cast<Eigen::Index>(std::floor(u * static_cast<Scalar>(n)));
    return values_[std::clamp<Eigen::Index>(k, 0, n - 1)];
  }

  /// Inserts one atom, keeping the order.
  void insert(Scalar value) {
    check_value(value);
    const auto pos = std::upper_bound(values_.data(), values_.data() + values_.size(), value) -
                     values_.data();
    Values grown(values_.size() + 1);
    grown.head(pos) = values_.head(pos);
    grown[pos] = value;
    grown.tail(values_.size() - pos) = values_.tail(values_.size() - pos);
    values_.swap(grown);
  }

  friend bool operator==(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
    return a.size() == b.size() && (a.values_ == b.values_).all();
  }

 private:
  static void check_value(Scalar v) {
    if (!std::isfinite(static_cast<double>(v)) || v < Scalar(0)) {
      throw InvalidMeasure("empirical measure atoms must be finite and nonnegative");
    }
  }
  void normalize() {
    for (Eigen::Index i = 0; i < values_.size(); ++i) check_value(values_[i]);
    std::sort(values_.data(), values_.data() + values_.size());
  }

  Values values_;
};

using EmpiricalMeasured = EmpiricalMeasure<double>;

/// Exact squared 2-Wasserstein distance between two empirical measures on the
/// line: the integral over u in [0, 1) of (Q_a(u) - Q_b(u))^2 on the common
/// refinement of both quantile step functions.
template <typename Scalar>
Scalar w2_squared(const EmpiricalMeasure<Scalar>& a, const EmpiricalMeasure<Scalar>& b) {
  if (a.empty() || b.empty()) throw EmptyMeasure("w2_squared needs nonempty measures");
  const auto n = a.size();
  const auto m = b.size();
  if (n == m) return (a.values() - b.values()).square().mean();
  // Walk breakpoints i/n and j/m in integer units of 1/(n m).
  Scalar total(0);
  Eigen::Index i = 0, j = 0;
  long double level = 0;
  while (i < n && j < m) {
    const long double next_a = static_cast<long double>(i + 1) * m;
    const long double next_b = static_cast<long double>(j + 1) * n;
    const long double next = std::min(next_a, next_b);
    const Scalar diff = a[i] - b[j];
    total += static_cast<Scalar>(next - level) * diff * diff;
    level = next;
    if (next_a == next) ++i;
    if (next_b == next) ++j;
  }
  return total / (static_cast<Scalar>(n) * static_cast<Scalar>(m));
}

/// The measure with atom i (index into sorted order) removed.
template <typename Scalar>
EmpiricalMeasure<Scalar> leave_one_out(const EmpiricalMeasure<Scalar>& a, Eigen::Index i) {
  if (i < 0 || i >= a.size()) throw IndexOutOfRange("leave_one_out: index out of range");
  if (a.size() < 2) throw EmptyMeasure("leave_one_out: result would be empty");
  typename EmpiricalMeasure<Scalar>::Values rest(a.size() - 1);
  rest.head(i) = a.values().head(i);
  rest.tail(a.size() - 1 - i) = a.values().tail(a.size() - 1 - i);
  return EmpiricalMeasure<Scalar>(rest);
}

/// Comonotone partner: the draw u in [0, 1) selects the sample atom Q_sample(u)
/// and is matched to Q_reference(u). Averaged over u this pairing attains
/// w2_squared(sample, reference).
template <typename Scalar>
Scalar optimal_partner(const EmpiricalMeasure<Scalar>& sample,
                       const EmpiricalMeasure<Scalar>& reference, Scalar draw) {
  if (sample.empty() || reference.empty()) {
    throw EmptyMeasure("optimal_partner needs nonempty measures");
  }
  return reference.quantile(draw);
}

}  // namespace kinex
