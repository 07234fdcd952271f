#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "khoplab/alphabet.hpp"

namespace khoplab {

/// Normalization tolerance for pmfs and kernel rows. Inputs outside it are
/// rejected, never renormalized.
inline constexpr double kPmfTolerance = 1e-12;

/// Dense probability tensor over a product of finite alphabets, row-major
/// with the last axis fastest. Immutable after construction.
class JointPmf {
 public:
  /// Point mass on a one-symbol alphabet; a default member before assignment.
  JointPmf() : JointPmf(Unchecked{}, {Alphabet()}, {1.0}) {}
  /// Validates nonnegativity, shape and normalization; throws Error("probcore").
  JointPmf(std::vector<Alphabet> axes, std::vector<double> mass);

  /// Trusted constructor for internally derived tensors (marginals, kernel
  /// compositions). Skips the normalization check.
  static JointPmf unchecked(std::vector<Alphabet> axes, std::vector<double> mass);

  int rank() const { return static_cast<int>(axes_.size()); }
  const Alphabet& axis(int i) const { return axes_[static_cast<std::size_t>(i)]; }
  const std::vector<Alphabet>& axes() const { return axes_; }

  std::size_t size() const { return mass_.size(); }
  double at(std::size_t flat) const { return mass_[flat]; }
  double operator()(std::span<const int> index) const { return mass_[flat_index(index)]; }
  const std::vector<double>& mass() const { return mass_; }

  std::size_t flat_index(std::span<const int> index) const;
  /// Inverse of flat_index.
  std::vector<int> unflatten(std::size_t flat) const;

  /// Sum out every axis not in `keep`; result axes stay in original order.
  JointPmf marginal(std::span<const int> keep) const;

 private:
  struct Unchecked {};
  JointPmf(Unchecked, std::vector<Alphabet> axes, std::vector<double> mass);

  std::vector<Alphabet> axes_;
  std::vector<double> mass_;
  std::vector<std::size_t> strides_;
};

/// Row-stochastic kernel: one distribution over the `to` axes per tuple of
/// the `from` axes.
class ConditionalPmf {
 public:
  ConditionalPmf() : ConditionalPmf(Unchecked{}, {Alphabet()}, {Alphabet()}, {1.0}) {}
  ConditionalPmf(std::vector<Alphabet> from_axes, std::vector<Alphabet> to_axes,
                 std::vector<double> kernel);

  static ConditionalPmf unchecked(std::vector<Alphabet> from_axes,
                                  std::vector<Alphabet> to_axes,
                                  std::vector<double> kernel);
  static ConditionalPmf identity(const Alphabet& a);
  /// Ignores the input: every row equals `dist` (over `to`).
  static ConditionalPmf constant(const Alphabet& from, const Alphabet& to,
                                 std::vector<double> dist);

  const std::vector<Alphabet>& from_axes() const { return from_axes_; }
  const std::vector<Alphabet>& to_axes() const { return to_axes_; }
  std::size_t from_size() const { return rows_; }
  std::size_t to_size() const { return cols_; }
  double at(std::size_t from_flat, std::size_t to_flat) const {
    return kernel_[from_flat * cols_ + to_flat];
  }
  const std::vector<double>& kernel() const { return kernel_; }

 private:
  struct Unchecked {};
  ConditionalPmf(Unchecked, std::vector<Alphabet> from_axes, std::vector<Alphabet> to_axes,
                 std::vector<double> kernel);

  std::vector<Alphabet> from_axes_, to_axes_;
  std::vector<double> kernel_;
  std::size_t rows_ = 0, cols_ = 0;
};

/// Joint empirical counts of a tuple of equal-length sequences.
class EmpiricalType {
 public:
  EmpiricalType(std::vector<Alphabet> axes, std::vector<long> counts, long n);

  /// Counts the joint occurrences over aligned positions. One sequence per
  /// axis, symbols as indices. Throws on length mismatch.
  static EmpiricalType from_sequences(std::vector<Alphabet> axes,
                                      std::span<const std::vector<int>> sequences);

  long n() const { return n_; }
  const std::vector<long>& counts() const { return counts_; }
  const std::vector<Alphabet>& axes() const { return axes_; }
  std::vector<double> frequencies() const;

 private:
  std::vector<Alphabet> axes_;
  std::vector<long> counts_;
  long n_;
};

/// P(x) * W(u|x): axes of the result are marginal axes followed by kernel
/// `to` axes. The kernel's `from` axes must match the marginal's axes.
JointPmf join(const JointPmf& marginal, const ConditionalPmf& kernel);

/// Independent product p (x) q.
JointPmf product(const JointPmf& p, const JointPmf& q);

/// Doubly symmetric binary source: uniform marginals, crossover p.
JointPmf dsbs(double crossover);

/// Chain P(y0) W1(y1|y0) W2(y2|y1) ... as one joint pmf.
JointPmf markov_chain(const JointPmf& initial, std::span<const ConditionalPmf> kernels);

}  // namespace khoplab
