#include "khoplab/pmf.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "khoplab/error.hpp"

namespace khoplab {

namespace {

[[noreturn]] void fail(const std::string& message) { throw Error("probcore", message); }

std::vector<std::size_t> make_strides(const std::vector<Alphabet>& axes) {
  std::vector<std::size_t> strides(axes.size(), 1);
  for (int i = static_cast<int>(axes.size()) - 2; i >= 0; --i) {
    strides[static_cast<std::size_t>(i)] =
        strides[static_cast<std::size_t>(i + 1)] *
        static_cast<std::size_t>(axes[static_cast<std::size_t>(i + 1)].size());
  }
  return strides;
}

std::size_t shape_size(const std::vector<Alphabet>& axes) {
  std::size_t total = 1;
  for (const auto& a : axes) total *= static_cast<std::size_t>(a.size());
  return total;
}

long double sum_of(const std::vector<double>& v) {
  long double s = 0.0L;
  for (double x : v) s += x;
  return s;
}

}  // namespace

Alphabet::Alphabet(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
  if (symbols_.empty()) fail("alphabet must have at least one symbol");
  std::set<std::string> seen(symbols_.begin(), symbols_.end());
  if (seen.size() != symbols_.size()) fail("alphabet labels must be unique");
}

Alphabet Alphabet::binary() { return Alphabet({"0", "1"}); }

Alphabet Alphabet::indexed(int size, std::string_view prefix) {
  std::vector<std::string> labels;
  labels.reserve(static_cast<std::size_t>(size));
  for (int i = 0; i < size; ++i) labels.push_back(std::string(prefix) + std::to_string(i));
  return Alphabet(std::move(labels));
}

JointPmf::JointPmf(std::vector<Alphabet> axes, std::vector<double> mass)
    : JointPmf(Unchecked{}, std::move(axes), std::move(mass)) {
  for (double x : mass_) {
    if (!(x >= 0.0)) fail("pmf entries must be nonnegative and finite");
  }
  const long double total = sum_of(mass_);
  if (std::abs(static_cast<double>(total - 1.0L)) > kPmfTolerance) {
    fail("pmf does not sum to 1 within 1e-12 (got " + std::to_string(static_cast<double>(total)) +
         "); inputs are rejected, not renormalized");
  }
}

JointPmf::JointPmf(Unchecked, std::vector<Alphabet> axes, std::vector<double> mass)
    : axes_(std::move(axes)), mass_(std::move(mass)), strides_(make_strides(axes_)) {
  if (axes_.empty()) fail("pmf needs at least one axis");
  if (mass_.size() != shape_size(axes_)) fail("pmf tensor shape does not match axes");
}

JointPmf JointPmf::unchecked(std::vector<Alphabet> axes, std::vector<double> mass) {
  return JointPmf(Unchecked{}, std::move(axes), std::move(mass));
}

std::size_t JointPmf::flat_index(std::span<const int> index) const {
  if (index.size() != axes_.size()) fail("index rank mismatch");
  std::size_t flat = 0;
  for (std::size_t i = 0; i < index.size(); ++i) {
    const int v = index[i];
    if (v < 0 || v >= axes_[i].size()) fail("symbol index out of range");
    flat += static_cast<std::size_t>(v) * strides_[i];
  }
  return flat;
}

std::vector<int> JointPmf::unflatten(std::size_t flat) const {
  std::vector<int> index(axes_.size());
  for (std::size_t i = 0; i < axes_.size(); ++i) {
    index[i] = static_cast<int>(flat / strides_[i]);
    flat %= strides_[i];
  }
  return index;
}

JointPmf JointPmf::marginal(std::span<const int> keep) const {
  if (keep.empty()) fail("marginalize: keep set must be nonempty");
  std::vector<int> sorted(keep.begin(), keep.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    fail("marginalize: duplicate axis index");
  }
  for (int i : sorted) {
    if (i < 0 || i >= rank()) fail("marginalize: invalid axis index " + std::to_string(i));
  }

  std::vector<Alphabet> out_axes;
  std::vector<std::size_t> out_strides_src;
  out_axes.reserve(sorted.size());
  for (int i : sorted) {
    out_axes.push_back(axes_[static_cast<std::size_t>(i)]);
    out_strides_src.push_back(strides_[static_cast<std::size_t>(i)]);
  }
  const std::vector<std::size_t> out_strides = make_strides(out_axes);
  std::vector<double> out(shape_size(out_axes), 0.0);

  std::vector<int> index(axes_.size(), 0);
  for (std::size_t flat = 0; flat < mass_.size(); ++flat) {
    std::size_t out_flat = 0;
    for (std::size_t j = 0; j < sorted.size(); ++j) {
      out_flat += (flat / out_strides_src[j] %
                   static_cast<std::size_t>(out_axes[j].size())) * out_strides[j];
    }
    out[out_flat] += mass_[flat];
  }
  return JointPmf::unchecked(std::move(out_axes), std::move(out));
}

ConditionalPmf::ConditionalPmf(std::vector<Alphabet> from_axes, std::vector<Alphabet> to_axes,
                               std::vector<double> kernel)
    : ConditionalPmf(Unchecked{}, std::move(from_axes), std::move(to_axes), std::move(kernel)) {
  for (std::size_t r = 0; r < rows_; ++r) {
    long double row_sum = 0.0L;
    for (std::size_t c = 0; c < cols_; ++c) {
      const double x = at(r, c);
      if (!(x >= 0.0)) fail("kernel entries must be nonnegative and finite");
      row_sum += x;
    }
    if (std::abs(static_cast<double>(row_sum - 1.0L)) > kPmfTolerance) {
      fail("kernel row " + std::to_string(r) + " does not sum to 1 within 1e-12");
    }
  }
}

ConditionalPmf::ConditionalPmf(Unchecked, std::vector<Alphabet> from_axes,
                               std::vector<Alphabet> to_axes, std::vector<double> kernel)
    : from_axes_(std::move(from_axes)), to_axes_(std::move(to_axes)), kernel_(std::move(kernel)) {
  if (from_axes_.empty() || to_axes_.empty()) fail("kernel needs from and to axes");
  rows_ = shape_size(from_axes_);
  cols_ = shape_size(to_axes_);
  if (kernel_.size() != rows_ * cols_) fail("kernel shape does not match axes");
}

ConditionalPmf ConditionalPmf::unchecked(std::vector<Alphabet> from_axes,
                                         std::vector<Alphabet> to_axes,
                                         std::vector<double> kernel) {
  return ConditionalPmf(Unchecked{}, std::move(from_axes), std::move(to_axes), std::move(kernel));
}

ConditionalPmf ConditionalPmf::identity(const Alphabet& a) {
  const std::size_t m = static_cast<std::size_t>(a.size());
  std::vector<double> kernel(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i) kernel[i * m + i] = 1.0;
  return ConditionalPmf::unchecked({a}, {a}, std::move(kernel));
}

ConditionalPmf ConditionalPmf::constant(const Alphabet& from, const Alphabet& to,
                                        std::vector<double> dist) {
  const std::size_t rows = static_cast<std::size_t>(from.size());
  const std::size_t cols = static_cast<std::size_t>(to.size());
  if (dist.size() != cols) fail("constant kernel: distribution size mismatch");
  std::vector<double> kernel(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy(dist.begin(), dist.end(), kernel.begin() + static_cast<std::ptrdiff_t>(r * cols));
  }
  return ConditionalPmf({from}, {to}, std::move(kernel));
}

EmpiricalType::EmpiricalType(std::vector<Alphabet> axes, std::vector<long> counts, long n)
    : axes_(std::move(axes)), counts_(std::move(counts)), n_(n) {
  if (n_ < 1) fail("empirical type needs n >= 1");
  if (counts_.size() != shape_size(axes_)) fail("empirical type shape mismatch");
  long total = 0;
  for (long c : counts_) {
    if (c < 0) fail("empirical counts must be nonnegative");
    total += c;
  }
  if (total != n_) fail("empirical counts must sum to n");
}

EmpiricalType EmpiricalType::from_sequences(std::vector<Alphabet> axes,
                                            std::span<const std::vector<int>> sequences) {
  if (sequences.size() != axes.size()) fail("one sequence per axis required");
  const std::size_t n = sequences.empty() ? 0 : sequences[0].size();
  if (n == 0) fail("sequences must be nonempty");
  for (const auto& s : sequences) {
    if (s.size() != n) fail("sequence length mismatch");
  }
  const std::vector<std::size_t> strides = make_strides(axes);
  std::vector<long> counts(shape_size(axes), 0);
  for (std::size_t t = 0; t < n; ++t) {
    std::size_t flat = 0;
    for (std::size_t a = 0; a < axes.size(); ++a) {
      const int v = sequences[a][t];
      if (v < 0 || v >= axes[a].size()) fail("sequence symbol out of range");
      flat += static_cast<std::size_t>(v) * strides[a];
    }
    ++counts[flat];
  }
  return EmpiricalType(std::move(axes), std::move(counts), static_cast<long>(n));
}

std::vector<double> EmpiricalType::frequencies() const {
  std::vector<double> f(counts_.size());
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    f[i] = static_cast<double>(counts_[i]) / static_cast<double>(n_);
  }
  return f;
}

JointPmf join(const JointPmf& marginal, const ConditionalPmf& kernel) {
  if (kernel.from_axes() != marginal.axes()) fail("join: kernel from-axes must match marginal");
  std::vector<Alphabet> axes = marginal.axes();
  axes.insert(axes.end(), kernel.to_axes().begin(), kernel.to_axes().end());
  const std::size_t cols = kernel.to_size();
  std::vector<double> mass(marginal.size() * cols);
  for (std::size_t r = 0; r < marginal.size(); ++r) {
    const double p = marginal.at(r);
    for (std::size_t c = 0; c < cols; ++c) mass[r * cols + c] = p * kernel.at(r, c);
  }
  return JointPmf::unchecked(std::move(axes), std::move(mass));
}

JointPmf product(const JointPmf& p, const JointPmf& q) {
  std::vector<Alphabet> axes = p.axes();
  axes.insert(axes.end(), q.axes().begin(), q.axes().end());
  std::vector<double> mass(p.size() * q.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = 0; j < q.size(); ++j) mass[i * q.size() + j] = p.at(i) * q.at(j);
  }
  return JointPmf::unchecked(std::move(axes), std::move(mass));
}

JointPmf dsbs(double crossover) {
  if (!(crossover >= 0.0 && crossover <= 1.0)) fail("dsbs crossover must be in [0,1]");
  const double agree = (1.0 - crossover) / 2.0;
  const double differ = crossover / 2.0;
  return JointPmf::unchecked({Alphabet::binary(), Alphabet::binary()},
                             {agree, differ, differ, agree});
}

JointPmf markov_chain(const JointPmf& initial, std::span<const ConditionalPmf> kernels) {
  if (initial.rank() != 1) fail("markov_chain: initial pmf must be single-axis");
  JointPmf chain = initial;
  for (const auto& kernel : kernels) {
    if (kernel.from_axes().size() != 1 || kernel.to_axes().size() != 1) {
      fail("markov_chain: kernels must be single-axis");
    }
    if (!(kernel.from_axes()[0] == chain.axis(chain.rank() - 1))) {
      fail("markov_chain: kernel input alphabet mismatch");
    }
    // Extend P(y0..yl) by W(y_{l+1} | y_l): condition only on the last axis.
    std::vector<Alphabet> axes = chain.axes();
    axes.push_back(kernel.to_axes()[0]);
    const std::size_t last = static_cast<std::size_t>(chain.axis(chain.rank() - 1).size());
    const std::size_t cols = kernel.to_size();
    std::vector<double> mass(chain.size() * cols);
    for (std::size_t i = 0; i < chain.size(); ++i) {
      const std::size_t y_last = i % last;
      for (std::size_t c = 0; c < cols; ++c) mass[i * cols + c] = chain.at(i) * kernel.at(y_last, c);
    }
    chain = JointPmf::unchecked(std::move(axes), std::move(mass));
  }
  return chain;
}

}  // namespace khoplab
