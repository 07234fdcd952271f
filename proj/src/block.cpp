#include "khoplab/block.hpp"

#include <cmath>
#include <string>

#include "khoplab/error.hpp"
#include "khoplab/typicality.hpp"

namespace khoplab {

IidBlockMeasure::IidBlockMeasure(JointPmf base, int n) : base_(std::move(base)), n_(n) {
  if (n_ < 1) throw Error("probcore", "blocklength must be >= 1");
  independent_cell_.assign(base_.size(), 1.0);
  for (int axis = 0; axis < base_.rank(); ++axis) {
    const JointPmf m = base_.marginal(std::vector<int>{axis});
    for (std::size_t cell = 0; cell < base_.size(); ++cell) {
      independent_cell_[cell] *= m.at(static_cast<std::size_t>(base_.unflatten(cell)[axis]));
    }
  }
}

std::uint64_t IidBlockMeasure::space_size() const {
  const std::uint64_t a = base_.size();
  std::uint64_t total = 1;
  for (int i = 0; i < n_; ++i) {
    if (total > (std::uint64_t{1} << 63) / a) {
      throw Error("probcore", "sequence space size overflows");
    }
    total *= a;
  }
  return total;
}

double IidBlockMeasure::prob(std::span<const int> joint_symbols) const {
  double p = 1.0;
  for (int s : joint_symbols) p *= base_.at(static_cast<std::size_t>(s));
  return p;
}

double IidBlockMeasure::prob_independent(std::span<const int> joint_symbols) const {
  double p = 1.0;
  for (int s : joint_symbols) p *= independent_cell_[static_cast<std::size_t>(s)];
  return p;
}

void IidBlockMeasure::enumerate(
    std::uint64_t cap, const std::function<void(std::uint64_t, std::span<const int>, double)>&
                           visit) const {
  const std::uint64_t total = space_size();
  if (total > cap) {
    throw Error("probcore", "enumeration of " + std::to_string(total) +
                                " tuples exceeds the cap of " + std::to_string(cap));
  }
  const int a = static_cast<int>(base_.size());
  std::vector<int> symbols(static_cast<std::size_t>(n_), 0);
  // Prefix products keep the running probability exact under the odometer.
  std::vector<double> prefix(static_cast<std::size_t>(n_) + 1, 1.0);
  for (int t = 0; t < n_; ++t) prefix[static_cast<std::size_t>(t) + 1] =
      prefix[static_cast<std::size_t>(t)] * base_.at(0);

  for (std::uint64_t index = 0;; ++index) {
    visit(index, symbols, prefix[static_cast<std::size_t>(n_)]);
    if (index + 1 == total) break;
    int t = n_ - 1;
    while (symbols[static_cast<std::size_t>(t)] == a - 1) {
      symbols[static_cast<std::size_t>(t)] = 0;
      --t;
    }
    ++symbols[static_cast<std::size_t>(t)];
    for (int u = t; u < n_; ++u) {
      prefix[static_cast<std::size_t>(u) + 1] =
          prefix[static_cast<std::size_t>(u)] *
          base_.at(static_cast<std::size_t>(symbols[static_cast<std::size_t>(u)]));
    }
  }
}

double IidBlockMeasure::typical_mass(double mu, std::uint64_t cap) const {
  const TypicalityBounds bounds = make_typicality_bounds(base_, n_, mu);
  std::vector<long> counts(base_.size(), 0);
  long double mass = 0.0L;
  std::vector<int> previous(static_cast<std::size_t>(n_), 0);
  counts[0] = n_;
  enumerate(cap, [&](std::uint64_t, std::span<const int> symbols, double p) {
    for (int t = 0; t < n_; ++t) {
      const int now = symbols[static_cast<std::size_t>(t)];
      const int before = previous[static_cast<std::size_t>(t)];
      if (now != before) {
        --counts[static_cast<std::size_t>(before)];
        ++counts[static_cast<std::size_t>(now)];
        previous[static_cast<std::size_t>(t)] = now;
      }
    }
    if (bounds.admits(counts)) mass += p;
  });
  return static_cast<double>(mass);
}

}  // namespace khoplab
