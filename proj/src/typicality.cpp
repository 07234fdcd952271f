#include "khoplab/typicality.hpp"

#include <cmath>

#include "khoplab/error.hpp"

namespace khoplab {

double default_mu(int n) {
  if (n < 1) throw Error("probcore", "blocklength must be >= 1");
  return std::pow(static_cast<double>(n), -1.0 / 3.0);
}

bool TypicalityBounds::admits(std::span<const long> counts) const {
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double c = static_cast<double>(counts[i]);
    if (c < lo[i] || c > hi[i]) return false;
  }
  return true;
}

TypicalityBounds make_typicality_bounds(const JointPmf& p, int n, double mu) {
  if (n < 1) throw Error("probcore", "blocklength must be >= 1");
  if (!(mu > 0.0)) throw Error("probcore", "typicality slack mu must be positive");
  TypicalityBounds b;
  b.n = n;
  b.lo.resize(p.size());
  b.hi.resize(p.size());
  const double nd = static_cast<double>(n);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pi = p.at(i);
    if (pi == 0.0) {
      b.lo[i] = 0.0;
      b.hi[i] = 0.0;  // support condition: empirical mass must vanish
    } else {
      b.lo[i] = nd * (pi - mu);
      b.hi[i] = nd * (pi + mu);
    }
  }
  return b;
}

bool is_strongly_typical(const EmpiricalType& type, const JointPmf& p, double mu) {
  if (type.axes() != p.axes()) throw Error("probcore", "typicality: axes mismatch");
  const TypicalityBounds b = make_typicality_bounds(p, static_cast<int>(type.n()), mu);
  return b.admits(type.counts());
}

bool is_strongly_typical(std::span<const std::vector<int>> sequences, const JointPmf& p,
                         double mu) {
  return is_strongly_typical(EmpiricalType::from_sequences(p.axes(), sequences), p, mu);
}

}  // namespace khoplab
