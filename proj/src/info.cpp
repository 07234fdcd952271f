#include "khoplab/info.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "khoplab/error.hpp"

namespace khoplab {

namespace {

[[noreturn]] void fail(const std::string& message) { throw Error("probcore", message); }

std::vector<int> merged_disjoint(std::initializer_list<std::span<const int>> sets) {
  std::vector<int> all;
  for (auto s : sets) all.insert(all.end(), s.begin(), s.end());
  std::vector<int> sorted = all;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    fail("axis sets must be disjoint");
  }
  return all;
}

double entropy_of(const std::vector<double>& mass) {
  long double h = 0.0L;
  for (double x : mass) {
    if (x > 0.0) h -= static_cast<long double>(x) * std::log2(static_cast<long double>(x));
  }
  return static_cast<double>(h);
}

double marginal_entropy(const JointPmf& p, std::span<const int> axes) {
  if (axes.empty()) return 0.0;  // empty conditioning set: H() = 0
  if (static_cast<int>(axes.size()) == p.rank()) return entropy_of(p.mass());
  return entropy_of(p.marginal(axes).mass());
}

}  // namespace

double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

double entropy(const JointPmf& p) { return entropy_of(p.mass()); }

double conditional_entropy(const JointPmf& p, std::span<const int> target,
                           std::span<const int> given) {
  if (target.empty()) fail("conditional_entropy: target axes must be nonempty");
  const std::vector<int> joint = merged_disjoint({target, given});
  return marginal_entropy(p, joint) - marginal_entropy(p, given);
}

double mutual_information(const JointPmf& p, std::span<const int> a, std::span<const int> b) {
  if (a.empty() || b.empty()) fail("mutual_information: axis sets must be nonempty");
  const std::vector<int> joint = merged_disjoint({a, b});
  return marginal_entropy(p, a) + marginal_entropy(p, b) - marginal_entropy(p, joint);
}

double conditional_mutual_information(const JointPmf& p, std::span<const int> a,
                                      std::span<const int> b, std::span<const int> c) {
  if (a.empty() || b.empty()) fail("conditional_mutual_information: a, b must be nonempty");
  const std::vector<int> abc = merged_disjoint({a, b, c});
  std::vector<int> ac(a.begin(), a.end());
  ac.insert(ac.end(), c.begin(), c.end());
  std::vector<int> bc(b.begin(), b.end());
  bc.insert(bc.end(), c.begin(), c.end());
  return marginal_entropy(p, ac) + marginal_entropy(p, bc) - marginal_entropy(p, abc) -
         marginal_entropy(p, c);
}

double kl_divergence(const JointPmf& p, const JointPmf& q) {
  if (p.axes() != q.axes()) fail("kl_divergence: shape mismatch");
  long double d = 0.0L;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pi = p.at(i);
    if (pi <= 0.0) continue;
    const double qi = q.at(i);
    if (qi <= 0.0) return std::numeric_limits<double>::infinity();
    d += static_cast<long double>(pi) * (std::log2(static_cast<long double>(pi)) -
                                         std::log2(static_cast<long double>(qi)));
  }
  return static_cast<double>(d);
}

}  // namespace khoplab
