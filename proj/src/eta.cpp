#include "khoplab/eta.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "khoplab/error.hpp"
#include "khoplab/info.hpp"
#include "khoplab/rng.hpp"
#include "khoplab/threading.hpp"

namespace khoplab {

namespace {

[[noreturn]] void fail(const std::string& message) { throw Error("exponents", message); }

constexpr double kFeasibilitySlack = 1e-6;

/// Precomputed views of a two-axis pair pmf P_{Y0 Y1}.
struct PairView {
  int y0 = 0, y1 = 0;
  std::vector<double> joint;        // [y0][y1]
  std::vector<double> p0, p1;       // marginals
  std::vector<double> cond;         // P(y1|y0), rows of p0-supported y0 only
  double h_y0 = 0.0;                // H(Y0) bits
  double h_y1 = 0.0;
  double mi = 0.0;                  // I(Y0;Y1) bits
};

PairView make_view(const JointPmf& pair) {
  if (pair.rank() != 2) fail("eta expects a two-axis pair pmf over (Y_prev, Y_next)");
  PairView v;
  v.y0 = pair.axis(0).size();
  v.y1 = pair.axis(1).size();
  v.joint = pair.mass();
  v.p0.assign(static_cast<std::size_t>(v.y0), 0.0);
  v.p1.assign(static_cast<std::size_t>(v.y1), 0.0);
  for (int a = 0; a < v.y0; ++a) {
    for (int b = 0; b < v.y1; ++b) {
      const double w = v.joint[static_cast<std::size_t>(a * v.y1 + b)];
      v.p0[static_cast<std::size_t>(a)] += w;
      v.p1[static_cast<std::size_t>(b)] += w;
    }
  }
  v.cond.assign(v.joint.size(), 0.0);
  for (int a = 0; a < v.y0; ++a) {
    if (v.p0[static_cast<std::size_t>(a)] <= 0.0) continue;
    for (int b = 0; b < v.y1; ++b) {
      v.cond[static_cast<std::size_t>(a * v.y1 + b)] =
          v.joint[static_cast<std::size_t>(a * v.y1 + b)] / v.p0[static_cast<std::size_t>(a)];
    }
  }
  const std::vector<int> ax0{0}, ax1{1};
  v.h_y0 = entropy(pair.marginal(ax0));
  v.h_y1 = entropy(pair.marginal(ax1));
  v.mi = mutual_information(pair, ax0, ax1);
  return v;
}

/// Test channel q(u|y0) with its two information coordinates.
struct Candidate {
  double rate = 0.0;   // I(U;Y0)
  double value = 0.0;  // I(U;Y1)
  std::vector<double> kernel;  // [y0][u]
};

void measure(const PairView& v, int aux, Candidate& c) {
  std::vector<double> qu(static_cast<std::size_t>(aux), 0.0);
  std::vector<double> m(static_cast<std::size_t>(aux * v.y1), 0.0);
  for (int a = 0; a < v.y0; ++a) {
    for (int u = 0; u < aux; ++u) {
      const double k = c.kernel[static_cast<std::size_t>(a * aux + u)];
      qu[static_cast<std::size_t>(u)] += v.p0[static_cast<std::size_t>(a)] * k;
      for (int b = 0; b < v.y1; ++b) {
        m[static_cast<std::size_t>(u * v.y1 + b)] +=
            v.joint[static_cast<std::size_t>(a * v.y1 + b)] * k;
      }
    }
  }
  long double rate = 0.0L, value = 0.0L;
  for (int u = 0; u < aux; ++u) {
    const double pu = qu[static_cast<std::size_t>(u)];
    if (pu <= 0.0) continue;
    for (int a = 0; a < v.y0; ++a) {
      const double w = v.p0[static_cast<std::size_t>(a)] *
                       c.kernel[static_cast<std::size_t>(a * aux + u)];
      if (w > 0.0) rate += w * std::log2(w / (v.p0[static_cast<std::size_t>(a)] * pu));
    }
    for (int b = 0; b < v.y1; ++b) {
      const double w = m[static_cast<std::size_t>(u * v.y1 + b)];
      if (w > 0.0) value += w * std::log2(w / (pu * v.p1[static_cast<std::size_t>(b)]));
    }
  }
  c.rate = std::max(0.0, static_cast<double>(rate));
  c.value = std::max(0.0, static_cast<double>(value));
}

Candidate constant_candidate(const PairView& v, int aux) {
  Candidate c;
  c.kernel.assign(static_cast<std::size_t>(v.y0 * aux), 0.0);
  for (int a = 0; a < v.y0; ++a) c.kernel[static_cast<std::size_t>(a * aux)] = 1.0;
  c.rate = 0.0;
  c.value = 0.0;
  return c;
}

Candidate identity_candidate(const PairView& v, int aux) {
  Candidate c;
  c.kernel.assign(static_cast<std::size_t>(v.y0 * aux), 0.0);
  for (int a = 0; a < v.y0; ++a) c.kernel[static_cast<std::size_t>(a * aux + a)] = 1.0;
  measure(v, aux, c);
  return c;
}

/// Alternating maximization of I(U;Y1) - lambda * I(U;Y0) from one starting
/// channel. The update is the usual self-consistent pair: recompute the
/// decoder posteriors, then reassign each y0 row by a softmax of
/// log q(u) - (1/lambda) D(P(.|y0) || q(.|u)).
Candidate ascend(const PairView& v, int aux, double lambda, Candidate start,
                 const EtaOptions& opts) {
  const double inv_lambda = 1.0 / lambda;
  Candidate c = std::move(start);
  std::vector<double> qu(static_cast<std::size_t>(aux));
  std::vector<double> dec(static_cast<std::size_t>(aux * v.y1));
  std::vector<double> logit(static_cast<std::size_t>(aux));
  double previous_objective = -std::numeric_limits<double>::infinity();
  for (int iteration = 0; iteration < opts.max_iterations; ++iteration) {
    std::fill(qu.begin(), qu.end(), 0.0);
    std::fill(dec.begin(), dec.end(), 0.0);
    for (int a = 0; a < v.y0; ++a) {
      for (int u = 0; u < aux; ++u) {
        const double k = c.kernel[static_cast<std::size_t>(a * aux + u)];
        qu[static_cast<std::size_t>(u)] += v.p0[static_cast<std::size_t>(a)] * k;
        for (int b = 0; b < v.y1; ++b) {
          dec[static_cast<std::size_t>(u * v.y1 + b)] +=
              v.joint[static_cast<std::size_t>(a * v.y1 + b)] * k;
        }
      }
    }
    for (int u = 0; u < aux; ++u) {
      const double pu = qu[static_cast<std::size_t>(u)];
      for (int b = 0; b < v.y1; ++b) {
        double& x = dec[static_cast<std::size_t>(u * v.y1 + b)];
        x = pu > 0.0 ? x / pu : 1.0 / static_cast<double>(v.y1);
      }
    }
    for (int a = 0; a < v.y0; ++a) {
      if (v.p0[static_cast<std::size_t>(a)] <= 0.0) continue;
      double best = -std::numeric_limits<double>::infinity();
      for (int u = 0; u < aux; ++u) {
        const double pu = qu[static_cast<std::size_t>(u)];
        double score;
        if (pu <= 0.0) {
          score = -std::numeric_limits<double>::infinity();
        } else {
          double divergence = 0.0;  // nats
          for (int b = 0; b < v.y1; ++b) {
            const double pb = v.cond[static_cast<std::size_t>(a * v.y1 + b)];
            if (pb <= 0.0) continue;
            const double qb = dec[static_cast<std::size_t>(u * v.y1 + b)];
            if (qb <= 0.0) {
              divergence = std::numeric_limits<double>::infinity();
              break;
            }
            divergence += pb * std::log(pb / qb);
          }
          score = std::isinf(divergence) ? -std::numeric_limits<double>::infinity()
                                         : std::log(pu) - inv_lambda * divergence;
        }
        logit[static_cast<std::size_t>(u)] = score;
        best = std::max(best, score);
      }
      double z = 0.0;
      for (int u = 0; u < aux; ++u) {
        double& x = logit[static_cast<std::size_t>(u)];
        x = std::isinf(best) ? 0.0 : std::exp(x - best);
        z += x;
      }
      if (z <= 0.0) {  // pathological start: park the row on symbol 0
        std::fill(logit.begin(), logit.end(), 0.0);
        logit[0] = 1.0;
        z = 1.0;
      }
      for (int u = 0; u < aux; ++u) {
        c.kernel[static_cast<std::size_t>(a * aux + u)] = logit[static_cast<std::size_t>(u)] / z;
      }
    }
    measure(v, aux, c);
    const double objective = c.value - lambda * c.rate;
    if (std::abs(objective - previous_objective) < opts.tolerance) break;
    previous_objective = objective;
  }
  return c;
}

bool better_point(const Candidate& a, const Candidate& b, double lambda) {
  const double ga = a.value - lambda * a.rate;
  const double gb = b.value - lambda * b.rate;
  if (std::abs(ga - gb) > 1e-12) return ga > gb;
  if (std::abs(a.rate - b.rate) > 1e-12) return a.rate < b.rate;  // tie: cheaper channel
  return a.kernel < b.kernel;                                     // full determinism
}

/// Multi-restart solve of the lambda-relaxed problem.
Candidate solve_lagrangian(const PairView& v, int aux, double lambda, const EtaOptions& opts,
                           std::uint64_t salt) {
  if (lambda <= 0.0 && aux >= v.y0) return identity_candidate(v, aux);
  const double lam = std::max(lambda, 1e-9);
  Candidate best = ascend(v, aux, lam, identity_candidate(v, aux), opts);
  Rng rng(mix_seed(opts.seed, salt, static_cast<std::uint64_t>(lam * 1e9)));
  for (int r = 1; r < opts.restarts; ++r) {
    Candidate start;
    start.kernel.assign(static_cast<std::size_t>(v.y0 * aux), 0.0);
    for (int a = 0; a < v.y0; ++a) {
      double row_sum = 0.0;
      for (int u = 0; u < aux; ++u) {
        const double g = -std::log(std::max(rng.uniform(), 1e-300));
        start.kernel[static_cast<std::size_t>(a * aux + u)] = g;
        row_sum += g;
      }
      for (int u = 0; u < aux; ++u) {
        start.kernel[static_cast<std::size_t>(a * aux + u)] /= row_sum;
      }
    }
    Candidate candidate = ascend(v, aux, lam, std::move(start), opts);
    if (better_point(candidate, best, lam)) best = candidate;
  }
  return best;
}

ConditionalPmf to_channel(const PairView& v, int aux, const Alphabet& y0_axis,
                          const Candidate& c) {
  std::vector<double> kernel = c.kernel;
  for (int a = 0; a < v.y0; ++a) {
    double row = 0.0;
    for (int u = 0; u < aux; ++u) row += kernel[static_cast<std::size_t>(a * aux + u)];
    if (row > 0.0) {
      for (int u = 0; u < aux; ++u) kernel[static_cast<std::size_t>(a * aux + u)] /= row;
    } else {
      kernel[static_cast<std::size_t>(a * aux)] = 1.0;
    }
  }
  return ConditionalPmf::unchecked({y0_axis}, {Alphabet::indexed(aux, "u")}, std::move(kernel));
}

int default_aux(const PairView& v, int requested) {
  if (requested == 0) return v.y0 + 1;
  if (requested < 1) fail("auxiliary cardinality must be >= 1");
  return requested;
}

}  // namespace

double EtaCurve::value_at(double rate) const {
  if (rates.empty()) fail("empty curve");
  if (rate < -1e-12 || rate > max_rate() + 1e-9) {
    fail("rate " + std::to_string(rate) + " outside curve range [0, " +
         std::to_string(max_rate()) + "]");
  }
  const double r = std::clamp(rate, rates.front(), rates.back());
  auto it = std::upper_bound(rates.begin(), rates.end(), r);
  if (it == rates.begin()) return values.front();
  if (it == rates.end()) return values.back();
  const std::size_t hi = static_cast<std::size_t>(it - rates.begin());
  const std::size_t lo = hi - 1;
  const double span = rates[hi] - rates[lo];
  if (span <= 0.0) return std::max(values[lo], values[hi]);
  const double w = (r - rates[lo]) / span;
  return values[lo] + w * (values[hi] - values[lo]);
}

EtaPoint eta(const JointPmf& pair, double rate, EtaOptions options) {
  if (rate < 0.0) fail("rate must be nonnegative");
  const PairView v = make_view(pair);
  const int aux = default_aux(v, options.aux_card);
  const Alphabet& y0_axis = pair.axis(0);

  if (rate <= 1e-12) {
    Candidate c = constant_candidate(v, aux);
    return EtaPoint{0.0, 0.0, to_channel(v, aux, y0_axis, c)};
  }
  if (aux >= v.y0 && rate >= v.h_y0 - 1e-12) {
    Candidate c = identity_candidate(v, aux);
    return EtaPoint{c.rate, c.value, to_channel(v, aux, y0_axis, c)};
  }

  Candidate best_feasible = constant_candidate(v, aux);
  bool have_infeasible = false;
  Candidate tight_infeasible;

  auto consider = [&](const Candidate& c) {
    if (c.rate <= rate + 1e-9) {
      if (c.value > best_feasible.value + 1e-12 ||
          (std::abs(c.value - best_feasible.value) <= 1e-12 && c.rate < best_feasible.rate)) {
        best_feasible = c;
      }
    } else if (!have_infeasible || c.rate < tight_infeasible.rate) {
      have_infeasible = true;
      tight_infeasible = c;
    }
  };

  double lambda_lo = 1e-6;  // nearly unconstrained
  double lambda_hi = 1.0;   // value never buys more than rate (DPI)
  consider(solve_lagrangian(v, aux, lambda_hi, options, 1));
  consider(solve_lagrangian(v, aux, lambda_lo, options, 2));
  for (int step = 0; step < 40; ++step) {
    const double lambda = 0.5 * (lambda_lo + lambda_hi);
    const Candidate c = solve_lagrangian(v, aux, lambda, options, 3 + static_cast<std::uint64_t>(step));
    consider(c);
    if (c.rate > rate) {
      lambda_lo = lambda;
    } else {
      lambda_hi = lambda;
    }
  }

  // A kink between the bracketing solutions is filled by time sharing when
  // the combined supports fit the auxiliary alphabet.
  if (have_infeasible && tight_infeasible.rate > best_feasible.rate + 1e-12) {
    std::vector<int> support_f, support_i;
    auto support_of = [&](const Candidate& c, std::vector<int>& out) {
      for (int u = 0; u < aux; ++u) {
        double mass = 0.0;
        for (int a = 0; a < v.y0; ++a) {
          mass += v.p0[static_cast<std::size_t>(a)] *
                  c.kernel[static_cast<std::size_t>(a * aux + u)];
        }
        if (mass > 1e-12) out.push_back(u);
      }
    };
    support_of(best_feasible, support_f);
    support_of(tight_infeasible, support_i);
    if (static_cast<int>(support_f.size() + support_i.size()) <= aux) {
      const double tau =
          (tight_infeasible.rate - rate) / (tight_infeasible.rate - best_feasible.rate);
      Candidate mixed;
      mixed.kernel.assign(static_cast<std::size_t>(v.y0 * aux), 0.0);
      for (int a = 0; a < v.y0; ++a) {
        int slot = 0;
        for (int u : support_f) {
          mixed.kernel[static_cast<std::size_t>(a * aux + slot++)] +=
              tau * best_feasible.kernel[static_cast<std::size_t>(a * aux + u)];
        }
        for (int u : support_i) {
          mixed.kernel[static_cast<std::size_t>(a * aux + slot++)] +=
              (1.0 - tau) * tight_infeasible.kernel[static_cast<std::size_t>(a * aux + u)];
        }
        // Renormalize the row against drift from pruned near-zero symbols.
        double row = 0.0;
        for (int u = 0; u < aux; ++u) row += mixed.kernel[static_cast<std::size_t>(a * aux + u)];
        for (int u = 0; u < aux; ++u) mixed.kernel[static_cast<std::size_t>(a * aux + u)] /= row;
      }
      measure(v, aux, mixed);
      if (mixed.rate <= rate + kFeasibilitySlack / 2 && mixed.value > best_feasible.value) {
        best_feasible = mixed;
      }
    }
  }

  return EtaPoint{best_feasible.rate, best_feasible.value,
                  to_channel(v, aux, y0_axis, best_feasible)};
}

namespace {

/// Exhaustive grid enumeration. Channels are enumerated as multisets of
/// grid columns (q(u|y0) for fixed u), lexicographically nondecreasing, so
/// each channel modulo relabeling of U appears exactly once. The last column
/// is implied by the per-row budgets.
struct OracleSweep {
  const PairView* v;
  int aux = 0, steps = 0;
  std::vector<double> targets;          // rate budgets, any order
  std::vector<double> best;             // per target
  std::vector<double> xlog2x;           // i/g * log2(i/g)
  std::vector<double> grid;             // i/g
  double max_target = 0.0;

  std::vector<int> column;              // scratch, size y0
  std::vector<int> remaining;           // per-row budget left
  std::vector<std::vector<int>> chosen; // columns picked so far
  std::vector<double> qu;               // aux entries, filled progressively
  std::vector<double> mix;              // aux * y1
  double h_cond_partial = 0.0;

  void run_from_first_column(const std::vector<int>& first);
  void recurse(int picked, double h_cond, const std::vector<int>& previous);
  void evaluate_leaf(double h_cond);
  void place_column(int u, const std::vector<int>& c, double& h_cond) {
    for (int a = 0; a < v->y0; ++a) {
      const double q = grid[static_cast<std::size_t>(c[static_cast<std::size_t>(a)])];
      qu[static_cast<std::size_t>(u)] += v->p0[static_cast<std::size_t>(a)] * q;
      for (int b = 0; b < v->y1; ++b) {
        mix[static_cast<std::size_t>(u * v->y1 + b)] +=
            v->joint[static_cast<std::size_t>(a * v->y1 + b)] * q;
      }
      h_cond -= v->p0[static_cast<std::size_t>(a)] *
                xlog2x[static_cast<std::size_t>(c[static_cast<std::size_t>(a)])];
    }
  }
  void remove_column(int u, const std::vector<int>& c) {
    for (int a = 0; a < v->y0; ++a) {
      const double q = grid[static_cast<std::size_t>(c[static_cast<std::size_t>(a)])];
      qu[static_cast<std::size_t>(u)] -= v->p0[static_cast<std::size_t>(a)] * q;
      for (int b = 0; b < v->y1; ++b) {
        mix[static_cast<std::size_t>(u * v->y1 + b)] -=
            v->joint[static_cast<std::size_t>(a * v->y1 + b)] * q;
      }
    }
  }
};

void OracleSweep::evaluate_leaf(double h_cond) {
  double h_u = 0.0;
  for (int u = 0; u < aux; ++u) {
    const double pu = qu[static_cast<std::size_t>(u)];
    if (pu > 0.0) h_u -= pu * std::log2(pu);
  }
  const double rate = std::max(0.0, h_u - h_cond);
  if (rate > max_target + 1e-12) return;
  double h_y1_u = 0.0;
  for (int u = 0; u < aux; ++u) {
    const double pu = qu[static_cast<std::size_t>(u)];
    if (pu <= 0.0) continue;
    double inner = 0.0;
    for (int b = 0; b < v->y1; ++b) {
      const double w = mix[static_cast<std::size_t>(u * v->y1 + b)];
      if (w > 0.0) inner += w * std::log2(w);
    }
    h_y1_u -= inner - pu * std::log2(pu);
  }
  const double value = std::max(0.0, v->h_y1 - h_y1_u);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (rate <= targets[i] + 1e-12 && value > best[i]) best[i] = value;
  }
}

void OracleSweep::recurse(int picked, double h_cond, const std::vector<int>& previous) {
  const int slots_left = aux - picked;
  if (slots_left == 1) {
    // Final column is forced by the remaining budgets.
    for (int a = 0; a < v->y0; ++a) {
      if (remaining[static_cast<std::size_t>(a)] > steps) return;
      column[static_cast<std::size_t>(a)] = remaining[static_cast<std::size_t>(a)];
    }
    if (column < previous) return;
    double h = h_cond;
    place_column(picked, column, h);
    evaluate_leaf(h);
    remove_column(picked, column);
    return;
  }
  // Feasibility: the columns still to come can cover at most steps each.
  for (int a = 0; a < v->y0; ++a) {
    if (remaining[static_cast<std::size_t>(a)] > slots_left * steps) return;
  }
  std::vector<int> c(static_cast<std::size_t>(v->y0), 0);
  // Enumerate columns lexicographically >= previous within budgets.
  const std::function<void(int, bool)> fill = [&](int row, bool at_lower_bound) {
    if (row == v->y0) {
      std::vector<int> saved_remaining = remaining;
      for (int a = 0; a < v->y0; ++a) {
        remaining[static_cast<std::size_t>(a)] -= c[static_cast<std::size_t>(a)];
      }
      double h = h_cond;
      place_column(picked, c, h);
      recurse(picked + 1, h, c);
      remove_column(picked, c);
      remaining = saved_remaining;
      return;
    }
    const int lo = at_lower_bound ? previous[static_cast<std::size_t>(row)] : 0;
    const int hi = std::min(steps, remaining[static_cast<std::size_t>(row)]);
    for (int x = lo; x <= hi; ++x) {
      c[static_cast<std::size_t>(row)] = x;
      fill(row + 1, at_lower_bound && x == lo && x == previous[static_cast<std::size_t>(row)]);
    }
  };
  fill(0, true);
}

void OracleSweep::run_from_first_column(const std::vector<int>& first) {
  std::vector<int> saved = remaining;
  for (int a = 0; a < v->y0; ++a) {
    remaining[static_cast<std::size_t>(a)] -= first[static_cast<std::size_t>(a)];
  }
  double h = 0.0;
  place_column(0, first, h);
  recurse(1, h, first);
  remove_column(0, first);
  remaining = saved;
}

}  // namespace

std::vector<double> eta_oracle_batch(const JointPmf& pair, std::span<const double> rates,
                                     int grid_steps, int aux_card) {
  const PairView v = make_view(pair);
  if (v.y0 > 3) fail("eta_oracle handles |Y_prev| <= 3 only");
  if (aux_card < 1 || aux_card > 4) fail("eta_oracle handles aux cardinality in [1, 4]");
  if (grid_steps < 1) fail("grid_steps must be >= 1");
  for (double r : rates) {
    if (r < 0.0) fail("rate must be nonnegative");
  }
  if (rates.empty()) return {};

  // First columns, in lexicographic order; work is parallelized over them and
  // maxima are merged in that fixed order.
  std::vector<std::vector<int>> firsts;
  {
    std::vector<int> c(static_cast<std::size_t>(v.y0), 0);
    const std::function<void(int)> gen = [&](int row) {
      if (row == v.y0) {
        firsts.push_back(c);
        return;
      }
      for (int x = 0; x <= grid_steps; ++x) {
        c[static_cast<std::size_t>(row)] = x;
        gen(row + 1);
      }
    };
    gen(0);
  }

  std::vector<std::vector<double>> partial(firsts.size());
  parallel_blocks(firsts.size(), [&](std::uint64_t block) {
    OracleSweep sweep;
    sweep.v = &v;
    sweep.aux = aux_card;
    sweep.steps = grid_steps;
    sweep.targets.assign(rates.begin(), rates.end());
    sweep.best.assign(rates.size(), 0.0);
    sweep.max_target = *std::max_element(sweep.targets.begin(), sweep.targets.end());
    sweep.grid.resize(static_cast<std::size_t>(grid_steps) + 1);
    sweep.xlog2x.resize(static_cast<std::size_t>(grid_steps) + 1);
    for (int i = 0; i <= grid_steps; ++i) {
      const double q = static_cast<double>(i) / static_cast<double>(grid_steps);
      sweep.grid[static_cast<std::size_t>(i)] = q;
      sweep.xlog2x[static_cast<std::size_t>(i)] = q > 0.0 ? q * std::log2(q) : 0.0;
    }
    sweep.column.assign(static_cast<std::size_t>(v.y0), 0);
    sweep.remaining.assign(static_cast<std::size_t>(v.y0), grid_steps);
    sweep.qu.assign(static_cast<std::size_t>(aux_card), 0.0);
    sweep.mix.assign(static_cast<std::size_t>(aux_card * v.y1), 0.0);
    if (aux_card == 1) {
      // Single column forced to the full budget.
      std::vector<int> only(static_cast<std::size_t>(v.y0), grid_steps);
      if (firsts[block] == only) {
        double h = 0.0;
        sweep.place_column(0, only, h);
        sweep.evaluate_leaf(h);
        sweep.remove_column(0, only);
      }
    } else {
      sweep.run_from_first_column(firsts[block]);
    }
    partial[block] = std::move(sweep.best);
  });

  std::vector<double> best(rates.size(), 0.0);
  for (const auto& p : partial) {
    for (std::size_t i = 0; i < best.size(); ++i) best[i] = std::max(best[i], p[i]);
  }
  return best;
}

double eta_oracle(const JointPmf& pair, double rate, int grid_steps, int aux_card) {
  const double r[1] = {rate};
  return eta_oracle_batch(pair, r, grid_steps, aux_card)[0];
}

EtaCurve lagrangian_sweep(const JointPmf& pair, std::span<const double> lambdas,
                          EtaOptions options, int hop) {
  if (lambdas.empty()) fail("lambda list must be nonempty");
  for (std::size_t i = 0; i + 1 < lambdas.size(); ++i) {
    if (lambdas[i] < lambdas[i + 1]) fail("lambdas must be sorted descending");
  }
  const PairView v = make_view(pair);
  const int aux = default_aux(v, options.aux_card);
  const Alphabet& y0_axis = pair.axis(0);

  std::vector<Candidate> points;
  points.push_back(constant_candidate(v, aux));  // lambda -> infinity limit
  if (aux >= v.y0) points.push_back(identity_candidate(v, aux));  // lambda = 0 limit
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (lambdas[i] < 0.0) fail("lambda must be nonnegative");
    points.push_back(solve_lagrangian(v, aux, lambdas[i], options, 1000 + i));
  }

  std::sort(points.begin(), points.end(), [](const Candidate& a, const Candidate& b) {
    if (a.rate != b.rate) return a.rate < b.rate;
    return a.value > b.value;
  });

  // Upper concave envelope; solver noise below the hull is dropped.
  std::vector<const Candidate*> hull;
  for (const Candidate& c : points) {
    if (!hull.empty() && c.rate - hull.back()->rate < 1e-12) {
      continue;  // duplicate rate, kept best value via sort order
    }
    while (hull.size() >= 2) {
      const Candidate* a = hull[hull.size() - 2];
      const Candidate* b = hull.back();
      const double cross = (b->rate - a->rate) * (c.value - a->value) -
                           (c.rate - a->rate) * (b->value - a->value);
      if (cross >= -1e-12) {
        hull.pop_back();
      } else {
        break;
      }
    }
    hull.push_back(&c);
  }

  EtaCurve curve;
  curve.hop = hop;
  curve.aux_cardinality = aux;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Candidate* c = hull[i];
    const bool last = i + 1 == hull.size();
    // Points that do not improve the value are dominated by a cheaper
    // channel; keep the terminal one anyway so the curve covers its full
    // rate span.
    if (!curve.values.empty() && c->value <= curve.values.back() + 1e-12 && !last) continue;
    double value = c->value;
    if (!curve.values.empty() && value < curve.values.back()) value = curve.values.back();
    curve.rates.push_back(c->rate);
    curve.values.push_back(value);
    curve.channels.push_back(to_channel(v, aux, y0_axis, *c));
  }
  return curve;
}

}  // namespace khoplab
