#include "khoplab/wyner_ziv.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>

#include "khoplab/error.hpp"
#include "khoplab/info.hpp"
#include "khoplab/rng.hpp"
#include "khoplab/threading.hpp"

namespace khoplab {

namespace {

[[noreturn]] void fail(const std::string& message) { throw Error("exponents", message); }

constexpr double kDistortionSlack = 1e-12;

struct WzView {
  int nx = 0, ny = 0, nz = 0, ns = 0;
  std::vector<double> joint;     // p(x,y)
  std::vector<double> px, py;
  std::vector<double> y_given_x;  // p(y|x)
  std::vector<double> x_given_y;  // p(x|y)
  const DistortionSpec* dist = nullptr;
};

WzView make_view(const JointPmf& p_xy, const DistortionSpec& d, int s_card) {
  if (p_xy.rank() != 2) fail("wyner_ziv expects a two-axis pmf over (X, Y)");
  if (d.reconstruction.size() < 1) fail("empty reconstruction alphabet");
  WzView v;
  v.nx = p_xy.axis(0).size();
  v.ny = p_xy.axis(1).size();
  v.nz = d.reconstruction.size();
  v.ns = s_card;
  if (d.table.size() != static_cast<std::size_t>(v.nx * v.nz)) {
    fail("distortion table shape mismatch");
  }
  for (double x : d.table) {
    if (!(x >= 0.0)) fail("distortion entries must be nonnegative");
  }
  if (d.max_distortion < 0.0) fail("maximum distortion must be nonnegative");
  v.joint = p_xy.mass();
  v.px.assign(static_cast<std::size_t>(v.nx), 0.0);
  v.py.assign(static_cast<std::size_t>(v.ny), 0.0);
  for (int x = 0; x < v.nx; ++x) {
    for (int y = 0; y < v.ny; ++y) {
      const double w = v.joint[static_cast<std::size_t>(x * v.ny + y)];
      v.px[static_cast<std::size_t>(x)] += w;
      v.py[static_cast<std::size_t>(y)] += w;
    }
  }
  v.y_given_x.assign(v.joint.size(), 0.0);
  v.x_given_y.assign(v.joint.size(), 0.0);
  for (int x = 0; x < v.nx; ++x) {
    for (int y = 0; y < v.ny; ++y) {
      const double w = v.joint[static_cast<std::size_t>(x * v.ny + y)];
      if (v.px[static_cast<std::size_t>(x)] > 0.0) {
        v.y_given_x[static_cast<std::size_t>(x * v.ny + y)] = w / v.px[static_cast<std::size_t>(x)];
      }
      if (v.py[static_cast<std::size_t>(y)] > 0.0) {
        v.x_given_y[static_cast<std::size_t>(x * v.ny + y)] = w / v.py[static_cast<std::size_t>(y)];
      }
    }
  }
  v.dist = &d;
  return v;
}

/// q(s|y) induced by q(s|x) through the source.
void posterior(const WzView& v, const std::vector<double>& q, std::vector<double>& s_given_y) {
  std::fill(s_given_y.begin(), s_given_y.end(), 0.0);
  for (int y = 0; y < v.ny; ++y) {
    for (int x = 0; x < v.nx; ++x) {
      const double pxy = v.x_given_y[static_cast<std::size_t>(x * v.ny + y)];
      if (pxy <= 0.0) continue;
      for (int s = 0; s < v.ns; ++s) {
        s_given_y[static_cast<std::size_t>(s * v.ny + y)] +=
            pxy * q[static_cast<std::size_t>(x * v.ns + s)];
      }
    }
  }
}

double conditional_mi_bits(const WzView& v, const std::vector<double>& q,
                           const std::vector<double>& s_given_y) {
  long double total = 0.0L;
  for (int x = 0; x < v.nx; ++x) {
    for (int y = 0; y < v.ny; ++y) {
      const double pxy = v.joint[static_cast<std::size_t>(x * v.ny + y)];
      if (pxy <= 0.0) continue;
      for (int s = 0; s < v.ns; ++s) {
        const double qs = q[static_cast<std::size_t>(x * v.ns + s)];
        if (qs <= 0.0) continue;
        const double wy = s_given_y[static_cast<std::size_t>(s * v.ny + y)];
        total += static_cast<long double>(pxy * qs) * std::log2(qs / wy);
      }
    }
  }
  return std::max(0.0, static_cast<double>(total));
}

double expected_distortion(const WzView& v, const std::vector<double>& q,
                           const std::vector<int>& g) {
  long double total = 0.0L;
  for (int x = 0; x < v.nx; ++x) {
    for (int y = 0; y < v.ny; ++y) {
      const double pxy = v.joint[static_cast<std::size_t>(x * v.ny + y)];
      if (pxy <= 0.0) continue;
      for (int s = 0; s < v.ns; ++s) {
        const double qs = q[static_cast<std::size_t>(x * v.ns + s)];
        if (qs <= 0.0) continue;
        total += static_cast<long double>(pxy * qs) *
                 v.dist->at(x, g[static_cast<std::size_t>(s * v.ny + y)]);
      }
    }
  }
  return static_cast<double>(total);
}

/// Distortion-minimizing deterministic map for the current channel;
/// ties broken toward the smallest z.
std::vector<int> greedy_map(const WzView& v, const std::vector<double>& q) {
  std::vector<int> g(static_cast<std::size_t>(v.ns * v.ny), 0);
  for (int s = 0; s < v.ns; ++s) {
    for (int y = 0; y < v.ny; ++y) {
      double best = std::numeric_limits<double>::infinity();
      int best_z = 0;
      for (int z = 0; z < v.nz; ++z) {
        double cost = 0.0;
        for (int x = 0; x < v.nx; ++x) {
          cost += v.joint[static_cast<std::size_t>(x * v.ny + y)] *
                  q[static_cast<std::size_t>(x * v.ns + s)] * v.dist->at(x, z);
        }
        if (cost < best - 1e-18) {
          best = cost;
          best_z = z;
        }
      }
      g[static_cast<std::size_t>(s * v.ny + y)] = best_z;
    }
  }
  return g;
}

struct InnerSolution {
  std::vector<double> q;  // [x][s]
  double mi = 0.0;        // bits
  double distortion = 0.0;
};

/// Alternating minimization of I(X;S|Y) + lambda E[d] for a fixed map. The
/// variational kernel w(s|y) tightens to the true posterior each pass; each
/// x-row is then reassigned by a softmax of sum_y p(y|x)(ln w - lambda d).
InnerSolution ba_solve(const WzView& v, const std::vector<int>& g, double lambda_nats,
                       std::vector<double> q_start, const WynerZivOptions& opts) {
  std::vector<double> q = std::move(q_start);
  std::vector<double> s_given_y(static_cast<std::size_t>(v.ns * v.ny));
  std::vector<double> score(static_cast<std::size_t>(v.ns));
  double previous = std::numeric_limits<double>::infinity();
  for (int iteration = 0; iteration < opts.max_iterations; ++iteration) {
    posterior(v, q, s_given_y);
    for (int x = 0; x < v.nx; ++x) {
      if (v.px[static_cast<std::size_t>(x)] <= 0.0) continue;
      double best = -std::numeric_limits<double>::infinity();
      for (int s = 0; s < v.ns; ++s) {
        double c = 0.0;
        for (int y = 0; y < v.ny; ++y) {
          const double pyx = v.y_given_x[static_cast<std::size_t>(x * v.ny + y)];
          if (pyx <= 0.0) continue;
          const double w = s_given_y[static_cast<std::size_t>(s * v.ny + y)];
          if (w <= 0.0) {
            c = -std::numeric_limits<double>::infinity();
            break;
          }
          c += pyx * (std::log(w) - lambda_nats * v.dist->at(x, g[static_cast<std::size_t>(s * v.ny + y)]));
        }
        score[static_cast<std::size_t>(s)] = c;
        best = std::max(best, c);
      }
      double z = 0.0;
      for (int s = 0; s < v.ns; ++s) {
        double& e = score[static_cast<std::size_t>(s)];
        e = std::isinf(best) ? 0.0 : std::exp(e - best);
        z += e;
      }
      if (z <= 0.0) {
        std::fill(score.begin(), score.end(), 0.0);
        score[0] = 1.0;
        z = 1.0;
      }
      for (int s = 0; s < v.ns; ++s) {
        q[static_cast<std::size_t>(x * v.ns + s)] = score[static_cast<std::size_t>(s)] / z;
      }
    }
    posterior(v, q, s_given_y);
    const double mi = conditional_mi_bits(v, q, s_given_y);
    const double ed = expected_distortion(v, q, g);
    const double objective = mi * std::numbers::ln2 + lambda_nats * ed;
    if (std::abs(objective - previous) < opts.tolerance) {
      return {std::move(q), mi, ed};
    }
    previous = objective;
  }
  posterior(v, q, s_given_y);
  const double mi = conditional_mi_bits(v, q, s_given_y);
  const double ed = expected_distortion(v, q, g);
  return {std::move(q), mi, ed};
}

std::vector<double> random_channel(const WzView& v, Rng& rng) {
  std::vector<double> q(static_cast<std::size_t>(v.nx * v.ns));
  for (int x = 0; x < v.nx; ++x) {
    double row = 0.0;
    for (int s = 0; s < v.ns; ++s) {
      const double gdraw = -std::log(std::max(rng.uniform(), 1e-300));
      q[static_cast<std::size_t>(x * v.ns + s)] = gdraw;
      row += gdraw;
    }
    for (int s = 0; s < v.ns; ++s) q[static_cast<std::size_t>(x * v.ns + s)] /= row;
  }
  return q;
}

std::vector<double> identity_channel(const WzView& v) {
  std::vector<double> q(static_cast<std::size_t>(v.nx * v.ns), 0.0);
  for (int x = 0; x < v.nx; ++x) {
    q[static_cast<std::size_t>(x * v.ns + std::min(x, v.ns - 1))] = 1.0;
  }
  return q;
}

struct MapSolution {
  bool feasible = false;
  double mi = 0.0;
  double distortion = 0.0;
  std::vector<double> q;
};

/// Minimal I(X;S|Y) with E[d] within budget for one fixed map, via bisection
/// on the Lagrange weight.
MapSolution solve_for_map(const WzView& v, const std::vector<int>& g, double budget,
                          const WynerZivOptions& opts, std::uint64_t salt, int restarts) {
  Rng rng(mix_seed(opts.seed, salt));
  auto evaluate = [&](double lambda) {
    InnerSolution best = ba_solve(v, g, lambda, identity_channel(v), opts);
    for (int r = 1; r < restarts; ++r) {
      InnerSolution s = ba_solve(v, g, lambda, random_channel(v, rng), opts);
      const bool fb = best.distortion <= budget + kDistortionSlack;
      const bool fs = s.distortion <= budget + kDistortionSlack;
      if ((fs && !fb) || (fs == fb && s.mi < best.mi - 1e-12) ||
          (fs == fb && std::abs(s.mi - best.mi) <= 1e-12 && s.distortion < best.distortion)) {
        best = std::move(s);
      }
    }
    return best;
  };

  MapSolution out;
  auto absorb = [&](const InnerSolution& s) {
    if (s.distortion > budget + kDistortionSlack) return;
    if (!out.feasible || s.mi < out.mi - 1e-15) {
      out.feasible = true;
      out.mi = s.mi;
      out.distortion = s.distortion;
      out.q = s.q;
    }
  };

  InnerSolution relaxed = evaluate(0.0);
  absorb(relaxed);
  if (out.feasible) return out;  // distortion met without any rate pressure

  double lo = 0.0, hi = 1.0;
  InnerSolution at_hi = evaluate(hi);
  int doublings = 0;
  while (at_hi.distortion > budget + kDistortionSlack && doublings < 40) {
    lo = hi;
    hi *= 2.0;
    at_hi = evaluate(hi);
    ++doublings;
  }
  absorb(at_hi);
  if (!out.feasible) return out;  // this map cannot meet the budget

  for (int step = 0; step < 40; ++step) {
    const double mid = 0.5 * (lo + hi);
    const InnerSolution s = evaluate(mid);
    if (s.distortion <= budget + kDistortionSlack) {
      absorb(s);
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return out;
}

ConditionalPmf channel_of(const JointPmf& p_xy, const WzView& v, const std::vector<double>& q) {
  std::vector<double> kernel = q;
  for (int x = 0; x < v.nx; ++x) {
    double row = 0.0;
    for (int s = 0; s < v.ns; ++s) row += kernel[static_cast<std::size_t>(x * v.ns + s)];
    if (row > 0.0) {
      for (int s = 0; s < v.ns; ++s) kernel[static_cast<std::size_t>(x * v.ns + s)] /= row;
    } else {
      kernel[static_cast<std::size_t>(x * v.ns)] = 1.0;
    }
  }
  return ConditionalPmf::unchecked({p_xy.axis(0)}, {Alphabet::indexed(v.ns, "s")},
                                   std::move(kernel));
}

}  // namespace

DistortionSpec hamming_distortion(const Alphabet& x, double max_distortion) {
  DistortionSpec d{x, {}, max_distortion};
  const int m = x.size();
  d.table.assign(static_cast<std::size_t>(m * m), 1.0);
  for (int i = 0; i < m; ++i) d.table[static_cast<std::size_t>(i * m + i)] = 0.0;
  return d;
}

WynerZivSolution wyner_ziv_rmin(const JointPmf& p_xy, const DistortionSpec& distortion,
                                WynerZivOptions options) {
  const int s_card = options.s_card == 0 ? p_xy.axis(0).size() + 1 : options.s_card;
  if (s_card < 1) fail("auxiliary cardinality must be >= 1");
  const WzView v = make_view(p_xy, distortion, s_card);
  const double budget = distortion.max_distortion;

  // Feasibility floor: perfect knowledge of X with a free choice of z.
  double floor = 0.0;
  for (int x = 0; x < v.nx; ++x) {
    double best = std::numeric_limits<double>::infinity();
    for (int z = 0; z < v.nz; ++z) best = std::min(best, v.dist->at(x, z));
    floor += v.px[static_cast<std::size_t>(x)] * best;
  }
  if (budget < floor - kDistortionSlack) {
    fail("distortion budget " + std::to_string(budget) + " is infeasible (floor " +
         std::to_string(floor) + ")");
  }

  // Zero-rate shortcut: a constant S with the best per-y reconstruction.
  {
    double zero_rate_distortion = 0.0;
    std::vector<int> g(static_cast<std::size_t>(v.ns * v.ny), 0);
    for (int y = 0; y < v.ny; ++y) {
      double best = std::numeric_limits<double>::infinity();
      int best_z = 0;
      for (int z = 0; z < v.nz; ++z) {
        double cost = 0.0;
        for (int x = 0; x < v.nx; ++x) {
          cost += v.joint[static_cast<std::size_t>(x * v.ny + y)] * v.dist->at(x, z);
        }
        if (cost < best - 1e-18) {
          best = cost;
          best_z = z;
        }
      }
      zero_rate_distortion += best;
      for (int s = 0; s < v.ns; ++s) g[static_cast<std::size_t>(s * v.ny + y)] = best_z;
    }
    if (zero_rate_distortion <= budget + kDistortionSlack) {
      std::vector<double> q(static_cast<std::size_t>(v.nx * v.ns), 0.0);
      for (int x = 0; x < v.nx; ++x) q[static_cast<std::size_t>(x * v.ns)] = 1.0;
      return WynerZivSolution{0.0, channel_of(p_xy, v, q), g, zero_rate_distortion};
    }
  }

  const double map_count_log2 =
      static_cast<double>(v.ns * v.ny) * std::log2(static_cast<double>(v.nz));
  const bool exhaustive =
      map_count_log2 <= 63.0 &&
      (std::uint64_t{1} << static_cast<int>(std::ceil(map_count_log2))) <= options.map_cap;

  WynerZivSolution best;
  bool have_best = false;
  auto absorb = [&](const MapSolution& s, const std::vector<int>& g) {
    if (!s.feasible) return;
    if (!have_best || s.mi < best.rate - 1e-15) {
      have_best = true;
      best.rate = s.mi;
      best.test_channel = channel_of(p_xy, v, s.q);
      best.reconstruction_map = g;
      best.achieved_distortion = s.distortion;
    }
  };

  if (exhaustive) {
    std::uint64_t total = 1;
    for (int i = 0; i < v.ns * v.ny; ++i) total *= static_cast<std::uint64_t>(v.nz);
    for (std::uint64_t code = 0; code < total; ++code) {
      std::vector<int> g(static_cast<std::size_t>(v.ns * v.ny));
      std::uint64_t rest = code;
      for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] = static_cast<int>(rest % static_cast<std::uint64_t>(v.nz));
        rest /= static_cast<std::uint64_t>(v.nz);
      }
      absorb(solve_for_map(v, g, budget, options, code, 4), g);
    }
  } else {
    // Too many maps: alternate greedy map refreshes with the inner solve.
    Rng rng(mix_seed(options.seed, 0xadaf));
    for (int r = 0; r < options.restarts; ++r) {
      std::vector<double> q = r == 0 ? identity_channel(v) : random_channel(v, rng);
      std::vector<int> g = greedy_map(v, q);
      for (int round = 0; round < 8; ++round) {
        const MapSolution s = solve_for_map(v, g, budget, options,
                                            mix_seed(static_cast<std::uint64_t>(r), round), 2);
        if (!s.feasible) break;
        absorb(s, g);
        std::vector<int> refreshed = greedy_map(v, s.q);
        if (refreshed == g) break;
        g = std::move(refreshed);
      }
    }
  }

  if (!have_best) {
    fail("no channel/map pair meets the distortion budget " + std::to_string(budget));
  }
  return best;
}

double wyner_ziv_oracle(const JointPmf& p_xy, const DistortionSpec& distortion, int s_card,
                        int grid_steps) {
  const WzView v = make_view(p_xy, distortion, s_card);
  if (v.nx > 2 || s_card > 3) fail("wyner_ziv_oracle handles |X| <= 2 and |S| <= 3 only");
  if (grid_steps < 1) fail("grid_steps must be >= 1");
  const double budget = distortion.max_distortion;

  // All grid rows of the 1-row simplex over S.
  std::vector<std::vector<double>> rows;
  {
    std::vector<int> c(static_cast<std::size_t>(s_card), 0);
    const std::function<void(int, int)> gen = [&](int pos, int left) {
      if (pos == s_card - 1) {
        c[static_cast<std::size_t>(pos)] = left;
        std::vector<double> row(static_cast<std::size_t>(s_card));
        for (int s = 0; s < s_card; ++s) {
          row[static_cast<std::size_t>(s)] =
              static_cast<double>(c[static_cast<std::size_t>(s)]) /
              static_cast<double>(grid_steps);
        }
        rows.push_back(std::move(row));
        return;
      }
      for (int x = 0; x <= left; ++x) {
        c[static_cast<std::size_t>(pos)] = x;
        gen(pos + 1, left - x);
      }
    };
    gen(0, grid_steps);
  }

  std::vector<double> block_best(rows.size(), std::numeric_limits<double>::infinity());
  parallel_blocks(rows.size(), [&](std::uint64_t b) {
    std::vector<double> q(static_cast<std::size_t>(v.nx * v.ns));
    std::vector<double> s_given_y(static_cast<std::size_t>(v.ns * v.ny));
    double local = std::numeric_limits<double>::infinity();
    for (int s = 0; s < v.ns; ++s) q[static_cast<std::size_t>(s)] = rows[b][static_cast<std::size_t>(s)];
    const std::size_t second = v.nx > 1 ? rows.size() : 1;
    for (std::size_t j = 0; j < second; ++j) {
      if (v.nx > 1) {
        for (int s = 0; s < v.ns; ++s) {
          q[static_cast<std::size_t>(v.ns + s)] = rows[j][static_cast<std::size_t>(s)];
        }
      }
      // Cheapest achievable distortion for this channel.
      double ed = 0.0;
      for (int s = 0; s < v.ns; ++s) {
        for (int y = 0; y < v.ny; ++y) {
          double bestz = std::numeric_limits<double>::infinity();
          for (int z = 0; z < v.nz; ++z) {
            double cost = 0.0;
            for (int x = 0; x < v.nx; ++x) {
              cost += v.joint[static_cast<std::size_t>(x * v.ny + y)] *
                      q[static_cast<std::size_t>(x * v.ns + s)] * v.dist->at(x, z);
            }
            bestz = std::min(bestz, cost);
          }
          ed += bestz;
        }
      }
      if (ed > budget + kDistortionSlack) continue;
      posterior(v, q, s_given_y);
      local = std::min(local, conditional_mi_bits(v, q, s_given_y));
    }
    block_best[b] = local;
  });
  double best = std::numeric_limits<double>::infinity();
  for (double x : block_best) best = std::min(best, x);
  if (std::isinf(best)) fail("oracle found no feasible channel on the grid");
  return best;
}

double lossless_bound(const JointPmf& p_xy) {
  if (p_xy.rank() != 2) fail("lossless_bound expects a two-axis pmf over (X, Y)");
  const std::vector<int> target{0}, given{1};
  return conditional_entropy(p_xy, target, given);
}

}  // namespace khoplab
