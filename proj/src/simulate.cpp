#include "khoplab/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "khoplab/error.hpp"
#include "khoplab/rng.hpp"
#include "khoplab/scheme.hpp"
#include "khoplab/threading.hpp"

namespace khoplab {

namespace {

[[noreturn]] void fail(const std::string& message) { throw Error("simulator", message); }

struct Sampler {
  const HopNetworkSpec* spec;
  std::vector<double> joint_cumulative;
  std::vector<std::vector<double>> marginal_cumulative;  // per axis
  std::vector<std::vector<int>> components;              // per axis: joint cell -> symbol

  explicit Sampler(const HopNetworkSpec& s) : spec(&s) {
    joint_cumulative = cumulative_from(s.p_joint.mass());
    const int axes = s.hops + 1;
    components.resize(static_cast<std::size_t>(axes));
    marginal_cumulative.resize(static_cast<std::size_t>(axes));
    for (int a = 0; a < axes; ++a) {
      components[static_cast<std::size_t>(a)].resize(s.p_joint.size());
      for (std::size_t cell = 0; cell < s.p_joint.size(); ++cell) {
        components[static_cast<std::size_t>(a)][cell] = s.p_joint.unflatten(cell)[static_cast<std::size_t>(a)];
      }
      marginal_cumulative[static_cast<std::size_t>(a)] =
          cumulative_from(s.p_joint.marginal(std::vector<int>{a}).mass());
    }
  }

  void draw(Rng& rng, int hypothesis, int n, std::vector<std::vector<int>>& out) const {
    const int axes = spec->hops + 1;
    out.resize(static_cast<std::size_t>(axes));
    for (auto& seq : out) seq.assign(static_cast<std::size_t>(n), 0);
    if (hypothesis == 0) {
      for (int t = 0; t < n; ++t) {
        const int cell = rng.sample_cumulative(joint_cumulative);
        for (int a = 0; a < axes; ++a) {
          out[static_cast<std::size_t>(a)][static_cast<std::size_t>(t)] =
              components[static_cast<std::size_t>(a)][static_cast<std::size_t>(cell)];
        }
      }
    } else {
      for (int a = 0; a < axes; ++a) {
        for (int t = 0; t < n; ++t) {
          out[static_cast<std::size_t>(a)][static_cast<std::size_t>(t)] =
              rng.sample_cumulative(marginal_cumulative[static_cast<std::size_t>(a)]);
        }
      }
    }
  }
};

/// Error counts per center from `trials` pipeline runs. Deterministic: trial
/// r draws from the stream (seed, hypothesis, n, r) regardless of worker
/// scheduling; counts are summed per fixed chunk and merged in chunk order.
std::vector<long> count_errors(const SchemeContext& context, const Sampler& sampler,
                               int hypothesis, long trials, std::uint64_t seed) {
  const int centers = context.spec().hops;
  const long chunk = std::max<long>(256, trials / 256);
  const std::uint64_t chunks = static_cast<std::uint64_t>((trials + chunk - 1) / chunk);
  std::vector<std::vector<long>> partial(chunks, std::vector<long>(static_cast<std::size_t>(centers), 0));
  parallel_blocks(chunks, [&](std::uint64_t block) {
    const long begin = static_cast<long>(block) * chunk;
    const long end = std::min(trials, begin + chunk);
    std::vector<std::vector<int>> sequences;
    auto& counts = partial[block];
    for (long r = begin; r < end; ++r) {
      Rng rng(mix_seed(mix_seed(seed, static_cast<std::uint64_t>(hypothesis),
                                static_cast<std::uint64_t>(context.n())),
                       static_cast<std::uint64_t>(r)));
      sampler.draw(rng, hypothesis, context.n(), sequences);
      const SchemeContext::Outcome outcome = context.run(sequences);
      for (int k = 1; k <= centers; ++k) {
        const int guess = outcome.guesses[static_cast<std::size_t>(k - 1)];
        const bool error = hypothesis == 0 ? guess == 1 : guess == 0;
        if (error) ++counts[static_cast<std::size_t>(k - 1)];
      }
    }
  });
  std::vector<long> total(static_cast<std::size_t>(centers), 0);
  for (const auto& p : partial) {
    for (int k = 0; k < centers; ++k) total[static_cast<std::size_t>(k)] += p[static_cast<std::size_t>(k)];
  }
  return total;
}

ErrorEstimate make_estimate(int k, int n, int hypothesis, long trials, long errors) {
  ErrorEstimate e;
  e.k = k;
  e.n = n;
  e.hypothesis = hypothesis;
  e.trials = trials;
  e.errors = errors;
  e.rate = static_cast<double>(errors) / static_cast<double>(trials);
  const Interval ci = clopper_pearson(errors, trials);
  e.ci_lo = ci.lo;
  e.ci_hi = ci.hi;
  return e;
}

}  // namespace

void ExperimentSpec::validate() const {
  network.validate();
  if (static_cast<int>(channels.size()) != network.hops) fail("need one channel per hop");
  if (blocklengths.empty()) fail("need at least one blocklength");
  for (std::size_t i = 0; i + 1 < blocklengths.size(); ++i) {
    if (blocklengths[i] >= blocklengths[i + 1]) fail("blocklengths must be increasing");
  }
  if (blocklengths.front() < 1) fail("blocklengths must be positive");
  if (trials < 1) fail("trial budget must be >= 1");
  if (!(mu_factor > 0.0)) fail("mu factor must be positive");
}

std::vector<ErrorEstimate> run_trials(const ExperimentSpec& spec, int hypothesis) {
  spec.validate();
  if (hypothesis != 0 && hypothesis != 1) fail("hypothesis must be 0 or 1");
  const Sampler sampler(spec.network);
  std::vector<ErrorEstimate> estimates;
  for (int n : spec.blocklengths) {
    const SchemeContext context(spec.network, spec.channels, n, spec.seed, spec.mu_factor);
    const std::vector<long> errors = count_errors(context, sampler, hypothesis, spec.trials, spec.seed);
    for (int k = 1; k <= spec.network.hops; ++k) {
      estimates.push_back(make_estimate(k, n, hypothesis, spec.trials,
                                        errors[static_cast<std::size_t>(k - 1)]));
    }
  }
  return estimates;
}

ExponentFit fit_exponent(const std::vector<ErrorEstimate>& beta_estimates, int k,
                         const std::vector<int>& blocklengths, double ci_cap) {
  if (blocklengths.size() < 2) fail("exponent fit needs several blocklengths");
  ExponentFit fit;
  fit.k = k;
  std::vector<double> x, y, halfwidth;
  // The smallest configured n carries the O(1/n) burn-in terms; skip it.
  for (std::size_t i = 1; i < blocklengths.size(); ++i) {
    const int n = blocklengths[i];
    const ErrorEstimate* found = nullptr;
    for (const auto& e : beta_estimates) {
      if (e.k == k && e.n == n && e.hypothesis == 1) found = &e;
    }
    if (found == nullptr || found->errors == 0) continue;
    const double y_mid = -std::log2(found->rate);
    // Interval of -log2 beta from the exact binomial interval.
    const double y_lo = -std::log2(found->ci_hi);
    const double y_hi = found->ci_lo > 0.0 ? -std::log2(found->ci_lo) : y_mid + ci_cap + 1.0;
    const double width = y_hi - y_lo;
    if (width > 2.0 * ci_cap) continue;
    x.push_back(static_cast<double>(n));
    y.push_back(y_mid);
    halfwidth.push_back(width / 2.0);
  }
  if (x.size() < 3) {
    fail("exponent unresolvable at this trial budget: " + std::to_string(x.size()) +
         " usable blocklengths (zero error counts or intervals wider than the cap)");
  }
  const LineFit line = fit_line(x, y, halfwidth);
  for (std::size_t i = 0; i < x.size(); ++i) {
    fit.n_used.push_back(static_cast<int>(x[i]));
    fit.y_used.push_back(y[i]);
  }
  fit.slope = line.slope;
  fit.intercept = line.intercept;
  fit.slope_ci_lo = line.slope - line.slope_halfwidth;
  fit.slope_ci_hi = line.slope + line.slope_halfwidth;
  return fit;
}

SweepResult strong_converse_sweep(const ExperimentSpec& spec) {
  spec.validate();
  if (spec.epsilon_sweep.empty()) fail("epsilon sweep list must be nonempty");
  for (double e : spec.epsilon_sweep) {
    if (e <= 0.0 || e >= 1.0) fail("sweep targets must lie in (0, 1)");
  }
  const Sampler sampler(spec.network);
  const int centers = spec.network.hops;
  SweepResult result;

  for (double epsilon : spec.epsilon_sweep) {
    std::vector<std::vector<SweepRow>> rows_per_center(static_cast<std::size_t>(centers));
    for (int n : spec.blocklengths) {
      SchemeContext context(spec.network, spec.channels, n, spec.seed, spec.mu_factor);
      // Centers are tuned in order: upstream rejections are part of the
      // downstream type-I error, so center k is tuned with 1..k-1 already set.
      for (int k = 1; k <= centers; ++k) {
        const std::uint64_t tuning_seed =
            mix_seed(spec.seed, 0x7475ULL, mix_seed(static_cast<std::uint64_t>(n),
                                                    static_cast<std::uint64_t>(k),
                                                    static_cast<std::uint64_t>(epsilon * 1e6)));
        auto alpha_at = [&](double factor, long trials) {
          context.set_decision_slack_factor(k, factor);
          const std::vector<long> errors = count_errors(context, sampler, 0, trials, tuning_seed);
          return static_cast<double>(errors[static_cast<std::size_t>(k - 1)]) /
                 static_cast<double>(trials);
        };
        // Alpha decreases as the slack grows; bisect the factor.
        double lo = 1e-3, hi = 64.0;
        double factor = 1.0;
        for (int step = 0; step < 40; ++step) {
          factor = std::sqrt(lo * hi);  // geometric midpoint
          const double alpha = alpha_at(factor, spec.tuning_trials);
          if (std::abs(alpha - epsilon) <= 0.005) break;
          if (alpha > epsilon) {
            lo = factor;  // too strict, loosen
          } else {
            hi = factor;
          }
          if (hi / lo < 1.0 + 1e-9) break;
        }
        context.set_decision_slack_factor(k, factor);

        SweepRow row;
        row.k = k;
        row.epsilon = epsilon;
        row.n = n;
        row.slack_factor = factor;
        rows_per_center[static_cast<std::size_t>(k - 1)].push_back(row);
      }
      // Final measurement at full budget with every center tuned.
      const std::vector<long> alpha_errors = count_errors(context, sampler, 0, spec.trials, spec.seed);
      const std::vector<long> beta_errors = count_errors(context, sampler, 1, spec.trials, spec.seed);
      for (int k = 1; k <= centers; ++k) {
        SweepRow& row = rows_per_center[static_cast<std::size_t>(k - 1)].back();
        row.alpha = make_estimate(k, n, 0, spec.trials, alpha_errors[static_cast<std::size_t>(k - 1)]);
        row.beta = make_estimate(k, n, 1, spec.trials, beta_errors[static_cast<std::size_t>(k - 1)]);
      }
    }
    for (int k = 1; k <= centers; ++k) {
      auto& rows = rows_per_center[static_cast<std::size_t>(k - 1)];
      result.rows.insert(result.rows.end(), rows.begin(), rows.end());
      SweepFit fit;
      fit.k = k;
      fit.epsilon = epsilon;
      std::vector<ErrorEstimate> betas;
      for (const auto& row : rows) betas.push_back(row.beta);
      try {
        fit.fit = fit_exponent(betas, k, spec.blocklengths, spec.fit_ci_cap);
        fit.status = "ok";
      } catch (const Error& error) {
        fit.status = error.what();
      }
      result.fits.push_back(std::move(fit));
    }
  }
  return result;
}

}  // namespace khoplab
