#include "khoplab/diagnose.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>

#include "khoplab/error.hpp"
#include "khoplab/info.hpp"
#include "khoplab/threading.hpp"
#include "khoplab/typicality.hpp"

namespace khoplab {

namespace {

[[noreturn]] void fail(const std::string& message) { throw Error("diagnostics", message); }

double entropy_of_raw(const std::vector<double>& mass, double normalizer) {
  long double h = 0.0L;
  for (double x : mass) {
    if (x > 0.0) {
      const double p = x / normalizer;
      h -= static_cast<long double>(p) * std::log2(p);
    }
  }
  return static_cast<double>(h);
}

/// Joint sequence space over axes 0..k with the chain's null and
/// product-of-marginals laws per cell.
struct Space {
  int n = 0, k = 0, axes = 0, cells = 0;
  std::uint64_t size = 0;
  std::vector<int> axis_size;
  std::vector<std::vector<int>> comp;             // [axis][cell] -> symbol
  std::vector<std::uint64_t> axis_space;          // axis_size^n
  std::vector<std::vector<std::uint64_t>> place;  // [axis][t] = axis_size^(n-1-t)
  std::vector<double> cell_p, cell_q;
  JointPmf pk;  // marginal joint over axes 0..k

  Space(const SchemeContext& context, int k_arg, std::uint64_t cap) {
    const HopNetworkSpec& spec = context.spec();
    if (k_arg < 1 || k_arg > spec.hops) fail("decision center out of range");
    n = context.n();
    k = k_arg;
    axes = k + 1;
    std::vector<int> keep(static_cast<std::size_t>(axes));
    for (int a = 0; a < axes; ++a) keep[static_cast<std::size_t>(a)] = a;
    pk = spec.p_joint.marginal(keep);
    cells = static_cast<int>(pk.size());
    size = 1;
    for (int t = 0; t < n; ++t) {
      if (size > cap / static_cast<std::uint64_t>(cells) + 1) {
        fail("enumeration of " + std::to_string(static_cast<double>(std::pow(cells, n))) +
             " tuples exceeds the cap of " + std::to_string(cap));
      }
      size *= static_cast<std::uint64_t>(cells);
    }
    if (size > cap) {
      fail("enumeration of " + std::to_string(size) + " tuples exceeds the cap of " +
           std::to_string(cap));
    }
    axis_size.resize(static_cast<std::size_t>(axes));
    comp.assign(static_cast<std::size_t>(axes), std::vector<int>(static_cast<std::size_t>(cells)));
    for (int a = 0; a < axes; ++a) {
      axis_size[static_cast<std::size_t>(a)] = pk.axis(a).size();
    }
    for (int cell = 0; cell < cells; ++cell) {
      const std::vector<int> idx = pk.unflatten(static_cast<std::size_t>(cell));
      for (int a = 0; a < axes; ++a) comp[static_cast<std::size_t>(a)][static_cast<std::size_t>(cell)] = idx[static_cast<std::size_t>(a)];
    }
    axis_space.resize(static_cast<std::size_t>(axes));
    place.assign(static_cast<std::size_t>(axes), std::vector<std::uint64_t>(static_cast<std::size_t>(n)));
    for (int a = 0; a < axes; ++a) {
      std::uint64_t s = 1;
      for (int t = n - 1; t >= 0; --t) {
        place[static_cast<std::size_t>(a)][static_cast<std::size_t>(t)] = s;
        s *= static_cast<std::uint64_t>(axis_size[static_cast<std::size_t>(a)]);
      }
      axis_space[static_cast<std::size_t>(a)] = s;
    }
    cell_p = pk.mass();
    cell_q.assign(static_cast<std::size_t>(cells), 1.0);
    for (int a = 0; a < axes; ++a) {
      const JointPmf m = pk.marginal(std::vector<int>{a});
      for (int cell = 0; cell < cells; ++cell) {
        cell_q[static_cast<std::size_t>(cell)] *=
            m.at(static_cast<std::size_t>(comp[static_cast<std::size_t>(a)][static_cast<std::size_t>(cell)]));
      }
    }
  }
};

/// Odometer over the joint sequence space with incrementally maintained
/// per-axis flat indices, cell counts, and exact prefix probability products.
struct Odometer {
  const Space* s = nullptr;
  std::uint64_t index = 0;
  bool track_q = true;
  std::vector<int> digits;
  std::vector<std::uint64_t> flats;
  std::vector<long> counts;
  std::vector<double> prefix_p, prefix_q;

  void init(const Space& space, std::uint64_t start, bool with_q = true) {
    s = &space;
    index = start;
    track_q = with_q;
    digits.assign(static_cast<std::size_t>(s->n), 0);
    flats.assign(static_cast<std::size_t>(s->axes), 0);
    counts.assign(static_cast<std::size_t>(s->cells), 0);
    prefix_p.assign(static_cast<std::size_t>(s->n) + 1, 1.0);
    prefix_q.assign(static_cast<std::size_t>(s->n) + 1, 1.0);
    std::uint64_t rest = start;
    for (int t = s->n - 1; t >= 0; --t) {
      digits[static_cast<std::size_t>(t)] = static_cast<int>(rest % static_cast<std::uint64_t>(s->cells));
      rest /= static_cast<std::uint64_t>(s->cells);
    }
    for (int t = 0; t < s->n; ++t) {
      const int cell = digits[static_cast<std::size_t>(t)];
      ++counts[static_cast<std::size_t>(cell)];
      for (int a = 0; a < s->axes; ++a) {
        flats[static_cast<std::size_t>(a)] +=
            static_cast<std::uint64_t>(s->comp[static_cast<std::size_t>(a)][static_cast<std::size_t>(cell)]) *
            s->place[static_cast<std::size_t>(a)][static_cast<std::size_t>(t)];
      }
      prefix_p[static_cast<std::size_t>(t) + 1] =
          prefix_p[static_cast<std::size_t>(t)] * s->cell_p[static_cast<std::size_t>(cell)];
      prefix_q[static_cast<std::size_t>(t) + 1] =
          prefix_q[static_cast<std::size_t>(t)] * s->cell_q[static_cast<std::size_t>(cell)];
    }
  }

  /// Steps to the next tuple; returns the lowest digit position that
  /// changed (the carry depth).
  int advance() {
    ++index;
    int t = s->n - 1;
    while (true) {
      const int old_cell = digits[static_cast<std::size_t>(t)];
      const int new_cell = old_cell + 1 == s->cells ? 0 : old_cell + 1;
      digits[static_cast<std::size_t>(t)] = new_cell;
      --counts[static_cast<std::size_t>(old_cell)];
      ++counts[static_cast<std::size_t>(new_cell)];
      for (int a = 0; a < s->axes; ++a) {
        const long delta = s->comp[static_cast<std::size_t>(a)][static_cast<std::size_t>(new_cell)] -
                           s->comp[static_cast<std::size_t>(a)][static_cast<std::size_t>(old_cell)];
        flats[static_cast<std::size_t>(a)] = static_cast<std::uint64_t>(
            static_cast<long long>(flats[static_cast<std::size_t>(a)]) +
            delta * static_cast<long long>(
                        s->place[static_cast<std::size_t>(a)][static_cast<std::size_t>(t)]));
      }
      if (new_cell != 0) break;
      --t;
    }
    for (int u = t; u < s->n; ++u) {
      const int cell = digits[static_cast<std::size_t>(u)];
      prefix_p[static_cast<std::size_t>(u) + 1] =
          prefix_p[static_cast<std::size_t>(u)] * s->cell_p[static_cast<std::size_t>(cell)];
    }
    if (track_q) {
      for (int u = t; u < s->n; ++u) {
        const int cell = digits[static_cast<std::size_t>(u)];
        prefix_q[static_cast<std::size_t>(u) + 1] =
            prefix_q[static_cast<std::size_t>(u)] * s->cell_q[static_cast<std::size_t>(cell)];
      }
    }
    return t;
  }

  double p() const { return prefix_p[static_cast<std::size_t>(s->n)]; }
  double q() const { return prefix_q[static_cast<std::size_t>(s->n)]; }
};

/// Exact encoder/decision tables over per-axis flat sequence indices.
struct Tables {
  std::vector<int> m_count;    // per hop 1..k: message values incl. REJECT
  std::vector<int> reject_id;  // per hop, -1 when no reject value exists
  std::vector<int> m1;         // [y0 flat] -> id
  std::vector<std::vector<int>> next;          // hop l>=2: [(m at l-1) * y_{l-1}space + flat]
  std::vector<std::vector<std::uint8_t>> dec;  // center k': [m * y_k' space + flat]

  int chain(const std::vector<std::uint64_t>& flats, int k, int* ids) const {
    int m = m1[static_cast<std::size_t>(flats[0])];
    ids[0] = m;
    for (int l = 2; l <= k; ++l) {
      m = next[static_cast<std::size_t>(l - 2)]
              [static_cast<std::size_t>(m) * next_stride[static_cast<std::size_t>(l - 2)] +
               flats[static_cast<std::size_t>(l - 1)]];
      ids[l - 1] = m;
    }
    return m;
  }
  std::vector<std::size_t> next_stride;  // y_{l-1} space per hop l>=2
};

std::vector<int> flat_to_sequence(std::uint64_t flat, int axis_size, int n) {
  std::vector<int> seq(static_cast<std::size_t>(n));
  for (int t = n - 1; t >= 0; --t) {
    seq[static_cast<std::size_t>(t)] = static_cast<int>(flat % static_cast<std::uint64_t>(axis_size));
    flat /= static_cast<std::uint64_t>(axis_size);
  }
  return seq;
}

Tables build_tables(const SchemeContext& context, const Space& space) {
  Tables tb;
  const int k = space.k;
  tb.m_count.resize(static_cast<std::size_t>(k));
  tb.reject_id.resize(static_cast<std::size_t>(k));
  for (int hop = 1; hop <= k; ++hop) {
    const Codebook& book = context.codebook(hop);
    if (book.log2_entries() >= 62) fail("codebook too large for exact tables");
    const int entries = 1 << book.log2_entries();
    tb.m_count[static_cast<std::size_t>(hop - 1)] = entries + (book.has_reject() ? 1 : 0);
    tb.reject_id[static_cast<std::size_t>(hop - 1)] = book.has_reject() ? entries : -1;
  }

  // Hop-1 encoding per Y_0 sequence.
  {
    const Codebook& book = context.codebook(1);
    const std::uint64_t y_space = space.axis_space[0];
    tb.m1.resize(y_space);
    for (std::uint64_t f = 0; f < y_space; ++f) {
      const std::vector<int> seq = flat_to_sequence(f, space.axis_size[0], space.n);
      const HopMessage m = encode_hop(seq, nullptr, book, context.encode_bounds(1));
      tb.m1[f] = m.reject ? tb.reject_id[0] : static_cast<int>(m.index);
    }
  }

  // Decision tables per center.
  tb.dec.resize(static_cast<std::size_t>(k));
  for (int center = 1; center <= k; ++center) {
    const Codebook& book = context.codebook(center);
    const DecisionRule& rule = context.decision_rule(center);
    const std::uint64_t y_space = space.axis_space[static_cast<std::size_t>(center)];
    const int values = tb.m_count[static_cast<std::size_t>(center - 1)];
    auto& table = tb.dec[static_cast<std::size_t>(center - 1)];
    table.resize(static_cast<std::size_t>(values) * y_space);
    for (std::uint64_t f = 0; f < y_space; ++f) {
      const std::vector<int> seq =
          flat_to_sequence(f, space.axis_size[static_cast<std::size_t>(center)], space.n);
      for (int m = 0; m < values; ++m) {
        std::uint8_t guess;
        if (m == tb.reject_id[static_cast<std::size_t>(center - 1)]) {
          guess = 1;
        } else {
          guess = static_cast<std::uint8_t>(
              decide_hop(seq, book.index_message(static_cast<std::uint64_t>(m)), book, rule));
        }
        table[static_cast<std::size_t>(m) * y_space + f] = guess;
      }
    }
  }

  // Gated forwarding for hops 2..k.
  tb.next.resize(static_cast<std::size_t>(k >= 2 ? k - 1 : 0));
  tb.next_stride.resize(tb.next.size());
  for (int hop = 2; hop <= k; ++hop) {
    const Codebook& book = context.codebook(hop);
    const std::uint64_t y_space = space.axis_space[static_cast<std::size_t>(hop - 1)];
    std::vector<int> encoded(y_space);
    for (std::uint64_t f = 0; f < y_space; ++f) {
      const std::vector<int> seq =
          flat_to_sequence(f, space.axis_size[static_cast<std::size_t>(hop - 1)], space.n);
      const HopMessage m = encode_hop(seq, nullptr, book, context.encode_bounds(hop));
      encoded[f] = m.reject ? tb.reject_id[static_cast<std::size_t>(hop - 1)]
                            : static_cast<int>(m.index);
    }
    const int prev_values = tb.m_count[static_cast<std::size_t>(hop - 2)];
    const int prev_reject = tb.reject_id[static_cast<std::size_t>(hop - 2)];
    const int this_reject = tb.reject_id[static_cast<std::size_t>(hop - 1)];
    auto& table = tb.next[static_cast<std::size_t>(hop - 2)];
    tb.next_stride[static_cast<std::size_t>(hop - 2)] = y_space;
    table.resize(static_cast<std::size_t>(prev_values) * y_space);
    const auto& gate = tb.dec[static_cast<std::size_t>(hop - 2)];
    for (int m = 0; m < prev_values; ++m) {
      for (std::uint64_t f = 0; f < y_space; ++f) {
        int out;
        if (m == prev_reject || gate[static_cast<std::size_t>(m) * y_space + f] == 1) {
          // A rejecting center forwards REJECT when the hop can carry one.
          out = this_reject >= 0 ? this_reject : encoded[f];
          if (m == prev_reject && this_reject < 0) out = encoded[f];
        } else {
          out = encoded[f];
        }
        table[static_cast<std::size_t>(m) * y_space + f] = out;
      }
    }
  }
  return tb;
}

struct Pass1Result {
  double alpha = 0.0, beta = 0.0, delta = 0.0, typical = 0.0;
  std::uint64_t acceptance_cardinality = 0, dk_cardinality = 0;
  std::vector<std::uint64_t> dk_bits;
  std::vector<double> single_letter_raw;            // per cell: sum p * count(cell)
  std::vector<std::vector<double>> seq_marginal;    // per axis: restricted, unnormalized
  std::vector<std::vector<double>> msg_mass;        // per hop
  std::vector<std::vector<double>> msg_seq_joint;   // per hop: [m][y_l flat]
};

Pass1Result pass1(const Space& space, const Tables& tb, const TypicalityBounds& bounds) {
  const int k = space.k;
  const std::uint64_t words = (space.size + 63) / 64;
  Pass1Result total;
  total.dk_bits.assign(words, 0);

  const std::uint64_t blocks = std::min<std::uint64_t>(64, (space.size + 63) / 64);
  std::vector<std::uint64_t> starts(blocks + 1);
  for (std::uint64_t b = 0; b <= blocks; ++b) {
    starts[b] = std::min(space.size, ((space.size * b / blocks) + 63) & ~std::uint64_t{63});
  }
  starts[blocks] = space.size;

  std::vector<Pass1Result> partial(blocks);
  parallel_blocks(blocks, [&](std::uint64_t block) {
    Pass1Result acc;
    acc.single_letter_raw.assign(static_cast<std::size_t>(space.cells), 0.0);
    acc.seq_marginal.resize(static_cast<std::size_t>(space.axes));
    for (int a = 0; a < space.axes; ++a) {
      acc.seq_marginal[static_cast<std::size_t>(a)].assign(space.axis_space[static_cast<std::size_t>(a)], 0.0);
    }
    acc.msg_mass.resize(static_cast<std::size_t>(k));
    acc.msg_seq_joint.resize(static_cast<std::size_t>(k));
    for (int l = 1; l <= k; ++l) {
      acc.msg_mass[static_cast<std::size_t>(l - 1)].assign(
          static_cast<std::size_t>(tb.m_count[static_cast<std::size_t>(l - 1)]), 0.0);
      acc.msg_seq_joint[static_cast<std::size_t>(l - 1)].assign(
          static_cast<std::size_t>(tb.m_count[static_cast<std::size_t>(l - 1)]) *
              space.axis_space[static_cast<std::size_t>(l)],
          0.0);
    }

    const std::uint64_t begin = starts[block], end = starts[block + 1];
    if (begin >= end) {
      partial[block] = std::move(acc);
      return;
    }
    Odometer od;
    od.init(space, begin);
    std::vector<int> ids(static_cast<std::size_t>(k));
    const std::uint64_t y_space_k = space.axis_space[static_cast<std::size_t>(k)];
    for (std::uint64_t idx = begin; idx < end; ++idx, idx < end ? (void)od.advance() : void()) {
      const int m = tb.chain(od.flats, k, ids.data());
      int guess;
      if (m == tb.reject_id[static_cast<std::size_t>(k - 1)]) {
        guess = 1;
      } else {
        guess = tb.dec[static_cast<std::size_t>(k - 1)]
                      [static_cast<std::size_t>(m) * y_space_k +
                       od.flats[static_cast<std::size_t>(k)]];
      }
      const double p = od.p();
      if (guess == 1) {
        acc.alpha += p;
      } else {
        acc.beta += od.q();
        ++acc.acceptance_cardinality;
      }
      const bool typical = bounds.admits(od.counts);
      if (typical) acc.typical += p;
      if (guess == 0 && typical) {
        total.dk_bits[idx >> 6] |= std::uint64_t{1} << (idx & 63);  // block-owned range
        ++acc.dk_cardinality;
        acc.delta += p;
        for (int cell = 0; cell < space.cells; ++cell) {
          const long c = od.counts[static_cast<std::size_t>(cell)];
          if (c != 0) acc.single_letter_raw[static_cast<std::size_t>(cell)] += p * static_cast<double>(c);
        }
        for (int a = 0; a < space.axes; ++a) {
          acc.seq_marginal[static_cast<std::size_t>(a)][od.flats[static_cast<std::size_t>(a)]] += p;
        }
        for (int l = 1; l <= k; ++l) {
          const int id = ids[static_cast<std::size_t>(l - 1)];
          acc.msg_mass[static_cast<std::size_t>(l - 1)][static_cast<std::size_t>(id)] += p;
          acc.msg_seq_joint[static_cast<std::size_t>(l - 1)]
              [static_cast<std::size_t>(id) * space.axis_space[static_cast<std::size_t>(l)] +
               od.flats[static_cast<std::size_t>(l)]] += p;
        }
      }
    }
    partial[block] = std::move(acc);
  });

  total.single_letter_raw.assign(static_cast<std::size_t>(space.cells), 0.0);
  total.seq_marginal.resize(static_cast<std::size_t>(space.axes));
  for (int a = 0; a < space.axes; ++a) {
    total.seq_marginal[static_cast<std::size_t>(a)].assign(space.axis_space[static_cast<std::size_t>(a)], 0.0);
  }
  total.msg_mass.resize(static_cast<std::size_t>(k));
  total.msg_seq_joint.resize(static_cast<std::size_t>(k));
  for (int l = 1; l <= k; ++l) {
    total.msg_mass[static_cast<std::size_t>(l - 1)].assign(
        static_cast<std::size_t>(tb.m_count[static_cast<std::size_t>(l - 1)]), 0.0);
    total.msg_seq_joint[static_cast<std::size_t>(l - 1)].assign(
        static_cast<std::size_t>(tb.m_count[static_cast<std::size_t>(l - 1)]) *
            space.axis_space[static_cast<std::size_t>(l)],
        0.0);
  }
  for (const Pass1Result& acc : partial) {
    if (acc.single_letter_raw.empty()) continue;
    total.alpha += acc.alpha;
    total.beta += acc.beta;
    total.delta += acc.delta;
    total.typical += acc.typical;
    total.acceptance_cardinality += acc.acceptance_cardinality;
    total.dk_cardinality += acc.dk_cardinality;
    for (int cell = 0; cell < space.cells; ++cell) {
      total.single_letter_raw[static_cast<std::size_t>(cell)] +=
          acc.single_letter_raw[static_cast<std::size_t>(cell)];
    }
    for (int a = 0; a < space.axes; ++a) {
      for (std::size_t f = 0; f < total.seq_marginal[static_cast<std::size_t>(a)].size(); ++f) {
        total.seq_marginal[static_cast<std::size_t>(a)][f] += acc.seq_marginal[static_cast<std::size_t>(a)][f];
      }
    }
    for (int l = 1; l <= k; ++l) {
      for (std::size_t i = 0; i < total.msg_mass[static_cast<std::size_t>(l - 1)].size(); ++i) {
        total.msg_mass[static_cast<std::size_t>(l - 1)][i] += acc.msg_mass[static_cast<std::size_t>(l - 1)][i];
      }
      for (std::size_t i = 0; i < total.msg_seq_joint[static_cast<std::size_t>(l - 1)].size(); ++i) {
        total.msg_seq_joint[static_cast<std::size_t>(l - 1)][i] +=
            acc.msg_seq_joint[static_cast<std::size_t>(l - 1)][i];
      }
    }
  }
  return total;
}

/// Streamed single-letter statistics for U_l = (M_l, joint prefix, T) under
/// the restricted measure, plus the numerically evaluated restriction
/// identities. One scan: the group of letter t is the joint prefix
/// digits[0..t-1], so a carry at depth c closes every group with t > c.
/// Blocks fix the first `split` digits; letters below the split accumulate
/// mergeable per-(group, message) tables instead of flushing.
struct LetterAccumulator {
  double h_prev_given_u = 0.0;  // sum_t of Delta * n-normalized entropy terms, raw masses
  double h_next_given_u = 0.0;
  double h_next_given_prev_u = 0.0;
};

struct Pass2Result {
  std::vector<LetterAccumulator> letters;
  double restriction_kl = 0.0;
  double block_entropy = 0.0;
};

Pass2Result pass2(const Space& space, const Tables& tb,
                  const std::vector<std::uint64_t>& dk_bits, double delta) {
  const int k = space.k;
  const int n = space.n;
  int split = 0;
  if (n >= 3) {
    split = 2;
  } else if (n == 2) {
    split = 1;
  }
  std::uint64_t block_count = 1;
  for (int i = 0; i < split; ++i) block_count *= static_cast<std::uint64_t>(space.cells);
  const std::uint64_t block_span = space.size / block_count;

  struct HopGeometry {
    int prev_size = 0, width = 0, cells_per_id = 0, ids = 0;
    std::vector<int> pair_offset;  // joint cell -> prev * width + next
  };
  std::vector<HopGeometry> geometry(static_cast<std::size_t>(k));
  for (int l = 1; l <= k; ++l) {
    HopGeometry& g = geometry[static_cast<std::size_t>(l - 1)];
    g.prev_size = space.axis_size[static_cast<std::size_t>(l - 1)];
    g.width = space.axis_size[static_cast<std::size_t>(l)];
    g.cells_per_id = g.prev_size * g.width;
    g.ids = tb.m_count[static_cast<std::size_t>(l - 1)];
    g.pair_offset.resize(static_cast<std::size_t>(space.cells));
    for (int cell = 0; cell < space.cells; ++cell) {
      g.pair_offset[static_cast<std::size_t>(cell)] =
          space.comp[static_cast<std::size_t>(l - 1)][static_cast<std::size_t>(cell)] * g.width +
          space.comp[static_cast<std::size_t>(l)][static_cast<std::size_t>(cell)];
    }
  }

  struct BlockOut {
    std::vector<LetterAccumulator> letters;       // per hop, flushed letters only
    std::vector<std::vector<double>> low_tables;  // [hop][t * ids * cells + ...], t < split
    double kl = 0.0;
    double block_h = 0.0;
  };
  std::vector<BlockOut> outs(block_count);

  parallel_blocks(block_count, [&](std::uint64_t block) {
    BlockOut out;
    out.letters.assign(static_cast<std::size_t>(k), LetterAccumulator{});
    out.low_tables.resize(static_cast<std::size_t>(k));
    for (int l = 0; l < k; ++l) {
      const HopGeometry& g = geometry[static_cast<std::size_t>(l)];
      out.low_tables[static_cast<std::size_t>(l)].assign(
          static_cast<std::size_t>(split) * static_cast<std::size_t>(g.ids) *
              static_cast<std::size_t>(g.cells_per_id),
          0.0);
    }

    // Open-group state for letters t >= split: mass tables plus an epoch
    // stamp per (hop, t, id) so stale tables are cleared lazily.
    struct HopState {
      std::vector<double> mass;    // [t][id][cell]
      std::vector<long> stamp;     // [t][id]
      std::vector<std::vector<int>> touched;  // per t
    };
    std::vector<HopState> state(static_cast<std::size_t>(k));
    std::vector<long> epoch(static_cast<std::size_t>(n), 0);
    for (int l = 0; l < k; ++l) {
      const HopGeometry& g = geometry[static_cast<std::size_t>(l)];
      state[static_cast<std::size_t>(l)].mass.assign(
          static_cast<std::size_t>(n) * static_cast<std::size_t>(g.ids) *
              static_cast<std::size_t>(g.cells_per_id),
          0.0);
      state[static_cast<std::size_t>(l)].stamp.assign(
          static_cast<std::size_t>(n) * static_cast<std::size_t>(g.ids), -1);
      state[static_cast<std::size_t>(l)].touched.assign(static_cast<std::size_t>(n), {});
    }

    auto flush_letter = [&](int t) {
      for (int l = 0; l < k; ++l) {
        const HopGeometry& g = geometry[static_cast<std::size_t>(l)];
        HopState& hs = state[static_cast<std::size_t>(l)];
        LetterAccumulator& acc = out.letters[static_cast<std::size_t>(l)];
        for (int id : hs.touched[static_cast<std::size_t>(t)]) {
          double* w = hs.mass.data() +
                      (static_cast<std::size_t>(t) * static_cast<std::size_t>(g.ids) +
                       static_cast<std::size_t>(id)) *
                          static_cast<std::size_t>(g.cells_per_id);
          double group_mass = 0.0;
          for (int c = 0; c < g.cells_per_id; ++c) group_mass += w[c];
          if (group_mass > 0.0) {
            const double log_group = std::log2(group_mass);
            for (int prev = 0; prev < g.prev_size; ++prev) {
              double row = 0.0;
              for (int nxt = 0; nxt < g.width; ++nxt) row += w[prev * g.width + nxt];
              if (row > 0.0) {
                const double log_row = std::log2(row);
                acc.h_prev_given_u -= row * (log_row - log_group);
                for (int nxt = 0; nxt < g.width; ++nxt) {
                  const double x = w[prev * g.width + nxt];
                  if (x > 0.0) acc.h_next_given_prev_u -= x * (std::log2(x) - log_row);
                }
              }
            }
            for (int nxt = 0; nxt < g.width; ++nxt) {
              double col = 0.0;
              for (int prev = 0; prev < g.prev_size; ++prev) col += w[prev * g.width + nxt];
              if (col > 0.0) acc.h_next_given_u -= col * (std::log2(col) - log_group);
            }
          }
          std::fill(w, w + g.cells_per_id, 0.0);
        }
        hs.touched[static_cast<std::size_t>(t)].clear();
      }
      ++epoch[static_cast<std::size_t>(t)];
    };

    const std::uint64_t begin = block * block_span;
    const std::uint64_t end = begin + block_span;
    Odometer od;
    od.init(space, begin, /*with_q=*/false);
    std::vector<int> ids(static_cast<std::size_t>(k));
    const double log2_delta = std::log2(delta);
    for (std::uint64_t idx = begin; idx < end; ++idx) {
      if ((dk_bits[idx >> 6] >> (idx & 63)) & 1) {
        tb.chain(od.flats, k, ids.data());
        const double p = od.p();
        const double restricted = p / delta;
        out.kl += restricted * (std::log2(restricted) - std::log2(p));
        out.block_h -= restricted * (std::log2(p) - log2_delta);
        for (int t = 0; t < n; ++t) {
          const int cell = od.digits[static_cast<std::size_t>(t)];
          for (int l = 0; l < k; ++l) {
            const HopGeometry& g = geometry[static_cast<std::size_t>(l)];
            const int id = ids[static_cast<std::size_t>(l)];
            const int offset = g.pair_offset[static_cast<std::size_t>(cell)];
            if (t < split) {
              out.low_tables[static_cast<std::size_t>(l)]
                  [(static_cast<std::size_t>(t) * static_cast<std::size_t>(g.ids) +
                    static_cast<std::size_t>(id)) *
                       static_cast<std::size_t>(g.cells_per_id) +
                   static_cast<std::size_t>(offset)] += p;
            } else {
              HopState& hs = state[static_cast<std::size_t>(l)];
              const std::size_t slot = static_cast<std::size_t>(t) * static_cast<std::size_t>(g.ids) +
                                       static_cast<std::size_t>(id);
              if (hs.stamp[slot] != epoch[static_cast<std::size_t>(t)]) {
                hs.stamp[slot] = epoch[static_cast<std::size_t>(t)];
                hs.touched[static_cast<std::size_t>(t)].push_back(id);
              }
              hs.mass[slot * static_cast<std::size_t>(g.cells_per_id) +
                      static_cast<std::size_t>(offset)] += p;
            }
          }
        }
      }
      if (idx + 1 < end) {
        const int carry = od.advance();
        // Groups whose prefix includes a changed digit are complete.
        for (int t = n - 1; t >= std::max(split, carry + 1); --t) flush_letter(t);
      }
    }
    for (int t = n - 1; t >= split; --t) flush_letter(t);
    outs[block] = std::move(out);
  });

  Pass2Result result;
  result.letters.assign(static_cast<std::size_t>(k), LetterAccumulator{});
  for (const BlockOut& out : outs) {
    result.restriction_kl += out.kl;
    result.block_entropy += out.block_h;
    for (int l = 0; l < k; ++l) {
      result.letters[static_cast<std::size_t>(l)].h_prev_given_u +=
          out.letters[static_cast<std::size_t>(l)].h_prev_given_u;
      result.letters[static_cast<std::size_t>(l)].h_next_given_u +=
          out.letters[static_cast<std::size_t>(l)].h_next_given_u;
      result.letters[static_cast<std::size_t>(l)].h_next_given_prev_u +=
          out.letters[static_cast<std::size_t>(l)].h_next_given_prev_u;
    }
  }

  // Letters below the split: merge the per-block tables over the blocks that
  // share each group prefix, then fold the entropy terms once per group.
  for (int t = 0; t < split; ++t) {
    std::uint64_t groups = 1;
    for (int i = 0; i < t; ++i) groups *= static_cast<std::uint64_t>(space.cells);
    const std::uint64_t blocks_per_group = block_count / groups;
    for (int l = 0; l < k; ++l) {
      const HopGeometry& g = geometry[static_cast<std::size_t>(l)];
      std::vector<double> merged(static_cast<std::size_t>(g.ids) *
                                 static_cast<std::size_t>(g.cells_per_id));
      for (std::uint64_t group = 0; group < groups; ++group) {
        std::fill(merged.begin(), merged.end(), 0.0);
        for (std::uint64_t b = group * blocks_per_group; b < (group + 1) * blocks_per_group; ++b) {
          const auto& table = outs[b].low_tables[static_cast<std::size_t>(l)];
          const std::size_t base = static_cast<std::size_t>(t) * static_cast<std::size_t>(g.ids) *
                                   static_cast<std::size_t>(g.cells_per_id);
          for (std::size_t i = 0; i < merged.size(); ++i) merged[i] += table[base + i];
        }
        LetterAccumulator& acc = result.letters[static_cast<std::size_t>(l)];
        for (int id = 0; id < g.ids; ++id) {
          const double* w = merged.data() + static_cast<std::size_t>(id) *
                                                static_cast<std::size_t>(g.cells_per_id);
          double group_mass = 0.0;
          for (int c = 0; c < g.cells_per_id; ++c) group_mass += w[c];
          if (group_mass <= 0.0) continue;
          const double log_group = std::log2(group_mass);
          for (int prev = 0; prev < g.prev_size; ++prev) {
            double row = 0.0;
            for (int nxt = 0; nxt < g.width; ++nxt) row += w[prev * g.width + nxt];
            if (row > 0.0) {
              const double log_row = std::log2(row);
              acc.h_prev_given_u -= row * (log_row - log_group);
              for (int nxt = 0; nxt < g.width; ++nxt) {
                const double x = w[prev * g.width + nxt];
                if (x > 0.0) acc.h_next_given_prev_u -= x * (std::log2(x) - log_row);
              }
            }
          }
          for (int nxt = 0; nxt < g.width; ++nxt) {
            double col = 0.0;
            for (int prev = 0; prev < g.prev_size; ++prev) col += w[prev * g.width + nxt];
            if (col > 0.0) acc.h_next_given_u -= col * (std::log2(col) - log_group);
          }
        }
      }
    }
  }
  return result;
}

}  // namespace

AcceptanceRegion enumerate_region(const SchemeContext& context, int k, std::uint64_t cap) {
  const Space space(context, k, cap);
  const Tables tb = build_tables(context, space);
  AcceptanceRegion region;
  region.k = k;
  region.n = context.n();
  region.space = space.size;
  region.bits.assign((space.size + 63) / 64, 0);

  Odometer od;
  od.init(space, 0);
  std::vector<int> ids(static_cast<std::size_t>(k));
  const std::uint64_t y_space_k = space.axis_space[static_cast<std::size_t>(k)];
  for (std::uint64_t idx = 0; idx < space.size; ++idx, idx < space.size ? (void)od.advance() : void()) {
    const int m = tb.chain(od.flats, k, ids.data());
    const bool accept = m != tb.reject_id[static_cast<std::size_t>(k - 1)] &&
                        tb.dec[static_cast<std::size_t>(k - 1)]
                              [static_cast<std::size_t>(m) * y_space_k +
                               od.flats[static_cast<std::size_t>(k)]] == 0;
    if (accept) {
      region.bits[idx >> 6] |= std::uint64_t{1} << (idx & 63);
      ++region.cardinality;
    }
  }
  return region;
}

CenterDiagnostics analyze_center(const SchemeContext& context, int k, std::optional<double> mu_opt,
                                 std::uint64_t cap) {
  const Space space(context, k, cap);
  const Tables tb = build_tables(context, space);
  const double mu = mu_opt.value_or(default_mu(context.n()));
  const TypicalityBounds bounds = make_typicality_bounds(space.pk, space.n, mu);

  Pass1Result p1 = pass1(space, tb, bounds);
  const int n = space.n;

  CenterDiagnostics out;
  out.k = k;
  out.n = n;
  out.mu = mu;
  out.alpha_exact = p1.alpha;
  out.beta_exact = p1.beta;
  out.acceptance_cardinality = p1.acceptance_cardinality;
  out.dk_cardinality = p1.dk_cardinality;
  out.delta = p1.delta;
  out.typical_mass = p1.typical;
  out.typicality_defect_bound =
      static_cast<double>(space.cells) / (4.0 * mu * mu * static_cast<double>(n));
  out.delta_bound_holds =
      p1.delta >= 1.0 - p1.alpha - out.typicality_defect_bound - 1e-12;
  if (!(p1.delta > 0.0)) {
    fail("Delta is zero: the scheme rejects every typical tuple; restriction undefined");
  }
  out.dk_bits = p1.dk_bits;

  // Streamed single-letter statistics per hop plus the numerically evaluated
  // restriction identities.
  const Pass2Result p2 = pass2(space, tb, p1.dk_bits, p1.delta);
  out.restriction_kl = p2.restriction_kl;
  out.block_entropy = p2.block_entropy;

  const double h_source = entropy(space.pk);
  out.entropy_gap = std::abs(out.block_entropy / static_cast<double>(n) - h_source);
  out.log_delta_term = -std::log2(p1.delta) / static_cast<double>(n);

  std::vector<double> single(static_cast<std::size_t>(space.cells));
  double max_dev = 0.0;
  for (int cell = 0; cell < space.cells; ++cell) {
    single[static_cast<std::size_t>(cell)] =
        p1.single_letter_raw[static_cast<std::size_t>(cell)] / (p1.delta * static_cast<double>(n));
    max_dev = std::max(max_dev, std::abs(single[static_cast<std::size_t>(cell)] -
                                         space.pk.at(static_cast<std::size_t>(cell))));
  }
  out.max_single_letter_deviation = max_dev;
  out.single_letter = JointPmf::unchecked(space.pk.axes(), single);
  out.single_letter_kl = kl_divergence(out.single_letter, space.pk);
  if (k >= 2) {
    std::vector<int> front;
    for (int a = 0; a <= k - 2; ++a) front.push_back(a);
    const std::vector<int> last{k}, mid{k - 1};
    out.chain_cmi = conditional_mutual_information(out.single_letter, front, last, mid);
  }

  const std::vector<LetterAccumulator>& letters = p2.letters;
  const double nd = static_cast<double>(n);
  out.hops.resize(static_cast<std::size_t>(k));
  for (int l = 1; l <= k; ++l) {
    HopLetterStats& hs = out.hops[static_cast<std::size_t>(l - 1)];
    hs.hop = l;
    hs.h_message = entropy_of_raw(p1.msg_mass[static_cast<std::size_t>(l - 1)], p1.delta);
    const double h_seq = entropy_of_raw(p1.seq_marginal[static_cast<std::size_t>(l)], p1.delta);
    const double h_msg_seq = entropy_of_raw(p1.msg_seq_joint[static_cast<std::size_t>(l - 1)], p1.delta);
    hs.mi_message_block = std::max(0.0, hs.h_message + h_seq - h_msg_seq);

    const std::vector<int> prev_axis{l - 1}, next_axis{l};
    const double h_prev = entropy(out.single_letter.marginal(prev_axis));
    const double h_next = entropy(out.single_letter.marginal(next_axis));
    const std::vector<int> pair_axes{l - 1, l};
    const double h_pair = entropy(out.single_letter.marginal(pair_axes));
    const LetterAccumulator& a = letters[static_cast<std::size_t>(l - 1)];
    const double h_prev_u = a.h_prev_given_u / (p1.delta * nd);
    const double h_next_u = a.h_next_given_u / (p1.delta * nd);
    const double h_next_prev_u = a.h_next_given_prev_u / (p1.delta * nd);
    hs.mi_u_prev = std::max(0.0, h_prev - h_prev_u);
    hs.mi_u_next = std::max(0.0, h_next - h_next_u);
    hs.markov_gap = std::max(0.0, (h_pair - h_prev) - h_next_prev_u);
  }

  // Q_M: the restricted per-terminal marginals pushed through the encoder
  // chain, i.e. the change-of-measure surrogate for the independence law.
  {
    const int mk_values = tb.m_count[static_cast<std::size_t>(k - 1)];
    std::vector<double> q_m(static_cast<std::size_t>(mk_values), 0.0);
    std::vector<std::uint64_t> cursor(static_cast<std::size_t>(k), 0);
    bool done = false;
    while (!done) {
      double weight = 1.0;
      for (int l = 0; l < k; ++l) {
        weight *= p1.seq_marginal[static_cast<std::size_t>(l)][cursor[static_cast<std::size_t>(l)]] / p1.delta;
      }
      if (weight > 0.0) {
        int m = tb.m1[static_cast<std::size_t>(cursor[0])];
        for (int l = 2; l <= k; ++l) {
          m = tb.next[static_cast<std::size_t>(l - 2)]
                  [static_cast<std::size_t>(m) * tb.next_stride[static_cast<std::size_t>(l - 2)] +
                   cursor[static_cast<std::size_t>(l - 1)]];
        }
        q_m[static_cast<std::size_t>(m)] += weight;
      }
      int dim = k - 1;
      while (dim >= 0) {
        if (++cursor[static_cast<std::size_t>(dim)] < space.axis_space[static_cast<std::size_t>(dim)]) break;
        cursor[static_cast<std::size_t>(dim)] = 0;
        --dim;
      }
      done = dim < 0;
    }

    const std::uint64_t yk_space = space.axis_space[static_cast<std::size_t>(k)];
    double q_acc = 0.0;
    for (int m = 0; m < mk_values; ++m) {
      if (q_m[static_cast<std::size_t>(m)] <= 0.0) continue;
      if (m == tb.reject_id[static_cast<std::size_t>(k - 1)]) continue;  // decision is 1
      for (std::uint64_t f = 0; f < yk_space; ++f) {
        if (tb.dec[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(m) * yk_space + f] == 0) {
          q_acc += q_m[static_cast<std::size_t>(m)] *
                   (p1.seq_marginal[static_cast<std::size_t>(k)][f] / p1.delta);
        }
      }
    }
    out.q_acceptance = q_acc;

    // Divergence through the generic pmf operations, as a separate route.
    const Alphabet msg_alphabet = Alphabet::indexed(mk_values, "m");
    const Alphabet seq_alphabet = Alphabet::indexed(static_cast<int>(yk_space), "y");
    std::vector<double> joint_mass(p1.msg_seq_joint[static_cast<std::size_t>(k - 1)].size());
    for (std::size_t i = 0; i < joint_mass.size(); ++i) {
      joint_mass[i] = p1.msg_seq_joint[static_cast<std::size_t>(k - 1)][i] / p1.delta;
    }
    std::vector<double> prod_mass(joint_mass.size(), 0.0);
    for (int m = 0; m < mk_values; ++m) {
      for (std::uint64_t f = 0; f < yk_space; ++f) {
        prod_mass[static_cast<std::size_t>(m) * yk_space + f] =
            q_m[static_cast<std::size_t>(m)] *
            (p1.seq_marginal[static_cast<std::size_t>(k)][f] / p1.delta);
      }
    }
    const JointPmf joint = JointPmf::unchecked({msg_alphabet, seq_alphabet}, std::move(joint_mass));
    const JointPmf prod = JointPmf::unchecked({msg_alphabet, seq_alphabet}, std::move(prod_mass));
    out.msg_divergence = kl_divergence(joint, prod);
  }

  out.delta_prime = -static_cast<double>(k + 1) / nd * std::log2(p1.delta) + 1.0 / nd;
  out.beta_exponent = -std::log2(p1.beta) / nd;
  out.sum_mi_u_next = 0.0;
  out.sum_mi_message_block = 0.0;
  for (const HopLetterStats& hs : out.hops) {
    out.sum_mi_u_next += hs.mi_u_next;
    out.sum_mi_message_block += hs.mi_message_block;
  }
  out.lemma1_iii_slack = out.sum_mi_u_next + out.delta_prime - out.beta_exponent;

  out.lemma1.resize(static_cast<std::size_t>(k));
  for (int l = 1; l <= k; ++l) {
    Lemma1Check& c = out.lemma1[static_cast<std::size_t>(l - 1)];
    const HopLetterStats& hs = out.hops[static_cast<std::size_t>(l - 1)];
    c.hop = l;
    c.rate_budget = nd * context.spec().rates[static_cast<std::size_t>(l - 1)];
    c.h_message = hs.h_message;
    c.rate_slack = c.rate_budget - hs.h_message;
    c.information_floor = nd * hs.mi_u_prev + std::log2(p1.delta);
    c.floor_slack = hs.h_message - c.information_floor;
  }
  return out;
}

std::vector<ConvergenceRow> entropy_convergence(const HopNetworkSpec& spec,
                                                const std::vector<ConditionalPmf>& channels,
                                                std::uint64_t seed, const std::vector<int>& ns,
                                                int k, std::uint64_t cap) {
  if (ns.size() < 3) fail("entropy convergence needs at least 3 blocklengths");
  for (std::size_t i = 0; i + 1 < ns.size(); ++i) {
    if (ns[i] >= ns[i + 1]) fail("blocklengths must be increasing");
  }
  std::vector<ConvergenceRow> rows;
  for (int n : ns) {
    const SchemeContext context(spec, channels, n, seed);
    const CenterDiagnostics d = analyze_center(context, k, std::nullopt, cap);
    if (d.max_single_letter_deviation > d.mu + 1e-12) {
      fail("single-letter deviation exceeds mu; restriction to the typical set is broken");
    }
    ConvergenceRow row;
    row.n = n;
    row.entropy_gap = d.entropy_gap;
    row.log_delta_term = d.log_delta_term;
    row.max_single_letter_deviation = d.max_single_letter_deviation;
    row.markov_gap_hop1 = d.hops.front().markov_gap;
    row.chain_cmi = d.chain_cmi;
    row.single_letter_kl = d.single_letter_kl;
    row.delta = d.delta;
    rows.push_back(row);
  }
  for (std::size_t i = 2; i < rows.size(); ++i) {
    if (rows[i].entropy_gap > rows[i - 1].entropy_gap + 1e-12) {
      fail("entropy gap increased between n=" + std::to_string(rows[i - 1].n) + " and n=" +
           std::to_string(rows[i].n));
    }
  }
  return rows;
}

JointPmf materialize_single_letterization(const SchemeContext& context, int k, int hop,
                                          const std::vector<std::uint64_t>& dk_bits,
                                          double delta, std::uint64_t max_support,
                                          std::uint64_t cap) {
  if (hop < 1 || hop > k) fail("hop out of range");
  const Space space(context, k, cap);
  const Tables tb = build_tables(context, space);
  const int n = space.n;
  const int prev_size = space.axis_size[static_cast<std::size_t>(hop - 1)];
  const int next_size = space.axis_size[static_cast<std::size_t>(hop)];

  std::unordered_map<std::uint64_t, int> u_ids;
  std::vector<std::vector<double>> mass;  // per u: prev x next table
  std::vector<std::uint64_t> spans(static_cast<std::size_t>(n));
  {
    std::uint64_t s = 1;
    for (int t = n - 1; t >= 0; --t) {
      spans[static_cast<std::size_t>(t)] = s;  // tuples sharing the prefix up to t
      s *= static_cast<std::uint64_t>(space.cells);
    }
  }

  Odometer od;
  od.init(space, 0);
  std::vector<int> ids(static_cast<std::size_t>(k));
  for (std::uint64_t idx = 0; idx < space.size; ++idx, idx < space.size ? (void)od.advance() : void()) {
    if (!((dk_bits[idx >> 6] >> (idx & 63)) & 1)) continue;
    tb.chain(od.flats, k, ids.data());
    const double p = od.p() / (delta * static_cast<double>(n));
    const int m = ids[static_cast<std::size_t>(hop - 1)];
    for (int t = 0; t < n; ++t) {
      const std::uint64_t prefix = idx / (spans[static_cast<std::size_t>(t)] *
                                          static_cast<std::uint64_t>(space.cells));
      const std::uint64_t key =
          (prefix * static_cast<std::uint64_t>(tb.m_count[static_cast<std::size_t>(hop - 1)]) +
           static_cast<std::uint64_t>(m)) *
              static_cast<std::uint64_t>(n) +
          static_cast<std::uint64_t>(t);
      auto [it, inserted] = u_ids.try_emplace(key, static_cast<int>(mass.size()));
      if (inserted) {
        if (mass.size() >= max_support) fail("single-letterization support exceeds the cap");
        mass.emplace_back(static_cast<std::size_t>(prev_size * next_size), 0.0);
      }
      const int cell = od.digits[static_cast<std::size_t>(t)];
      const int prev = space.comp[static_cast<std::size_t>(hop - 1)][static_cast<std::size_t>(cell)];
      const int nxt = space.comp[static_cast<std::size_t>(hop)][static_cast<std::size_t>(cell)];
      mass[static_cast<std::size_t>(it->second)][static_cast<std::size_t>(prev * next_size + nxt)] += p;
    }
  }

  const int support = static_cast<int>(mass.size());
  std::vector<double> flat(static_cast<std::size_t>(support * prev_size * next_size));
  for (int u = 0; u < support; ++u) {
    std::copy(mass[static_cast<std::size_t>(u)].begin(), mass[static_cast<std::size_t>(u)].end(),
              flat.begin() + static_cast<std::ptrdiff_t>(u * prev_size * next_size));
  }
  return JointPmf::unchecked(
      {Alphabet::indexed(support, "u"),
       context.spec().alphabets[static_cast<std::size_t>(hop - 1)],
       context.spec().alphabets[static_cast<std::size_t>(hop)]},
      std::move(flat));
}

}  // namespace khoplab
