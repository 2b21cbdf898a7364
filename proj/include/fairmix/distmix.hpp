#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "fairmix/rng.hpp"

namespace fairmix {

inline constexpr double kProbTolerance = 1e-9;
inline constexpr double kInfiniteKl = std::numeric_limits<double>::infinity();

// Finite categorical distribution over a fixed outcome set.
struct CategoricalDist {
  std::vector<double> probs;

  CategoricalDist() = default;
  explicit CategoricalDist(std::vector<double> p) : probs(std::move(p)) {
    validate();
  }

  std::size_t size() const { return probs.size(); }
  double operator[](std::size_t i) const { return probs[i]; }

  void validate() const {
    double total = 0.0;
    for (double v : probs) {
      if (!(v >= 0.0)) throw std::invalid_argument("negative probability");
      total += v;
    }
    if (std::abs(total - 1.0) > kProbTolerance)
      throw std::invalid_argument("probabilities do not sum to 1");
  }
};

// Joint distribution over (label y, attribute a), stored row-major by label.
struct JointDist {
  std::vector<std::vector<double>> table;  // table[y][a]

  JointDist() = default;
  explicit JointDist(std::vector<std::vector<double>> t) : table(std::move(t)) {
    validate();
  }

  std::size_t labels() const { return table.size(); }
  std::size_t attrs() const { return table.empty() ? 0 : table[0].size(); }

  void validate() const {
    if (table.empty()) throw std::invalid_argument("empty joint table");
    double total = 0.0;
    for (const auto& row : table) {
      if (row.size() != table[0].size())
        throw std::invalid_argument("ragged joint table");
      for (double v : row) {
        if (!(v >= 0.0)) throw std::invalid_argument("negative probability");
        total += v;
      }
    }
    if (std::abs(total - 1.0) > kProbTolerance)
      throw std::invalid_argument("joint table does not sum to 1");
  }

  CategoricalDist label_marginal() const {
    std::vector<double> m(labels(), 0.0);
    for (std::size_t y = 0; y < labels(); ++y)
      for (double v : table[y]) m[y] += v;
    CategoricalDist out;
    out.probs = std::move(m);
    return out;
  }

  // Conditional t(a|y); throws if the label marginal is zero.
  std::vector<double> conditional_given_label(std::size_t y) const {
    double m = 0.0;
    for (double v : table[y]) m += v;
    if (m <= 0.0)
      throw std::invalid_argument("conditional undefined: zero label mass");
    std::vector<double> out(table[y]);
    for (double& v : out) v /= m;
    return out;
  }
};

// Fraction of generated data in a real/generated mixture. The complementary
// real-data fraction is alpha_real = 1 - alpha_gen.
struct MixWeight {
  double alpha_gen = 0.0;

  MixWeight() = default;
  explicit MixWeight(double a) : alpha_gen(a) {
    if (!(a >= 0.0 && a <= 1.0))
      throw std::invalid_argument("alpha_gen must lie in [0, 1]");
  }
};

// KL(first || second) directions for the mixing optimizers. target_vs_mix
// evaluates KL(p || p'); mix_vs_target evaluates KL(p' || p).
enum class KlDirection { target_vs_mix, mix_vs_target };

// Sum of p_i ln(p_i / q_i) in nats, with 0 ln(0/q) = 0. Returns +infinity
// when q has a zero where p has mass.
inline double kl_divergence(const CategoricalDist& p, const CategoricalDist& q) {
  if (p.size() != q.size())
    throw std::invalid_argument("kl_divergence: dimension mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) return kInfiniteKl;
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return kl;
}

inline CategoricalDist mix(const CategoricalDist& t, const CategoricalDist& p_hat,
                           const MixWeight& w) {
  if (t.size() != p_hat.size())
    throw std::invalid_argument("mix: dimension mismatch");
  CategoricalDist out;
  out.probs.resize(t.size());
  for (std::size_t i = 0; i < t.size(); ++i)
    out.probs[i] = (1.0 - w.alpha_gen) * t[i] + w.alpha_gen * p_hat[i];
  return out;
}

struct AlphaResult {
  MixWeight weight;
  double kl = 0.0;
};

namespace detail {

inline double mix_kl(const CategoricalDist& p, const CategoricalDist& t,
                     const CategoricalDist& p_hat, double alpha,
                     KlDirection dir) {
  const CategoricalDist m = mix(t, p_hat, MixWeight(alpha));
  return dir == KlDirection::target_vs_mix ? kl_divergence(p, m)
                                           : kl_divergence(m, p);
}

}  // namespace detail

// Minimizes the KL between the target p and the alpha-mixture of t and p_hat
// over alpha in [0, 1]. Deterministic grid scan at step 1e-4, smallest alpha
// wins ties within 1e-12, then one golden-section pass around the grid
// minimum for sub-grid resolution.
inline AlphaResult optimal_alpha(const CategoricalDist& p,
                                 const CategoricalDist& t,
                                 const CategoricalDist& p_hat,
                                 KlDirection dir = KlDirection::target_vs_mix) {
  if (p.size() != t.size() || p.size() != p_hat.size())
    throw std::invalid_argument("optimal_alpha: dimension mismatch");
  constexpr double kStep = 1e-4;
  constexpr int kGrid = 10000;
  double best_alpha = 0.0;
  double best_kl = detail::mix_kl(p, t, p_hat, 0.0, dir);
  for (int i = 1; i <= kGrid; ++i) {
    const double a = static_cast<double>(i) * kStep;
    const double kl = detail::mix_kl(p, t, p_hat, a, dir);
    if (kl < best_kl - 1e-12) {
      best_kl = kl;
      best_alpha = a;
    }
  }
  // Golden-section refinement inside the bracketing grid cell.
  double lo = std::max(0.0, best_alpha - kStep);
  double hi = std::min(1.0, best_alpha + kStep);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = hi - inv_phi * (hi - lo);
  double b = lo + inv_phi * (hi - lo);
  double fa = detail::mix_kl(p, t, p_hat, a, dir);
  double fb = detail::mix_kl(p, t, p_hat, b, dir);
  for (int iter = 0; iter < 60; ++iter) {
    if (fa < fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - inv_phi * (hi - lo);
      fa = detail::mix_kl(p, t, p_hat, a, dir);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + inv_phi * (hi - lo);
      fb = detail::mix_kl(p, t, p_hat, b, dir);
    }
  }
  const double refined = 0.5 * (lo + hi);
  const double refined_kl = detail::mix_kl(p, t, p_hat, refined, dir);
  if (refined_kl < best_kl - 1e-12) {
    best_kl = refined_kl;
    best_alpha = refined;
  }
  return {MixWeight(best_alpha), best_kl};
}

// Empirical frequency distribution of n seeded i.i.d. draws from p.
inline CategoricalDist sample_empirical(const CategoricalDist& p, std::size_t n,
                                        std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("sample_empirical: n must be >= 1");
  Rng rng(seed);
  std::vector<double> counts(p.size(), 0.0);
  for (std::size_t i = 0; i < n; ++i) counts[rng.categorical(p.probs)] += 1.0;
  for (double& c : counts) c /= static_cast<double>(n);
  CategoricalDist out;
  out.probs = std::move(counts);
  return out;
}

// Result of the hidden-attribute mixing optimization. bar_t + bar_p share one
// unit of mass over labels; feasible is false when no finite-KL split exists.
struct HiddenMixResult {
  CategoricalDist bar_t;
  CategoricalDist bar_p;
  double kl = kInfiniteKl;
  bool feasible = false;
};

namespace detail {

// KL of the split (bar_t, bar_p) for the hidden-attribute model, evaluated
// on the full joint p'(y,a) = t(a|y) bar_t(y) + p_hat(a|y) bar_p(y).
inline double hidden_split_kl(const JointDist& p,
                              const std::vector<std::vector<double>>& t_cond,
                              const std::vector<bool>& t_ok,
                              const std::vector<std::vector<double>>& g_cond,
                              const std::vector<bool>& g_ok,
                              const std::vector<double>& bar_t,
                              const std::vector<double>& bar_p,
                              KlDirection dir) {
  const std::size_t Y = p.labels(), A = p.attrs();
  for (std::size_t y = 0; y < Y; ++y) {
    if (bar_t[y] > 0.0 && !t_ok[y]) return kInfiniteKl;
    if (bar_p[y] > 0.0 && !g_ok[y]) return kInfiniteKl;
  }
  double kl = 0.0;
  for (std::size_t y = 0; y < Y; ++y) {
    for (std::size_t a = 0; a < A; ++a) {
      double mixed = 0.0;
      if (bar_t[y] > 0.0) mixed += t_cond[y][a] * bar_t[y];
      if (bar_p[y] > 0.0) mixed += g_cond[y][a] * bar_p[y];
      const double target = p.table[y][a];
      if (dir == KlDirection::mix_vs_target) {
        if (mixed <= 0.0) continue;
        if (target <= 0.0) return kInfiniteKl;
        kl += mixed * std::log(mixed / target);
      } else {
        if (target <= 0.0) continue;
        if (mixed <= 0.0) return kInfiniteKl;
        kl += target * std::log(target / mixed);
      }
    }
  }
  return kl;
}

}  // namespace detail

// Optimal split of unit mass between resampled real data (bar_t over labels,
// with fixed conditionals t(a|y)) and generated data (bar_p, conditionals
// p_hat(a|y)). Coarse simplex grid followed by iterated local refinement to
// step <= 1e-4 per coordinate.
inline HiddenMixResult optimize_hidden_mix(
    const JointDist& p, const JointDist& t, const JointDist& p_hat,
    KlDirection dir = KlDirection::mix_vs_target, bool use_generated = true) {
  if (p.labels() != t.labels() || p.labels() != p_hat.labels() ||
      p.attrs() != t.attrs() || p.attrs() != p_hat.attrs())
    throw std::invalid_argument("optimize_hidden_mix: dimension mismatch");

  const std::size_t Y = p.labels();
  std::vector<std::vector<double>> t_cond(Y), g_cond(Y);
  std::vector<bool> t_ok(Y, false), g_ok(Y, false);
  for (std::size_t y = 0; y < Y; ++y) {
    double tm = 0.0, gm = 0.0;
    for (double v : t.table[y]) tm += v;
    for (double v : p_hat.table[y]) gm += v;
    if (tm > 0.0) {
      t_cond[y] = t.conditional_given_label(y);
      t_ok[y] = true;
    }
    if (gm > 0.0 && use_generated) {
      g_cond[y] = p_hat.conditional_given_label(y);
      g_ok[y] = true;
    }
  }

  const std::size_t dims = 2 * Y;  // bar_t then bar_p, flattened
  auto eval = [&](const std::vector<double>& v) {
    std::vector<double> bt(v.begin(), v.begin() + Y);
    std::vector<double> bp(v.begin() + Y, v.end());
    return detail::hidden_split_kl(p, t_cond, t_ok, g_cond, g_ok, bt, bp, dir);
  };

  // Coarse exhaustive pass over the simplex grid.
  const int coarse = 20;
  std::vector<double> best(dims, 0.0);
  double best_kl = kInfiniteKl;
  std::vector<int> counts(dims, 0);
  auto recurse = [&](auto&& self, std::size_t idx, int remaining) -> void {
    if (idx + 1 == dims) {
      counts[idx] = remaining;
      std::vector<double> v(dims);
      for (std::size_t i = 0; i < dims; ++i)
        v[i] = static_cast<double>(counts[i]) / coarse;
      const double kl = eval(v);
      if (kl < best_kl) {
        best_kl = kl;
        best = v;
      }
      return;
    }
    for (int c = 0; c <= remaining; ++c) {
      counts[idx] = c;
      self(self, idx + 1, remaining - c);
    }
  };
  recurse(recurse, 0, coarse);

  if (!std::isfinite(best_kl)) {
    HiddenMixResult out;
    out.bar_t.probs.assign(Y, 0.0);
    out.bar_p.probs.assign(Y, 0.0);
    out.kl = kInfiniteKl;
    out.feasible = false;
    return out;
  }

  // Local refinement: shrink a coordinate-wise step, projecting proposals
  // back onto the simplex through the last coordinate.
  double step = 1.0 / coarse;
  while (step > 1e-4 / 2.0) {
    step /= 2.0;
    bool improved = true;
    while (improved) {
      improved = false;
      for (std::size_t i = 0; i < dims; ++i) {
        for (std::size_t j = 0; j < dims; ++j) {
          if (i == j) continue;
          // Move mass `step` from coordinate j to coordinate i.
          if (best[j] < step) continue;
          std::vector<double> cand = best;
          cand[j] -= step;
          cand[i] += step;
          const double kl = eval(cand);
          if (kl < best_kl - 1e-15) {
            best_kl = kl;
            best = cand;
            improved = true;
          }
        }
      }
    }
  }

  HiddenMixResult out;
  out.bar_t.probs.assign(best.begin(), best.begin() + Y);
  out.bar_p.probs.assign(best.begin() + Y, best.end());
  out.kl = best_kl;
  out.feasible = true;
  return out;
}

}  // namespace fairmix
