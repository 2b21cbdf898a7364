#include "fairmix/distmix.hpp"

#include <cmath>
#include <vector>

#include "doctest.h"
#include "fairmix/rng.hpp"

using namespace fairmix;

namespace {

CategoricalDist dist(std::vector<double> p) { return CategoricalDist(std::move(p)); }

// Independent exhaustive grid oracle for the hidden-attribute split, step h
// over the (bar_t, bar_p) simplex. Evaluates the joint KL directly.
double hidden_mix_grid_oracle(const JointDist& p, const JointDist& t,
                              const JointDist& p_hat, int grid,
                              bool use_generated = true) {
  const std::size_t Y = p.labels(), A = p.attrs();
  std::vector<std::vector<double>> tc(Y), gc(Y);
  std::vector<bool> tok(Y, false), gok(Y, false);
  for (std::size_t y = 0; y < Y; ++y) {
    double tm = 0.0, gm = 0.0;
    for (double v : t.table[y]) tm += v;
    for (double v : p_hat.table[y]) gm += v;
    if (tm > 0) { tc[y] = t.conditional_given_label(y); tok[y] = true; }
    if (gm > 0 && use_generated) { gc[y] = p_hat.conditional_given_label(y); gok[y] = true; }
  }
  double best = kInfiniteKl;
  // Binary-label specialization: 3 free grid coordinates.
  REQUIRE(Y == 2);
  for (int i = 0; i <= grid; ++i)
    for (int j = 0; i + j <= grid; ++j)
      for (int k = 0; i + j + k <= grid; ++k) {
        const double bt0 = double(i) / grid, bt1 = double(j) / grid;
        const double bp0 = double(k) / grid, bp1 = double(grid - i - j - k) / grid;
        if ((bt0 > 0 && !tok[0]) || (bt1 > 0 && !tok[1])) continue;
        if ((bp0 > 0 && !gok[0]) || (bp1 > 0 && !gok[1])) continue;
        double kl = 0.0;
        bool inf = false;
        for (std::size_t y = 0; y < Y && !inf; ++y)
          for (std::size_t a = 0; a < A && !inf; ++a) {
            double m = 0.0;
            if (y == 0) m = (tok[0] ? tc[0][a] * bt0 : 0.0) + (gok[0] ? gc[0][a] * bp0 : 0.0);
            else        m = (tok[1] ? tc[1][a] * bt1 : 0.0) + (gok[1] ? gc[1][a] * bp1 : 0.0);
            if (m <= 0) continue;
            if (p.table[y][a] <= 0) { inf = true; break; }
            kl += m * std::log(m / p.table[y][a]);
          }
        if (!inf && kl < best) best = kl;
      }
  return best;
}

}  // namespace

TEST_CASE("kl_divergence basic values") {
  CHECK(kl_divergence(dist({0.5, 0.5}), dist({0.5, 0.5})) == doctest::Approx(0.0));
  CHECK(kl_divergence(dist({1.0, 0.0}), dist({0.5, 0.5})) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-9));
  const double expected = 0.2 * std::log(0.4) + 0.8 * std::log(1.6);
  CHECK(kl_divergence(dist({0.2, 0.8}), dist({0.5, 0.5})) ==
        doctest::Approx(expected).epsilon(1e-9));
  CHECK(expected == doctest::Approx(0.192745).epsilon(1e-5));
}

TEST_CASE("kl_divergence infinity and errors") {
  CHECK(std::isinf(kl_divergence(dist({0.5, 0.5}), dist({1.0, 0.0}))));
  CHECK(kl_divergence(dist({0.5, 0.5}), dist({1.0, 0.0})) > 1e300);
  CHECK_THROWS_AS(kl_divergence(dist({1.0}), dist({0.5, 0.5})),
                  std::invalid_argument);
}

TEST_CASE("kl nonnegativity property over random pairs") {
  Rng rng(11);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 2 + rng.uniform_index(5);
    std::vector<double> a(n), b(n);
    double sa = 0, sb = 0;
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.uniform() + 1e-6;
      b[i] = rng.uniform() + 1e-6;
      sa += a[i];
      sb += b[i];
    }
    for (std::size_t i = 0; i < n; ++i) { a[i] /= sa; b[i] /= sb; }
    const double kl = kl_divergence(dist(a), dist(b));
    CHECK(kl >= -1e-9);
    CHECK(kl_divergence(dist(a), dist(a)) == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("mix boundaries and paper fixture") {
  const CategoricalDist t = dist({1.0 / 6.0, 5.0 / 6.0});
  const CategoricalDist ph = dist({0.5, 0.5});
  const CategoricalDist m = mix(t, ph, MixWeight(0.1));
  CHECK(m[0] == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(m[1] == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(mix(t, ph, MixWeight(0.0))[0] == doctest::Approx(t[0]));
  CHECK(mix(t, ph, MixWeight(1.0))[0] == doctest::Approx(ph[0]));
  CHECK_THROWS_AS(mix(dist({1.0}), ph, MixWeight(0.5)), std::invalid_argument);
}

TEST_CASE("mix outputs a valid distribution (property)") {
  Rng rng(5);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 2 + rng.uniform_index(4);
    std::vector<double> a(n), b(n);
    double sa = 0, sb = 0;
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.uniform(); b[i] = rng.uniform();
      sa += a[i]; sb += b[i];
    }
    for (std::size_t i = 0; i < n; ++i) { a[i] /= sa; b[i] /= sb; }
    const CategoricalDist m = mix(dist(a), dist(b), MixWeight(rng.uniform()));
    CHECK_NOTHROW(m.validate());
  }
}

TEST_CASE("optimal_alpha paper fixture alpha = 0.1") {
  const auto r = optimal_alpha(dist({0.2, 0.8}), dist({1.0 / 6.0, 5.0 / 6.0}),
                               dist({0.5, 0.5}));
  CHECK(r.weight.alpha_gen == doctest::Approx(0.1).epsilon(1e-4));
  CHECK(r.kl < 1e-10);
}

TEST_CASE("optimal_alpha boundary cases") {
  const CategoricalDist p = dist({0.3, 0.7});
  SUBCASE("t already exact -> alpha 0") {
    const auto r = optimal_alpha(p, p, dist({0.9, 0.1}));
    CHECK(r.weight.alpha_gen == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(r.kl == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("generator exact, t off -> alpha 1") {
    const auto r = optimal_alpha(p, dist({0.9, 0.1}), p);
    CHECK(r.weight.alpha_gen == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.kl == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("optimal mix never worse than either endpoint (property)") {
  Rng rng(99);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> v[3];
    for (auto& x : v) {
      x = {rng.uniform() + 1e-3, 0.0};
      x[1] = 1.0;
      const double s = x[0] + x[1];
      x[0] /= s; x[1] /= s;
    }
    const CategoricalDist p = dist(v[0]), t = dist(v[1]), ph = dist(v[2]);
    const auto r = optimal_alpha(p, t, ph);
    CHECK(r.kl <= kl_divergence(p, t) + 1e-9);
    CHECK(r.kl <= kl_divergence(p, ph) + 1e-9);
  }
}

TEST_CASE("sample_empirical determinism and concentration") {
  const CategoricalDist p = dist({0.2, 0.8});
  const auto a = sample_empirical(p, 1000000, 7);
  const auto b = sample_empirical(p, 1000000, 7);
  CHECK(a.probs == b.probs);
  CHECK(std::abs(a[0] - 0.2) < 0.002);
  CHECK(sample_empirical(dist({1.0, 0.0}), 100, 3)[0] == doctest::Approx(1.0));
  CHECK_THROWS_AS(sample_empirical(p, 0, 1), std::invalid_argument);
}

TEST_CASE("optimal alpha decreases with sample size N (trend)") {
  const CategoricalDist p = dist({0.2, 0.8});
  const CategoricalDist ph = dist({0.5, 0.5});
  double means[3] = {0, 0, 0};
  const std::size_t Ns[3] = {6, 25, 100};
  const int reps = 200;
  for (int ni = 0; ni < 3; ++ni) {
    for (int r = 0; r < reps; ++r) {
      const auto t = sample_empirical(p, Ns[ni], 1000 * ni + r);
      means[ni] += optimal_alpha(p, t, ph).weight.alpha_gen;
    }
    means[ni] /= reps;
  }
  CHECK(means[0] > means[1]);
  CHECK(means[1] > means[2]);
}

TEST_CASE("optimize_hidden_mix trivial cases") {
  const JointDist p({{0.35, 0.4}, {0.1, 0.15}});
  const JointDist ph({{0.7, 0.2}, {0.05, 0.05}});
  SUBCASE("t equal to p gives KL 0") {
    const auto r = optimize_hidden_mix(p, p, ph);
    CHECK(r.feasible);
    CHECK(r.kl == doctest::Approx(0.0).epsilon(1e-10));
  }
  SUBCASE("matching conditionals give KL 0") {
    const auto r = optimize_hidden_mix(p, p, p);
    CHECK(r.kl == doctest::Approx(0.0).epsilon(1e-10));
  }
}

TEST_CASE("optimize_hidden_mix matches the exhaustive grid oracle") {
  const JointDist p({{0.35, 0.4}, {0.1, 0.15}});
  const JointDist ph({{0.7, 0.2}, {0.05, 0.05}});
  const auto t_marg = sample_empirical(
      CategoricalDist({0.35, 0.4, 0.1, 0.15}), 50, 3);
  const JointDist t({{t_marg[0], t_marg[1]}, {t_marg[2], t_marg[3]}});
  const auto r = optimize_hidden_mix(p, t, ph);
  const double oracle = hidden_mix_grid_oracle(p, t, ph, 200);
  CHECK(r.feasible);
  CHECK(r.kl == doctest::Approx(oracle).epsilon(0).scale(1).epsilon(1e-3));
  CHECK(std::abs(r.kl - oracle) < 1e-3);
}

TEST_CASE("optimize_hidden_mix factorized/joint agreement via split re-eval") {
  // The returned split's KL must equal a direct joint evaluation.
  const JointDist p({{0.35, 0.4}, {0.1, 0.15}});
  const JointDist ph({{0.7, 0.2}, {0.05, 0.05}});
  const JointDist t({{0.3, 0.45}, {0.1, 0.15}});
  const auto r = optimize_hidden_mix(p, t, ph);
  // Rebuild p' from the returned split and evaluate KL(p'||p) directly.
  double kl = 0.0;
  for (std::size_t y = 0; y < 2; ++y) {
    const auto tc = t.conditional_given_label(y);
    const auto gc = ph.conditional_given_label(y);
    for (std::size_t a = 0; a < 2; ++a) {
      const double m = tc[a] * r.bar_t[y] + gc[a] * r.bar_p[y];
      if (m > 0) kl += m * std::log(m / p.table[y][a]);
    }
  }
  CHECK(kl == doctest::Approx(r.kl).epsilon(1e-12));
}

TEST_CASE("optimize_hidden_mix infeasible support flagged") {
  // p has mass at (y=1, a=1) but both sources place zero conditional mass
  // anywhere in label 1, and using label 0 alone cannot cover it either.
  const JointDist p({{0.4, 0.0}, {0.0, 0.6}});
  const JointDist t({{1.0, 0.0}, {0.0, 0.0}});
  const JointDist ph({{1.0, 0.0}, {0.0, 0.0}});
  const auto r = optimize_hidden_mix(p, t, ph, KlDirection::target_vs_mix);
  CHECK_FALSE(r.feasible);
  CHECK(std::isinf(r.kl));
}

TEST_CASE("mixed split never worse than real-only split") {
  const JointDist p({{0.35, 0.4}, {0.1, 0.15}});
  const JointDist ph({{0.7, 0.2}, {0.05, 0.05}});
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto tm = sample_empirical(CategoricalDist({0.35, 0.4, 0.1, 0.15}),
                                     30, seed);
    const JointDist t({{tm[0], tm[1]}, {tm[2], tm[3]}});
    const auto mixed = optimize_hidden_mix(p, t, ph);
    const auto real_only =
        optimize_hidden_mix(p, t, ph, KlDirection::mix_vs_target, false);
    CHECK(mixed.kl <= real_only.kl + 1e-9);
  }
}
