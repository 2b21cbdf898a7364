// Acceptance gate: one check per release criterion, each printed as a single
// pass/fail line. Oracles here are written independently of the library
// implementations they certify.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fairmix/analysis.hpp"
#include "fairmix/diffusion.hpp"
#include "fairmix/distmix.hpp"
#include "fairmix/gmm.hpp"
#include "fairmix/mixpolicy.hpp"
#include "fairmix/rng.hpp"

namespace fs = std::filesystem;
using namespace fairmix;

namespace {

// ---- shared helpers ---------------------------------------------------------

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

// Percentile bootstrap interval for the mean.
std::pair<double, double> bootstrap_ci95(const std::vector<double>& v,
                                         std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> means;
  for (int b = 0; b < 1000; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
      s += v[rng.uniform_index(v.size())];
    means.push_back(s / v.size());
  }
  std::sort(means.begin(), means.end());
  return {means[24], means[974]};
}

// ---- independent oracles ----------------------------------------------------

// Exhaustive simplex grid for the hidden-attribute split, binary label.
double hidden_grid_oracle(const JointDist& p, const JointDist& t,
                          const JointDist& p_hat, int grid) {
  const std::size_t A = p.attrs();
  std::vector<std::vector<double>> tc(2), gc(2);
  std::vector<bool> tok(2, false), gok(2, false);
  for (std::size_t y = 0; y < 2; ++y) {
    double tm = 0.0, gm = 0.0;
    for (double v : t.table[y]) tm += v;
    for (double v : p_hat.table[y]) gm += v;
    if (tm > 0) { tc[y] = t.conditional_given_label(y); tok[y] = true; }
    if (gm > 0) { gc[y] = p_hat.conditional_given_label(y); gok[y] = true; }
  }
  double best = kInfiniteKl;
  for (int i = 0; i <= grid; ++i)
    for (int j = 0; i + j <= grid; ++j)
      for (int k = 0; i + j + k <= grid; ++k) {
        const double bt0 = double(i) / grid, bt1 = double(j) / grid;
        const double bp0 = double(k) / grid, bp1 = double(grid - i - j - k) / grid;
        if ((bt0 > 0 && !tok[0]) || (bt1 > 0 && !tok[1])) continue;
        if ((bp0 > 0 && !gok[0]) || (bp1 > 0 && !gok[1])) continue;
        double kl = 0.0;
        bool inf = false;
        for (std::size_t y = 0; y < 2 && !inf; ++y)
          for (std::size_t a = 0; a < A && !inf; ++a) {
            const double bt = (y == 0) ? bt0 : bt1;
            const double bp = (y == 0) ? bp0 : bp1;
            const double m = (tok[y] ? tc[y][a] * bt : 0.0) +
                             (gok[y] ? gc[y][a] * bp : 0.0);
            if (m <= 0) continue;
            if (p.table[y][a] <= 0) { inf = true; break; }
            kl += m * std::log(m / p.table[y][a]);
          }
        if (!inf && kl < best) best = kl;
      }
  return best;
}

// Literal four-sum unbiased MMD^2 with the cubic kernel.
double mmd_triple_loop(const Eigen::MatrixXd& u, const Eigen::MatrixXd& z,
                       double offset) {
  auto k = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double d = a.dot(b) + offset;
    return d * d * d;
  };
  const Eigen::Index n = u.rows(), m = z.rows();
  double a = 0.0, b = 0.0, c = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j) a += k(u.row(i), u.row(j));
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      if (i != j) b += k(z.row(i), z.row(j));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) c += k(u.row(i), z.row(j));
  return a / (double(n) * (n - 1)) + b / (double(m) * (m - 1)) -
         2.0 * c / (double(n) * m);
}

// Exact two-sided Mann-Whitney p by enumerating every group relabelling.
double mwu_enum_oracle(const std::vector<double>& x,
                       const std::vector<double>& y) {
  std::vector<double> pool = x;
  pool.insert(pool.end(), y.begin(), y.end());
  const std::size_t n = pool.size(), n1 = x.size();
  auto u_stat = [&](const std::vector<int>& mask) {
    double u = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!mask[i]) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (mask[j]) continue;
        if (pool[i] > pool[j]) u += 1.0;
        else if (pool[i] == pool[j]) u += 0.5;
      }
    }
    return u;
  };
  std::vector<int> obs_mask(n, 0);
  for (std::size_t i = 0; i < n1; ++i) obs_mask[i] = 1;
  const double mu = 0.5 * n1 * (n - n1);
  const double dev_obs = std::abs(u_stat(obs_mask) - mu);
  std::vector<int> mask(n, 0);
  std::fill(mask.begin(), mask.begin() + n1, 1);
  std::sort(mask.begin(), mask.end());
  std::size_t hits = 0, total = 0;
  do {
    ++total;
    if (std::abs(u_stat(mask) - mu) >= dev_obs - 1e-12) ++hits;
  } while (std::next_permutation(mask.begin(), mask.end()));
  return double(hits) / total;
}

// Dense eigendecomposition count of components reaching a variance fraction.
int pca_eig_oracle(const Eigen::MatrixXd& pts, double frac) {
  const Eigen::MatrixXd centered = pts.rowwise() - pts.colwise().mean();
  const Eigen::MatrixXd cov =
      centered.transpose() * centered / double(pts.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  std::vector<double> ev(eig.eigenvalues().data(),
                         eig.eigenvalues().data() + cov.rows());
  std::sort(ev.begin(), ev.end(), std::greater<>());
  const double total = std::accumulate(ev.begin(), ev.end(), 0.0);
  if (total <= 0.0) return 0;
  double cum = 0.0;
  for (std::size_t m = 0; m < ev.size(); ++m) {
    cum += ev[m];
    if (cum >= frac * total - 1e-12) return int(m) + 1;
  }
  return int(ev.size());
}

double auc_pair_oracle(const std::vector<ScoredPrediction>& preds) {
  double num = 0.0;
  std::size_t pairs = 0;
  for (const auto& p : preds)
    for (const auto& q : preds) {
      if (p.truth != 1 || q.truth != 0) continue;
      ++pairs;
      if (p.score > q.score) num += 1.0;
      else if (p.score == q.score) num += 0.5;
    }
  return num / pairs;
}

// ---- criteria ---------------------------------------------------------------

bool criterion_1(std::string& detail) {
  const auto start = std::chrono::steady_clock::now();
  const CategoricalDist p({0.2, 0.8}), t({1.0 / 6.0, 5.0 / 6.0}),
      ph({0.5, 0.5});
  const AlphaResult r = optimal_alpha(p, t, ph);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  std::ostringstream os;
  os << "alpha_gen=" << r.weight.alpha_gen << " kl=" << r.kl << " in " << secs
     << "s";
  detail = os.str();
  return std::abs(r.weight.alpha_gen - 0.100) <= 0.001 && r.kl < 1e-10 &&
         secs < 1.0;
}

bool criterion_2(std::string& detail) {
  const CategoricalDist p({0.2, 0.8}), ph({0.5, 0.5});
  const std::vector<int> Ns = {6, 25, 100};
  std::vector<double> means;
  std::vector<std::pair<double, double>> cis;
  for (std::size_t ni = 0; ni < Ns.size(); ++ni) {
    std::vector<double> alphas;
    for (int r = 0; r < 1000; ++r) {
      const auto t = sample_empirical(p, Ns[ni], 7000 * ni + r);
      alphas.push_back(optimal_alpha(p, t, ph).weight.alpha_gen);
    }
    means.push_back(mean_of(alphas));
    cis.push_back(bootstrap_ci95(alphas, 90 + ni));
  }
  bool trend = true;
  for (std::size_t i = 0; i + 1 < means.size(); ++i)
    trend = trend && means[i] > means[i + 1] && cis[i].first > cis[i + 1].second;

  // p_hat sweep with common resampled targets; maximal mean at p_hat = p.
  const std::vector<double> sweep = {0.05, 0.1, 0.15, 0.2, 0.3,
                                     0.4,  0.5, 0.7,  0.9};
  std::vector<CategoricalDist> targets;
  for (int r = 0; r < 300; ++r) targets.push_back(sample_empirical(p, 25, 50000 + r));
  std::size_t argmax = 0;
  double best = -1.0;
  for (std::size_t si = 0; si < sweep.size(); ++si) {
    const CategoricalDist gen({sweep[si], 1.0 - sweep[si]});
    double s = 0.0;
    for (const auto& t : targets) s += optimal_alpha(p, t, gen).weight.alpha_gen;
    if (s > best) { best = s; argmax = si; }
  }
  std::ostringstream os;
  os << "means N={6,25,100}: " << means[0] << " > " << means[1] << " > "
     << means[2] << ", sweep argmax p_hat=" << sweep[argmax];
  detail = os.str();
  return trend && sweep[argmax] == 0.2;
}

bool criterion_3(std::string& detail) {
  const JointDist p({{0.35, 0.4}, {0.1, 0.15}});
  const JointDist ph({{0.7, 0.2}, {0.05, 0.05}});
  const CategoricalDist p_flat({0.35, 0.4, 0.1, 0.15});
  double worst_gap = 0.0;
  for (int N : {10, 50, 200})
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto tm = sample_empirical(p_flat, N, N * 100 + seed);
      const JointDist t({{tm[0], tm[1]}, {tm[2], tm[3]}});
      const auto mixed = optimize_hidden_mix(p, t, ph);
      const auto real_only =
          optimize_hidden_mix(p, t, ph, KlDirection::mix_vs_target, false);
      if (mixed.kl > real_only.kl + 1e-9) {
        detail = "mixed KL exceeded real-only KL at N=" + std::to_string(N);
        return false;
      }
      const double oracle = hidden_grid_oracle(p, t, ph, 200);
      worst_gap = std::max(worst_gap, std::abs(mixed.kl - oracle));
    }
  std::ostringstream os;
  os << "max |kl - grid oracle| = " << worst_gap;
  detail = os.str();
  return worst_gap < 1e-3;
}

bool criterion_4(std::string& detail) {
  const auto start = std::chrono::steady_clock::now();
  // Truth seed chosen so component means are pairwise separated (>= 0.33),
  // matching the visualised mixture's distinct clusters.
  Rng rng(17);
  const GaussianMixture truth = make_true_mixture(2, 5, rng);
  const auto draws = gmm_sample(truth, 5000, 41);
  Eigen::MatrixXd X(5000, 2);
  for (int i = 0; i < 5000; ++i) X.row(i) = draws[i].first.transpose();
  const GaussianMixture fitted = fit_em(X, 5, 42, 200, 1e-8, nullptr, 3);

  std::vector<int> perm = {0, 1, 2, 3, 4};
  double best = 1e9;
  do {
    double worst = 0.0;
    for (int j = 0; j < 5; ++j)
      worst = std::max(worst,
                       (fitted.means[perm[j]] - truth.means[j]).norm());
    best = std::min(best, worst);
  } while (std::next_permutation(perm.begin(), perm.end()));
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  std::ostringstream os;
  os << "max matched mean error = " << best << " in " << secs << "s";
  detail = os.str();
  return best < 0.05 && secs < 30.0;
}

bool criterion_5(std::string& detail) {
  const auto start = std::chrono::steady_clock::now();
  struct Setup {
    int comps, dims, n_unlab, em_iters, em_restarts;
    double cov_scale;
  };
  // High-dimensional configs use a smaller covariance factor scale; the
  // marginal spread of A A^T grows with sqrt(D) and would otherwise swamp
  // the unit-box mean separation.
  const std::vector<Setup> setups = {{2, 64, 2000, 30, 2, 0.1},
                                     {5, 64, 2000, 30, 2, 0.1},
                                     {10, 1024, 10500, 2, 1, 0.01}};
  int strictly_greater = 0;
  std::ostringstream os;
  for (const auto& s : setups) {
    GmmExperimentConfig cfg;
    cfg.dims = s.dims;
    cfg.components = s.comps;
    cfg.n_labelled_per_class = {10};
    cfg.n_unlabelled = s.n_unlab;
    cfg.n_generated = {0, 1000};
    cfg.seeds.clear();
    for (std::uint64_t q = 0; q < 10; ++q) cfg.seeds.push_back(q);
    cfg.n_validation = 1000;
    cfg.em_max_iters = s.em_iters;
    cfg.em_tol = 1e-5;
    cfg.em_restarts = s.em_restarts;
    cfg.cov_scale = s.cov_scale;
    const auto rows = run_gmm_experiment(cfg);
    double base = 0.0, aug = 0.0;
    for (const auto& r : rows)
      (r.n_generated == 0 ? base : aug) = r.mean_acc;
    os << s.comps << "c/" << s.dims << "d: " << base << " -> " << aug << "; ";
    if (aug < base) {
      detail = os.str() + "augmented mean below baseline";
      return false;
    }
    if (aug > base) ++strictly_greater;
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  os << strictly_greater << "/3 strictly greater, " << secs << "s";
  detail = os.str();
  return strictly_greater >= 2 && secs < 600.0;
}

bool criterion_6(std::string& detail) {
  Rng rng(61);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 2 + int(rng.uniform_index(7));
    const int d = 1 + int(rng.uniform_index(5));
    Eigen::MatrixXd u(n, d), z(n, d);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) u(i, j) = rng.normal();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) z(i, j) = rng.normal();
    const double off = rng.uniform(0.5, 2.0);
    const EmbeddingSet eu{u, "u"}, ez{z, "z"};
    worst = std::max(worst,
                     std::abs(mmd2(eu, ez, off) - mmd_triple_loop(u, z, off)));
  }
  if (worst > 1e-12) {
    detail = "oracle gap " + std::to_string(worst);
    return false;
  }

  int rejections = 0;
  for (int trial = 0; trial < 20; ++trial) {
    Rng trng(600 + trial);
    auto draw = [&](int n, double shift) {
      Eigen::MatrixXd m(n, 8);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < 8; ++j) m(i, j) = trng.normal() + (j == 0 ? shift : 0.0);
      return m;
    };
    EmbeddingSet a{draw(1500, 0.0), "a"}, b{draw(1500, 1.0), "b"};
    EmbeddingSet a2{draw(1500, 0.0), "a2"}, a3{draw(1500, 0.0), "a3"};
    const auto alt = mmd_protocol(a, b, 30, 300, 6000 + trial);
    const auto null = mmd_protocol(a2, a3, 30, 300, 6100 + trial);
    if (mann_whitney_u(alt, null).p_two_sided < 0.05) ++rejections;
  }
  std::ostringstream os;
  os << "oracle gap <= 1e-12, protocol rejections " << rejections << "/20";
  detail = os.str();
  return rejections >= 19;
}

bool criterion_7(std::string& detail) {
  // Every instance over the tie-rich alphabet {0, 1, 2} with |x|+|y| <= 8.
  double worst = 0.0;
  std::size_t instances = 0;
  for (int n1 = 1; n1 <= 7; ++n1)
    for (int n2 = 1; n1 + n2 <= 8; ++n2) {
      const int s = n1 + n2;
      std::vector<int> digits(s, 0);
      bool done = false;
      while (!done) {
        std::vector<double> x(digits.begin(), digits.begin() + n1);
        std::vector<double> y(digits.begin() + n1, digits.end());
        const double lib = mann_whitney_u(x, y).p_two_sided;
        const double oracle = mwu_enum_oracle(x, y);
        worst = std::max(worst, std::abs(lib - oracle));
        ++instances;
        int pos = s - 1;
        while (pos >= 0 && digits[pos] == 2) digits[pos--] = 0;
        if (pos < 0) done = true;
        else ++digits[pos];
      }
    }
  std::ostringstream os;
  os << instances << " instances, max |p - enum| = " << worst;
  detail = os.str();
  return worst <= 1e-12;
}

bool criterion_8(std::string& detail) {
  Rng rng(81);
  const std::vector<double> fractions = {0.6, 0.7, 0.8, 0.9, 0.95, 1.0};
  for (int rep = 0; rep < 100; ++rep) {
    Eigen::MatrixXd pts(20, 8);
    for (int i = 0; i < 20; ++i)
      for (int j = 0; j < 8; ++j) pts(i, j) = rng.normal();
    for (double f : fractions)
      if (pca_components_for_variance(pts, f) != pca_eig_oracle(pts, f)) {
        detail = "mismatch at rep " + std::to_string(rep) + " fraction " +
                 std::to_string(f);
        return false;
      }
  }
  detail = "600 comparisons exact";
  return true;
}

bool criterion_9(std::string& detail) {
  const std::vector<RaterDiagnosis> ratings = {{{0, 4}, {1, 3}},
                                               {{0, 3}, {3, 4}}};
  const auto soft = aggregate_soft_labels(ratings, 4);
  const std::vector<double> expected = {0.5, 1.0 / 6.0, 0.0, 1.0 / 3.0};
  double worst = 0.0;
  for (int c = 0; c < 4; ++c)
    worst = std::max(worst, std::abs(soft[c] - expected[c]));
  if (worst > 5e-4) {
    detail = "soft label gap " + std::to_string(worst);
    return false;
  }
  Dataset d;
  d.class_names = {"A", "B", "C", "D"};
  LabeledExample ex;
  ex.features = {0.0};
  ex.label = 0;
  ex.soft = soft;
  d.examples.push_back(ex);
  const bool excluded = threshold_confident(d, 0, 0.9).examples.empty();
  const bool included = threshold_confident(d, 0, 0.5).examples.size() == 1;
  std::ostringstream os;
  os << "max gap " << worst << ", t=0.9 excluded, t=0.5 included";
  detail = os.str();
  return excluded && included;
}

bool criterion_10(std::string& detail) {
  const auto start = std::chrono::steady_clock::now();
  const auto sched = make_schedule(100, 1e-4, 0.02);

  // Gradient vs central finite differences on 50 coordinates.
  auto net = make_denoiser(2, 2, 0, {16, 16}, 5);
  std::vector<NoisePredictionItem> items;
  Rng grng(55);
  for (int i = 0; i < 12; ++i) {
    NoisePredictionItem it;
    it.x0 = Eigen::Vector2d(grng.normal(), grng.normal());
    it.eps = Eigen::Vector2d(grng.normal(), grng.normal());
    it.t = int(grng.uniform_index(sched.T));
    it.cond = ConditionVector{int(1 + grng.uniform_index(2)), 2, 0, 0};
    items.push_back(it);
  }
  NetGradients grads = zero_gradients(net);
  denoise_loss_and_grad(net, items, sched, &grads);
  Rng pick(56);
  const double h = 1e-5;
  for (int q = 0; q < 50; ++q) {
    const std::size_t layer = pick.uniform_index(net.layer_count());
    const std::size_t idx = pick.uniform_index(net.W[layer].size());
    double* w = net.W[layer].data() + idx;
    const double saved = *w;
    *w = saved + h;
    const double lp = denoise_loss_and_grad(net, items, sched, nullptr);
    *w = saved - h;
    const double lm = denoise_loss_and_grad(net, items, sched, nullptr);
    *w = saved;
    const double fd = (lp - lm) / (2.0 * h);
    const double an = grads.dW[layer](idx);
    const double rel = std::abs(fd - an) / std::max(1e-8, std::abs(fd));
    if (rel > 1e-4) {
      detail = "gradient rel error " + std::to_string(rel);
      return false;
    }
  }

  // Forward marginal moments over 1e5 draws.
  const Eigen::VectorXd x0 = Eigen::Vector2d(0.7, -0.4);
  const int tmid = 50;
  const double ab = sched.alpha_bars[tmid];
  double m0 = 0.0, v0 = 0.0;
  const int nd = 100000;
  for (int i = 0; i < nd; ++i) {
    const auto [xt, eps] = forward_diffuse(x0, tmid, sched, 7000 + i);
    m0 += xt[0];
    v0 += xt[0] * xt[0];
  }
  m0 /= nd;
  v0 = v0 / nd - m0 * m0;
  const double exp_m = std::sqrt(ab) * x0[0], exp_v = 1.0 - ab;
  if (std::abs(m0 - exp_m) > 0.02 * std::max(1.0, std::abs(exp_m)) ||
      std::abs(v0 - exp_v) > 0.02 * exp_v) {
    detail = "forward marginal off: mean " + std::to_string(m0) + " var " +
             std::to_string(v0);
    return false;
  }

  // w = 0 guidance is the conditional branch bit for bit.
  {
    const ConditionVector cond{1, 2, 0, 0};
    const Eigen::VectorXd xt = Eigen::Vector2d(0.3, -0.8);
    const Eigen::VectorXd a = cfg_denoise(net, xt, 10, sched.T, cond, 0.0);
    const Eigen::VectorXd b = denoise(net, xt, 10, sched.T, cond);
    for (int i = 0; i < 2; ++i)
      if (a[i] != b[i]) {
        detail = "cfg(w=0) not bit-equal";
        return false;
      }
  }

  // 2000 training steps separate a 2-class mixture with centers (+-2, 0).
  Rng drng(57);
  std::vector<DiffusionExample> train;
  for (int i = 0; i < 256; ++i) {
    DiffusionExample ex;
    const int cls = i % 2;
    const double cx = cls == 0 ? 2.0 : -2.0;
    ex.x = Eigen::Vector2d(cx + 0.3 * drng.normal(), 0.3 * drng.normal());
    ex.cond = ConditionVector{cls + 1, 2, 0, 0};
    train.push_back(ex);
  }
  auto model = make_denoiser(2, 2, 0, {64, 64}, 58);
  NetGradients vel = zero_gradients(model);
  // 256 examples at batch 64 is 4 steps per epoch; 500 epochs = 2000 steps.
  for (int e = 0; e < 500; ++e)
    train_epoch(model, train, sched, 2e-3, 0.1, 590 + e, 64, 0.9, &vel);

  int nearest_own = 0, total = 0;
  for (int cls = 0; cls < 2; ++cls) {
    const ConditionVector cond{cls + 1, 2, 0, 0};
    const double cx = cls == 0 ? 2.0 : -2.0;
    for (const auto& x : sample(model, sched, cond, 2.0, 100, 5900 + cls)) {
      ++total;
      if (std::abs(x[0] - cx) < std::abs(x[0] + cx)) ++nearest_own;
    }
  }
  const double frac = double(nearest_own) / total;
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  std::ostringstream os;
  os << "gradients ok, marginals ok, w=0 bit-equal, class-conditional "
     << frac * 100 << "% nearest own center, " << secs << "s";
  detail = os.str();
  return frac >= 0.90 && secs < 300.0;
}

bool criterion_11(std::string& detail) {
  Rng rng(111);
  double worst = 0.0;
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<ScoredPrediction> preds;
    const int n = 6 + int(rng.uniform_index(30));
    bool has0 = false, has1 = false;
    for (int i = 0; i < n; ++i) {
      ScoredPrediction p;
      p.score = double(rng.uniform_index(10)) / 10.0;  // quantized, tie-rich
      p.truth = int(rng.uniform_index(2));
      preds.push_back(p);
      (p.truth ? has1 : has0) = true;
    }
    if (!has0) preds[0].truth = 0;
    if (!has1) preds[1].truth = 1;
    worst = std::max(worst, std::abs(auc(preds) - auc_pair_oracle(preds)));
  }
  if (worst > 1e-12) {
    detail = "auc oracle gap " + std::to_string(worst);
    return false;
  }

  // Exact rational checks on small alphabets; inputs are dyadic so every
  // intermediate double is exact.
  const std::map<int, double> per_group = {{0, 0.75}, {1, 0.5}, {2, 0.875}};
  if (subgroup_gap(per_group) != 0.375) {
    detail = "subgroup_gap not exact";
    return false;
  }
  Dataset d;
  d.class_names = {"c0", "c1"};
  d.attribute_schemas = {{"sex", {"f", "m"}}};
  auto push = [&](int label, int attr, int count) {
    for (int i = 0; i < count; ++i) {
      LabeledExample ex;
      ex.features = {0.0};
      ex.label = label;
      ex.attrs = {attr};
      d.examples.push_back(ex);
    }
  };
  push(0, 0, 4);
  push(0, 1, 2);
  push(1, 0, 1);
  push(1, 1, 1);
  const JointDist spec = fair_sampling_spec(d, 0);
  const bool exact = spec.table[0][0] == 0.375 && spec.table[0][1] == 0.375 &&
                     spec.table[1][0] == 0.125 && spec.table[1][1] == 0.125;
  detail = exact ? "auc oracle <= 1e-12, rational checks exact"
                 : "fair_sampling_spec not exact";
  return exact;
}

int run_cmd(const std::string& cmd) {
  return WEXITSTATUS(std::system(cmd.c_str()));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool dirs_identical(const fs::path& a, const fs::path& b) {
  std::set<std::string> names;
  for (const auto& e : fs::directory_iterator(a))
    names.insert(e.path().filename().string());
  for (const auto& e : fs::directory_iterator(b))
    names.insert(e.path().filename().string());
  for (const auto& name : names)
    if (!fs::exists(a / name) || !fs::exists(b / name) ||
        slurp(a / name) != slurp(b / name))
      return false;
  return true;
}

bool criterion_12(std::string& detail) {
  const fs::path base = fs::temp_directory_path() / "acceptance_cli";
  fs::remove_all(base);
  fs::create_directories(base);
  const std::string cli = FAIRMIX_CLI_PATH;
  const std::string null = " >/dev/null 2>&1";

  // Shared toy dataset for diffusion and fixed embeddings for analyze.
  Dataset toy;
  toy.class_names = {"a", "b"};
  Rng rng(121);
  for (int i = 0; i < 64; ++i) {
    LabeledExample ex;
    const int cls = i % 2;
    ex.features = {(cls ? -2.0 : 2.0) + 0.3 * rng.normal(),
                   0.3 * rng.normal()};
    ex.label = cls;
    toy.examples.push_back(ex);
  }
  {
    std::ofstream out(base / "toy.jsonl");
    save_jsonl(toy, out);
  }
  for (const char* name : {"e1.csv", "e2.csv"}) {
    std::ofstream out(base / name);
    for (int i = 0; i < 400; ++i) {
      for (int j = 0; j < 4; ++j)
        out << rng.normal() << (j + 1 < 4 ? "," : "\n");
    }
  }

  struct Case { std::string label, args; bool workers_vary; };
  const std::vector<Case> cases = {
      {"bernoulli", "bernoulli --set resamples=50", false},
      {"gmm",
       "gmm --set n_unlabelled=400 --set n_generated=[0,100] --set "
       "seeds=[0,1,2]",
       true},
      {"diffusion",
       "diffusion --set mode=train --set data=" + (base / "toy.jsonl").string() +
           " --set epochs=5 --set T=40 --set hidden=[16,16]",
       false},
      {"analyze",
       "analyze --set embeddings=[\\\"" + (base / "e1.csv").string() +
           "\\\",\\\"" + (base / "e2.csv").string() +
           "\\\"] --set mmd_s=5 --set mmd_n=50",
       false},
  };
  for (const auto& c : cases) {
    const fs::path d1 = base / (c.label + "_1"), d2 = base / (c.label + "_2");
    const std::string w1 = " --workers 1", w2 = c.workers_vary ? " --workers 3" : w1;
    if (run_cmd(cli + " " + c.args + " --out " + d1.string() + w1 + null) != 0 ||
        run_cmd(cli + " " + c.args + " --out " + d2.string() + w2 + null) != 0) {
      detail = c.label + " run failed";
      return false;
    }
    if (!dirs_identical(d1, d2)) {
      detail = c.label + " outputs differ across reruns";
      return false;
    }
  }
  detail = "all four subcommands byte-identical across reruns and worker counts";
  return true;
}

}  // namespace

int main() {
  struct Entry { int id; const char* name; std::function<bool(std::string&)> fn; };
  const std::vector<Entry> entries = {
      {1, "Bernoulli single-run fixture", criterion_1},
      {2, "Bernoulli resampling trend and p-hat sweep", criterion_2},
      {3, "hidden-variable fixture vs grid oracle", criterion_3},
      {4, "GMM mean recovery at 5000 points", criterion_4},
      {5, "GMM augmentation accuracy property", criterion_5},
      {6, "MMD oracle equivalence and protocol power", criterion_6},
      {7, "Mann-Whitney exactness up to size 8", criterion_7},
      {8, "PCA counts vs dense eigendecomposition", criterion_8},
      {9, "soft-label worked example and thresholds", criterion_9},
      {10, "diffusion numerics and guided sampling", criterion_10},
      {11, "AUC oracle and exact fairness checks", criterion_11},
      {12, "end-to-end CLI determinism", criterion_12},
  };
  int failures = 0;
  for (const auto& e : entries) {
    std::string detail;
    bool ok = false;
    try {
      ok = e.fn(detail);
    } catch (const std::exception& ex) {
      detail = std::string("exception: ") + ex.what();
    }
    if (!ok) ++failures;
    std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << e.id << ": "
              << e.name << " (" << detail << ")\n"
              << std::flush;
  }
  return failures == 0 ? 0 : 1;
}
