#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "fairmix/rng.hpp"

namespace fairmix {

inline constexpr double kCovRidge = 1e-6;

struct GaussianMixture {
  Eigen::VectorXd weights;               // K, nonnegative, sums to 1
  std::vector<Eigen::VectorXd> means;    // K vectors of dim D
  std::vector<Eigen::MatrixXd> covs;     // K symmetric PD DxD matrices

  int components() const { return static_cast<int>(means.size()); }
  int dims() const { return means.empty() ? 0 : static_cast<int>(means[0].size()); }
};

struct ModeAssignment {
  std::vector<int> class_of_mode;
};

struct LinearClassifier {
  Eigen::MatrixXd weights;  // C x D
  Eigen::VectorXd biases;   // C

  int predict(const Eigen::VectorXd& x) const {
    Eigen::VectorXd logits = weights * x + biases;
    int best = 0;
    logits.maxCoeff(&best);
    return best;
  }
};

struct LabelledPoint {
  Eigen::VectorXd x;
  int label = 0;
};

namespace gmmdetail {

// Per-component Cholesky cache for density evaluation.
struct CompChol {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double log_norm = 0.0;  // -0.5 (D log 2pi + log|Sigma|)
};

inline CompChol factor(const Eigen::MatrixXd& cov) {
  CompChol c;
  c.llt.compute(cov);
  if (c.llt.info() != Eigen::Success)
    throw std::runtime_error("covariance not positive definite");
  const auto& L = c.llt.matrixLLT();
  double logdet = 0.0;
  for (int i = 0; i < cov.rows(); ++i) logdet += 2.0 * std::log(L(i, i));
  c.log_norm = -0.5 * (cov.rows() * std::log(2.0 * M_PI) + logdet);
  return c;
}

// Log densities of all rows of X (N x D) under one component.
inline Eigen::VectorXd log_density(const Eigen::MatrixXd& X,
                                   const Eigen::VectorXd& mean,
                                   const CompChol& c) {
  Eigen::MatrixXd centered = X.rowwise() - mean.transpose();
  // Whiten: solve L z = centered^T per point.
  Eigen::MatrixXd z = c.llt.matrixL().solve(centered.transpose());
  return (-0.5 * z.colwise().squaredNorm().array() + c.log_norm).matrix();
}

inline std::vector<int> kmeanspp_centers(const Eigen::MatrixXd& X, int k,
                                         Rng& rng) {
  const int n = static_cast<int>(X.rows());
  std::vector<int> centers;
  centers.push_back(static_cast<int>(rng.uniform_index(n)));
  Eigen::VectorXd d2 =
      (X.rowwise() - X.row(centers[0])).rowwise().squaredNorm();
  // Greedy seeding: several D^2-weighted candidates per step, keeping the
  // one that shrinks the potential most. Plain single-candidate seeding
  // lands two seeds in one well-separated cluster too often.
  const int candidates = std::min(n, std::max(
      2 + static_cast<int>(std::log2(std::max(k, 2))), 8 * k));
  const Eigen::VectorXd row_norms = X.rowwise().squaredNorm();
  while (static_cast<int>(centers.size()) < k) {
    const double total = d2.sum();
    std::vector<int> picks(candidates);
    for (int c = 0; c < candidates; ++c) {
      if (total <= 0.0) {
        picks[c] = static_cast<int>(rng.uniform_index(n));
        continue;
      }
      const double u = rng.uniform() * total;
      double acc = 0.0;
      picks[c] = n - 1;
      for (int i = 0; i < n; ++i) {
        acc += d2[i];
        if (u < acc) { picks[c] = i; break; }
      }
    }
    // One GEMM covers every candidate's distance column.
    Eigen::MatrixXd C(X.cols(), candidates);
    for (int c = 0; c < candidates; ++c) C.col(c) = X.row(picks[c]).transpose();
    const Eigen::MatrixXd cross = X * C;
    int best_pick = -1;
    double best_potential = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_d2;
    for (int c = 0; c < candidates; ++c) {
      Eigen::VectorXd cand_d2 =
          (row_norms.array() - 2.0 * cross.col(c).array() +
           row_norms[picks[c]])
              .cwiseMax(0.0)
              .min(d2.array());
      const double potential = cand_d2.sum();
      if (potential < best_potential) {
        best_potential = potential;
        best_pick = picks[c];
        best_d2 = std::move(cand_d2);
      }
    }
    centers.push_back(best_pick);
    d2 = std::move(best_d2);
  }
  return centers;
}

}  // namespace gmmdetail

// Mean log-likelihood per point of X under g.
inline double gmm_log_likelihood(const GaussianMixture& g,
                                 const Eigen::MatrixXd& X) {
  const int n = static_cast<int>(X.rows());
  const int k = g.components();
  Eigen::MatrixXd logp(n, k);
  for (int j = 0; j < k; ++j) {
    const auto c = gmmdetail::factor(g.covs[j]);
    logp.col(j) = gmmdetail::log_density(X, g.means[j], c).array() +
                  std::log(std::max(g.weights[j], 1e-300));
  }
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const double m = logp.row(i).maxCoeff();
    total += m + std::log((logp.row(i).array() - m).exp().sum());
  }
  return total / n;
}

// EM fit with k-means++ seeding and ridge-regularized covariances. The
// iteration stops when the per-point log-likelihood improves by less than tol.
namespace gmmdetail {

inline GaussianMixture fit_em_single(const Eigen::MatrixXd& X, int k,
                                     std::uint64_t seed, int max_iters,
                                     double tol,
                                     std::vector<double>* ll_trace) {
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  if (k < 1) throw std::invalid_argument("fit_em: k must be >= 1");
  if (n < k) throw std::invalid_argument("fit_em: fewer points than components");
  if (n < k * (d + 1))
    throw std::invalid_argument("fit_em: need at least k*(D+1) points");
  if (!X.allFinite()) throw std::invalid_argument("fit_em: non-finite input");

  Rng rng(seed);
  GaussianMixture g;
  g.weights = Eigen::VectorXd::Constant(k, 1.0 / k);
  g.means.resize(k);
  g.covs.resize(k);

  // Seed means by k-means++, then one hard-assignment pass for covariances.
  const auto centers = gmmdetail::kmeanspp_centers(X, k, rng);
  for (int j = 0; j < k; ++j) g.means[j] = X.row(centers[j]).transpose();
  {
    std::vector<std::vector<int>> members(k);
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (int j = 0; j < k; ++j) {
        const double dd = (X.row(i).transpose() - g.means[j]).squaredNorm();
        if (dd < bd) { bd = dd; best = j; }
      }
      members[best].push_back(i);
    }
    const Eigen::MatrixXd global_cov = [&] {
      Eigen::RowVectorXd mu = X.colwise().mean();
      Eigen::MatrixXd c = X.rowwise() - mu;
      return Eigen::MatrixXd((c.transpose() * c) / std::max(n - 1, 1));
    }();
    for (int j = 0; j < k; ++j) {
      if (members[j].size() >= 2) {
        Eigen::MatrixXd sub(members[j].size(), d);
        for (std::size_t r = 0; r < members[j].size(); ++r)
          sub.row(r) = X.row(members[j][r]);
        Eigen::RowVectorXd mu = sub.colwise().mean();
        g.means[j] = mu.transpose();
        Eigen::MatrixXd c = sub.rowwise() - mu;
        g.covs[j] = (c.transpose() * c) / static_cast<double>(sub.rows());
        g.weights[j] = static_cast<double>(sub.rows()) / n;
      } else {
        g.covs[j] = global_cov;
        g.weights[j] = 1.0 / n;
      }
      g.covs[j].diagonal().array() += kCovRidge;
    }
    g.weights /= g.weights.sum();
  }

  double prev_ll = -std::numeric_limits<double>::infinity();
  Eigen::MatrixXd logp(n, k), resp(n, k);
  for (int iter = 0; iter < max_iters; ++iter) {
    // E-step.
    for (int j = 0; j < k; ++j) {
      const auto c = gmmdetail::factor(g.covs[j]);
      logp.col(j) = gmmdetail::log_density(X, g.means[j], c).array() +
                    std::log(std::max(g.weights[j], 1e-300));
    }
    double ll = 0.0;
    for (int i = 0; i < n; ++i) {
      const double m = logp.row(i).maxCoeff();
      const double lse = m + std::log((logp.row(i).array() - m).exp().sum());
      ll += lse;
      resp.row(i) = (logp.row(i).array() - lse).exp();
    }
    ll /= n;
    if (ll_trace) ll_trace->push_back(ll);
    if (ll - prev_ll < tol && iter > 0) { prev_ll = ll; break; }
    prev_ll = ll;

    // M-step. Points with negligible responsibility for a component are
    // skipped in its covariance update; this keeps the 1000+-dimensional
    // configurations tractable without changing results beyond 1e-12 mass.
    for (int j = 0; j < k; ++j) {
      const double rsum = resp.col(j).sum();
      if (rsum < 1e-10) continue;
      std::vector<int> active;
      active.reserve(n);
      for (int i = 0; i < n; ++i)
        if (resp(i, j) > 1e-12) active.push_back(i);
      Eigen::MatrixXd sub(active.size(), d);
      Eigen::VectorXd w(active.size());
      for (std::size_t r = 0; r < active.size(); ++r) {
        sub.row(r) = X.row(active[r]);
        w[r] = resp(active[r], j);
      }
      const Eigen::VectorXd mu = (sub.transpose() * w) / rsum;
      Eigen::MatrixXd c = sub.rowwise() - mu.transpose();
      Eigen::MatrixXd cw = c.array().colwise() * w.array();
      g.means[j] = mu;
      g.covs[j] = (cw.transpose() * c) / rsum;
      g.covs[j] = 0.5 * (g.covs[j] + g.covs[j].transpose());
      g.covs[j].diagonal().array() += kCovRidge;
      g.weights[j] = rsum / n;
    }
    g.weights /= g.weights.sum();
  }
  return g;
}

}  // namespace gmmdetail

// EM from a greedy k-means++ start; with restarts > 1 the fit is repeated
// from fresh seeds and the highest-likelihood model wins, which escapes the
// merged-cluster local optima a single start can settle into.
inline GaussianMixture fit_em(const Eigen::MatrixXd& X, int k,
                              std::uint64_t seed, int max_iters = 100,
                              double tol = 1e-6,
                              std::vector<double>* ll_trace = nullptr,
                              int restarts = 1) {
  if (restarts < 1) throw std::invalid_argument("fit_em: restarts must be >= 1");
  GaussianMixture best;
  std::vector<double> best_trace;
  double best_ll = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    const std::uint64_t run_seed = seed + 0x9e3779b97f4a7c15ULL * r;
    std::vector<double> trace;
    GaussianMixture g = gmmdetail::fit_em_single(X, k, run_seed, max_iters, tol,
                                                 &trace);
    if (trace.back() > best_ll) {
      best_ll = trace.back();
      best = std::move(g);
      best_trace = std::move(trace);
    }
  }
  if (ll_trace) *ll_trace = best_trace;
  return best;
}

// n seeded draws, each tagged with its source mode.
inline std::vector<std::pair<Eigen::VectorXd, int>> gmm_sample(
    const GaussianMixture& g, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  const int d = g.dims();
  std::vector<Eigen::MatrixXd> chol(g.components());
  for (int j = 0; j < g.components(); ++j)
    chol[j] = Eigen::LLT<Eigen::MatrixXd>(g.covs[j]).matrixL();
  std::vector<std::pair<Eigen::VectorXd, int>> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int mode = static_cast<int>(rng.categorical(g.weights));
    Eigen::VectorXd z(d);
    for (int q = 0; q < d; ++q) z[q] = rng.normal();
    out.emplace_back(g.means[mode] + chol[mode] * z, mode);
  }
  return out;
}

namespace gmmdetail {

// Counts of (mode, class) over max-responsibility attribution.
inline std::vector<std::vector<int>> attribution_counts(
    const GaussianMixture& g, const std::vector<LabelledPoint>& labelled,
    int n_classes) {
  std::vector<CompChol> chols;
  for (const auto& cov : g.covs) chols.push_back(factor(cov));
  std::vector<std::vector<int>> counts(g.components(),
                                       std::vector<int>(n_classes, 0));
  for (const auto& pt : labelled) {
    int best = 0;
    double best_lp = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < g.components(); ++j) {
      Eigen::MatrixXd x(1, g.dims());
      x.row(0) = pt.x.transpose();
      const double lp = log_density(x, g.means[j], chols[j])[0] +
                        std::log(std::max(g.weights[j], 1e-300));
      if (lp > best_lp) { best_lp = lp; best = j; }
    }
    counts[best][pt.label]++;
  }
  return counts;
}

}  // namespace gmmdetail

// Majority-vote mode labelling from max-responsibility attribution. Empty
// modes take the globally most frequent class; ties break toward the lowest
// class index.
inline ModeAssignment assign_modes(const GaussianMixture& g,
                                   const std::vector<LabelledPoint>& labelled) {
  if (labelled.empty())
    throw std::invalid_argument("assign_modes: empty labelled set");
  int n_classes = 0;
  for (const auto& pt : labelled) n_classes = std::max(n_classes, pt.label + 1);
  const auto counts = gmmdetail::attribution_counts(g, labelled, n_classes);

  std::vector<int> global(n_classes, 0);
  for (const auto& pt : labelled) global[pt.label]++;
  const int global_major = static_cast<int>(
      std::max_element(global.begin(), global.end()) - global.begin());

  ModeAssignment out;
  out.class_of_mode.resize(g.components());
  for (int j = 0; j < g.components(); ++j) {
    int total = 0;
    for (int c : counts[j]) total += c;
    if (total == 0) {
      out.class_of_mode[j] = global_major;
      continue;
    }
    out.class_of_mode[j] = static_cast<int>(
        std::max_element(counts[j].begin(), counts[j].end()) -
        counts[j].begin());
  }
  return out;
}

// Exhaustive search over class maps, minimizing classification error of the
// attribution. With fixed max-responsibility attribution the error decomposes
// per mode, so this agrees with the majority heuristic; kept as the
// cross-check route. Only valid for K <= 8.
inline ModeAssignment assign_modes_exact(
    const GaussianMixture& g, const std::vector<LabelledPoint>& labelled) {
  if (labelled.empty())
    throw std::invalid_argument("assign_modes_exact: empty labelled set");
  if (g.components() > 8)
    throw std::invalid_argument("assign_modes_exact: K must be <= 8");
  int n_classes = 0;
  for (const auto& pt : labelled) n_classes = std::max(n_classes, pt.label + 1);
  const auto counts = gmmdetail::attribution_counts(g, labelled, n_classes);

  std::vector<int> global(n_classes, 0);
  for (const auto& pt : labelled) global[pt.label]++;
  const int global_major = static_cast<int>(
      std::max_element(global.begin(), global.end()) - global.begin());

  const int K = g.components();
  std::vector<int> current(K, 0), best(K, 0);
  long best_correct = -1;
  auto recurse = [&](auto&& self, int mode, long correct) -> void {
    if (mode == K) {
      if (correct > best_correct) { best_correct = correct; best = current; }
      return;
    }
    for (int c = 0; c < n_classes; ++c) {
      current[mode] = c;
      self(self, mode + 1, correct + counts[mode][c]);
    }
  };
  recurse(recurse, 0, 0);
  // Normalize empty modes to the global majority for parity with the heuristic.
  for (int j = 0; j < K; ++j) {
    int total = 0;
    for (int c : counts[j]) total += c;
    if (total == 0) best[j] = global_major;
  }
  return ModeAssignment{best};
}

// Multinomial logistic regression by seeded mini-batch gradient descent.
inline LinearClassifier train_classifier(
    const std::vector<LabelledPoint>& train, int epochs, double lr,
    std::uint64_t seed, int n_classes = 0, int batch_size = 32) {
  if (train.empty())
    throw std::invalid_argument("train_classifier: empty training set");
  const int d = static_cast<int>(train[0].x.size());
  int C = n_classes;
  for (const auto& pt : train) C = std::max(C, pt.label + 1);

  Rng rng(seed);
  LinearClassifier clf;
  clf.weights = Eigen::MatrixXd::Zero(C, d);
  clf.biases = Eigen::VectorXd::Zero(C);
  for (int i = 0; i < C; ++i)
    for (int j = 0; j < d; ++j) clf.weights(i, j) = 0.01 * rng.normal();

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(batch_size));
      Eigen::MatrixXd gw = Eigen::MatrixXd::Zero(C, d);
      Eigen::VectorXd gb = Eigen::VectorXd::Zero(C);
      for (std::size_t idx = start; idx < end; ++idx) {
        const auto& pt = train[order[idx]];
        Eigen::VectorXd logits = clf.weights * pt.x + clf.biases;
        const double m = logits.maxCoeff();
        Eigen::VectorXd probs = (logits.array() - m).exp();
        probs /= probs.sum();
        probs[pt.label] -= 1.0;
        gw.noalias() += probs * pt.x.transpose();
        gb += probs;
      }
      const double scale = lr / static_cast<double>(end - start);
      clf.weights -= scale * gw;
      clf.biases -= scale * gb;
    }
  }
  return clf;
}

inline double classifier_accuracy(const LinearClassifier& clf,
                                  const std::vector<LabelledPoint>& data) {
  if (data.empty()) return 0.0;
  int correct = 0;
  for (const auto& pt : data)
    if (clf.predict(pt.x) == pt.label) ++correct;
  return static_cast<double>(correct) / data.size();
}

struct GmmExperimentConfig {
  int dims = 2;
  int components = 2;
  std::vector<int> n_labelled_per_class = {4};
  int n_unlabelled = 10000;
  std::vector<int> n_generated = {0, 1000};
  std::vector<std::uint64_t> seeds = {0};
  int n_validation = 2000;
  int classifier_epochs = 200;
  double classifier_lr = 0.5;
  int em_max_iters = 50;
  double em_tol = 1e-5;
  int em_restarts = 2;
  double cov_scale = 0.1;
  int workers = 1;
};

struct GmmExperimentRow {
  int n_labelled = 0;
  int n_generated = 0;
  double mean_acc = 0.0;
  double std_acc = 0.0;
  int n_seeds = 0;
};

// Ground-truth mixture: means uniform in [0,1] per dimension; full random
// covariances A A^T with factor entries drawn at cov_scale. Marginal spread
// grows with sqrt(D) at fixed scale, so high-dimensional configurations use
// a smaller scale to stay in a clusterable regime.
inline GaussianMixture make_true_mixture(int dims, int components, Rng& rng,
                                         double cov_scale = 0.1) {
  GaussianMixture g;
  g.weights = Eigen::VectorXd::Constant(components, 1.0 / components);
  g.means.resize(components);
  g.covs.resize(components);
  for (int j = 0; j < components; ++j) {
    g.means[j] = Eigen::VectorXd::NullaryExpr(
        dims, [&](Eigen::Index) { return rng.uniform(); });
    Eigen::MatrixXd W(dims, dims);
    for (int r = 0; r < dims; ++r)
      for (int c = 0; c < dims; ++c) W(r, c) = rng.normal();
    g.covs[j] = (cov_scale * cov_scale) * (W * W.transpose());
    g.covs[j].diagonal().array() += 1e-4;
  }
  return g;
}

// Full semi-supervised pipeline at one seed: sample data from a fresh true
// mixture, fit a GMM to the unlabelled points, label its modes, augment with
// generated points, train and evaluate a linear classifier.
inline std::map<std::pair<int, int>, double> run_gmm_seed(
    const GmmExperimentConfig& cfg, std::uint64_t seed) {
  Rng root(seed);
  Rng truth_rng = root.child(0);
  const GaussianMixture truth =
      make_true_mixture(cfg.dims, cfg.components, truth_rng, cfg.cov_scale);

  const auto unlab = gmm_sample(truth, cfg.n_unlabelled, seed * 1000003 + 1);
  Eigen::MatrixXd X(cfg.n_unlabelled, cfg.dims);
  for (int i = 0; i < cfg.n_unlabelled; ++i) X.row(i) = unlab[i].first.transpose();

  const GaussianMixture fitted =
      fit_em(X, cfg.components, seed * 1000003 + 2, cfg.em_max_iters,
             cfg.em_tol, nullptr, cfg.em_restarts);

  const auto val_draws = gmm_sample(truth, cfg.n_validation, seed * 1000003 + 3);
  std::vector<LabelledPoint> validation;
  for (const auto& [x, mode] : val_draws) validation.push_back({x, mode});

  std::map<std::pair<int, int>, double> acc;
  for (int n_lab : cfg.n_labelled_per_class) {
    // Labelled points: n_lab per class, drawn from that class's component.
    std::vector<LabelledPoint> labelled;
    Rng lab_rng = root.child(100 + n_lab);
    std::vector<Eigen::MatrixXd> chol(cfg.components);
    for (int j = 0; j < cfg.components; ++j)
      chol[j] = Eigen::LLT<Eigen::MatrixXd>(truth.covs[j]).matrixL();
    for (int c = 0; c < cfg.components; ++c)
      for (int i = 0; i < n_lab; ++i) {
        Eigen::VectorXd z(cfg.dims);
        for (int q = 0; q < cfg.dims; ++q) z[q] = lab_rng.normal();
        labelled.push_back({truth.means[c] + chol[c] * z, c});
      }

    const ModeAssignment assign = assign_modes(fitted, labelled);
    for (int n_gen : cfg.n_generated) {
      std::vector<LabelledPoint> train = labelled;
      if (n_gen > 0) {
        const auto gen = gmm_sample(fitted, n_gen,
                                    seed * 1000003 + 7 + n_lab * 31 + n_gen);
        for (const auto& [x, mode] : gen)
          train.push_back({x, assign.class_of_mode[mode]});
      }
      const LinearClassifier clf = train_classifier(
          train, cfg.classifier_epochs, cfg.classifier_lr,
          seed * 1000003 + 11 + n_lab * 31 + n_gen, cfg.components);
      acc[{n_lab, n_gen}] = classifier_accuracy(clf, validation);
    }
  }
  return acc;
}

// Seed-grid experiment; seeds may fan out to a worker pool without changing
// the aggregate (per-seed results are reduced in seed order).
inline std::vector<GmmExperimentRow> run_gmm_experiment(
    const GmmExperimentConfig& cfg) {
  if (cfg.n_unlabelled < cfg.components * (cfg.dims + 1))
    throw std::invalid_argument("run_gmm_experiment: too few unlabelled points");
  if (cfg.seeds.empty())
    throw std::invalid_argument("run_gmm_experiment: empty seed list");

  std::vector<std::map<std::pair<int, int>, double>> per_seed(cfg.seeds.size());
  const int workers =
      std::max(1, std::min<int>(cfg.workers, static_cast<int>(cfg.seeds.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i)
      per_seed[i] = run_gmm_seed(cfg, cfg.seeds[i]);
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= cfg.seeds.size()) return;
          per_seed[i] = run_gmm_seed(cfg, cfg.seeds[i]);
        }
      });
    for (auto& t : pool) t.join();
  }

  std::vector<GmmExperimentRow> rows;
  for (int n_lab : cfg.n_labelled_per_class)
    for (int n_gen : cfg.n_generated) {
      double sum = 0.0, sum2 = 0.0;
      for (const auto& m : per_seed) {
        const double a = m.at({n_lab, n_gen});
        sum += a;
        sum2 += a * a;
      }
      const int n = static_cast<int>(per_seed.size());
      const double mean = sum / n;
      const double var = std::max(0.0, sum2 / n - mean * mean);
      rows.push_back({n_lab, n_gen, mean, std::sqrt(var), n});
    }
  return rows;
}

}  // namespace fairmix
