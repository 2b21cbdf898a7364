#pragma once

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "fairmix/rng.hpp"

namespace fairmix {

struct EmbeddingSet {
  Eigen::MatrixXd vectors;  // N x D
  std::string domain_tag;
};

struct ScoredPrediction {
  double score = 0.0;
  int truth = 0;  // binary
  int subgroup = 0;
};

// ---- MMD -------------------------------------------------------------------

// Unbiased squared-MMD estimate with the inhomogeneous cubic kernel
// K(u, v) = (u.v + offset)^3. Within-set sums exclude i = j and scale by
// 1/(N(N-1)); the cross term scales by 2/N^2. include_diagonal keeps the
// i = j terms for sensitivity checks.
inline double mmd2(const EmbeddingSet& u, const EmbeddingSet& z,
                   double kernel_offset = 1.0, bool include_diagonal = false) {
  const auto n = u.vectors.rows();
  if (n < 2 || z.vectors.rows() != n)
    throw std::invalid_argument("mmd2: need two sets of equal size N >= 2");
  if (u.vectors.cols() != z.vectors.cols())
    throw std::invalid_argument("mmd2: dimension mismatch");

  auto kernel_sum = [&](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                        bool skip_diag) {
    Eigen::MatrixXd gram = a * b.transpose();
    gram.array() += kernel_offset;
    gram = gram.array().cube();
    double s = gram.sum();
    if (skip_diag) s -= gram.diagonal().sum();
    return s;
  };

  const double nn = static_cast<double>(n);
  const double within_u = kernel_sum(u.vectors, u.vectors, !include_diagonal);
  const double within_z = kernel_sum(z.vectors, z.vectors, !include_diagonal);
  const double cross = kernel_sum(u.vectors, z.vectors, false);
  const double denom = nn * (nn - 1.0);
  return within_u / denom + within_z / denom - 2.0 * cross / (nn * nn);
}

// S seeded subsample-without-replacement repetitions of mmd2 at size n.
inline std::vector<double> mmd_protocol(const EmbeddingSet& a,
                                        const EmbeddingSet& b, int s, int n,
                                        std::uint64_t seed,
                                        double kernel_offset = 1.0) {
  if (a.vectors.rows() < n || b.vectors.rows() < n)
    throw std::invalid_argument("mmd_protocol: insufficient vectors");
  if (s < 1 || n < 2) throw std::invalid_argument("mmd_protocol: bad s or n");
  Rng root(seed);
  std::vector<double> out;
  out.reserve(s);
  for (int rep = 0; rep < s; ++rep) {
    Rng rng = root.child(rep);
    auto subsample = [&](const EmbeddingSet& src) {
      std::vector<std::size_t> idx(src.vectors.rows());
      std::iota(idx.begin(), idx.end(), 0);
      rng.shuffle(idx);
      EmbeddingSet sub;
      sub.domain_tag = src.domain_tag;
      sub.vectors.resize(n, src.vectors.cols());
      for (int i = 0; i < n; ++i) sub.vectors.row(i) = src.vectors.row(idx[i]);
      return sub;
    };
    const EmbeddingSet ua = subsample(a);
    const EmbeddingSet ub = subsample(b);
    out.push_back(mmd2(ua, ub, kernel_offset));
  }
  return out;
}

// ---- Mann-Whitney U --------------------------------------------------------

namespace statdetail {

// U statistic of x against y with midrank tie handling.
inline double u_statistic(const std::vector<double>& x,
                          const std::vector<double>& y) {
  struct Entry { double v; int from_x; };
  std::vector<Entry> all;
  for (double v : x) all.push_back({v, 1});
  for (double v : y) all.push_back({v, 0});
  std::sort(all.begin(), all.end(),
            [](const Entry& a, const Entry& b) { return a.v < b.v; });
  double rank_sum_x = 0.0;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    while (j < all.size() && all[j].v == all[i].v) ++j;
    const double midrank = 0.5 * (i + 1 + j);  // average of ranks i+1..j
    for (std::size_t k = i; k < j; ++k)
      if (all[k].from_x) rank_sum_x += midrank;
    i = j;
  }
  const double n1 = static_cast<double>(x.size());
  return rank_sum_x - n1 * (n1 + 1.0) / 2.0;
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace statdetail

struct MannWhitneyResult {
  double U = 0.0;
  double p_two_sided = 1.0;
};

// Two-sided Mann-Whitney U. Exact p by enumeration of all group assignments
// when |x|+|y| <= 10; tie-corrected normal approximation with continuity
// correction otherwise.
inline MannWhitneyResult mann_whitney_u(const std::vector<double>& x,
                                        const std::vector<double>& y) {
  if (x.empty() || y.empty())
    throw std::invalid_argument("mann_whitney_u: empty input");
  const std::size_t n1 = x.size(), n2 = y.size(), n = n1 + n2;
  const double u_obs = statdetail::u_statistic(x, y);
  const double mu = 0.5 * n1 * n2;

  MannWhitneyResult res;
  res.U = u_obs;

  if (n <= 10) {
    // Enumerate every way to assign n1 of the pooled values to group x.
    std::vector<double> pooled(x);
    pooled.insert(pooled.end(), y.begin(), y.end());
    std::vector<int> choose(n, 0);
    std::fill(choose.begin(), choose.begin() + n1, 1);
    std::sort(choose.begin(), choose.end());
    long total = 0, extreme = 0;
    const double d_obs = std::abs(u_obs - mu);
    do {
      std::vector<double> gx, gy;
      for (std::size_t i = 0; i < n; ++i)
        (choose[i] ? gx : gy).push_back(pooled[i]);
      const double u = statdetail::u_statistic(gx, gy);
      ++total;
      if (std::abs(u - mu) >= d_obs - 1e-12) ++extreme;
    } while (std::next_permutation(choose.begin(), choose.end()));
    res.p_two_sided = static_cast<double>(extreme) / total;
    return res;
  }

  // Tie correction over the pooled sample.
  std::vector<double> pooled(x);
  pooled.insert(pooled.end(), y.begin(), y.end());
  std::sort(pooled.begin(), pooled.end());
  double tie_sum = 0.0;
  std::size_t i = 0;
  while (i < pooled.size()) {
    std::size_t j = i;
    while (j < pooled.size() && pooled[j] == pooled[i]) ++j;
    const double t = static_cast<double>(j - i);
    tie_sum += t * t * t - t;
    i = j;
  }
  const double nn = static_cast<double>(n);
  const double var = (n1 * n2 / 12.0) *
                     ((nn + 1.0) - tie_sum / (nn * (nn - 1.0)));
  if (var <= 0.0) {
    res.p_two_sided = 1.0;
    return res;
  }
  const double z = (std::abs(u_obs - mu) - 0.5) / std::sqrt(var);
  res.p_two_sided = std::min(1.0, 2.0 * (1.0 - statdetail::normal_cdf(std::max(0.0, z))));
  return res;
}

// ---- PCA -------------------------------------------------------------------

// Smallest number of principal components whose eigenvalues reach the given
// fraction of total variance. Zero total variance yields 0.
inline int pca_components_for_variance(const Eigen::MatrixXd& points,
                                       double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw std::invalid_argument("pca_components_for_variance: fraction in (0, 1]");
  if (points.rows() < 2)
    throw std::invalid_argument("pca_components_for_variance: need N >= 2");
  const Eigen::RowVectorXd mean = points.colwise().mean();
  const Eigen::MatrixXd centered = points.rowwise() - mean;
  const Eigen::MatrixXd cov =
      (centered.transpose() * centered) / static_cast<double>(points.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  std::vector<double> eig(solver.eigenvalues().data(),
                          solver.eigenvalues().data() + cov.rows());
  std::sort(eig.begin(), eig.end(), std::greater<>());
  const double total = std::accumulate(eig.begin(), eig.end(), 0.0);
  if (total <= 1e-12) return 0;
  double acc = 0.0;
  for (std::size_t m = 0; m < eig.size(); ++m) {
    acc += std::max(0.0, eig[m]);
    if (acc >= fraction * total - 1e-12) return static_cast<int>(m + 1);
  }
  return static_cast<int>(eig.size());
}

// ---- Classification metrics ------------------------------------------------

// Rank-based AUC: P(score_pos > score_neg) + 0.5 P(tie), computed exactly.
inline double auc(const std::vector<ScoredPrediction>& preds) {
  std::size_t n_pos = 0, n_neg = 0;
  for (const auto& p : preds) (p.truth ? n_pos : n_neg)++;
  if (n_pos == 0 || n_neg == 0)
    throw std::invalid_argument("auc: need both classes present");
  // Midrank sum of positives.
  std::vector<const ScoredPrediction*> sorted;
  for (const auto& p : preds) sorted.push_back(&p);
  std::sort(sorted.begin(), sorted.end(),
            [](auto* a, auto* b) { return a->score < b->score; });
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j]->score == sorted[i]->score) ++j;
    const double midrank = 0.5 * (i + 1 + j);
    for (std::size_t k = i; k < j; ++k)
      if (sorted[k]->truth) rank_sum_pos += midrank;
    i = j;
  }
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

// Worst-to-best spread of a per-subgroup metric.
inline double subgroup_gap(const std::map<int, double>& metric_per_subgroup) {
  if (metric_per_subgroup.size() < 2)
    throw std::invalid_argument("subgroup_gap: need at least 2 subgroups");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& [k, v] : metric_per_subgroup) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return hi - lo;
}

struct RankedPrediction {
  std::vector<int> ranked_classes;  // best first
  int truth = 0;
};

// Recall restricted to the high-risk class set under top-k prediction lists.
inline double high_risk_sensitivity(const std::vector<RankedPrediction>& preds,
                                    const std::set<int>& high_risk) {
  if (high_risk.empty())
    throw std::invalid_argument("high_risk_sensitivity: empty class set");
  std::size_t n = 0, hit = 0;
  for (const auto& p : preds) {
    if (!high_risk.count(p.truth)) continue;
    ++n;
    if (std::find(p.ranked_classes.begin(), p.ranked_classes.end(), p.truth) !=
        p.ranked_classes.end())
      ++hit;
  }
  if (n == 0)
    throw std::invalid_argument("high_risk_sensitivity: no high-risk examples");
  return static_cast<double>(hit) / n;
}

inline double top_k_accuracy(const std::vector<RankedPrediction>& preds, int k) {
  if (k < 1) throw std::invalid_argument("top_k_accuracy: k must be >= 1");
  if (preds.empty()) throw std::invalid_argument("top_k_accuracy: empty input");
  std::size_t hit = 0;
  for (const auto& p : preds) {
    const auto end = p.ranked_classes.begin() +
                     std::min<std::size_t>(k, p.ranked_classes.size());
    if (std::find(p.ranked_classes.begin(), end, p.truth) != end) ++hit;
  }
  return static_cast<double>(hit) / preds.size();
}

// Macro-averaged per-class recall.
inline double balanced_accuracy(const std::vector<std::pair<int, int>>& pred_truth) {
  if (pred_truth.empty())
    throw std::invalid_argument("balanced_accuracy: empty input");
  std::map<int, std::pair<int, int>> per_class;  // truth -> (correct, total)
  for (const auto& [pred, truth] : pred_truth) {
    auto& [c, t] = per_class[truth];
    ++t;
    if (pred == truth) ++c;
  }
  double acc = 0.0;
  for (const auto& [cls, ct] : per_class)
    acc += static_cast<double>(ct.first) / ct.second;
  return acc / per_class.size();
}

// ---- Beta-posterior fairness estimate --------------------------------------

struct BetaFairnessResult {
  double mean_diff = 0.0;
  double spread = 0.0;  // std of the sampled posterior differences
};

// Per-group Beta(1 + successes, 1 + failures) posteriors under a uniform
// prior; Monte Carlo over paired differences (group - outgroup).
inline BetaFairnessResult beta_fairness_estimate(
    std::pair<std::size_t, std::size_t> group,
    std::pair<std::size_t, std::size_t> outgroup, std::size_t n_samples,
    std::uint64_t seed) {
  const auto [gs, gt] = group;
  const auto [os, ot] = outgroup;
  if (gt == 0 || ot == 0)
    throw std::invalid_argument("beta_fairness_estimate: zero trials");
  if (gs > gt || os > ot)
    throw std::invalid_argument("beta_fairness_estimate: successes exceed trials");
  if (n_samples == 0)
    throw std::invalid_argument("beta_fairness_estimate: n_samples must be >= 1");
  Rng rng(seed);
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double a = rng.beta(1.0 + gs, 1.0 + (gt - gs));
    const double b = rng.beta(1.0 + os, 1.0 + (ot - os));
    const double d = a - b;
    sum += d;
    sum2 += d * d;
  }
  const double mean = sum / n_samples;
  const double var = std::max(0.0, sum2 / n_samples - mean * mean);
  return {mean, std::sqrt(var)};
}

}  // namespace fairmix
