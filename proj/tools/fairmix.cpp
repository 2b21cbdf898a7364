// fairmix command-line front end: reproducible experiment runner that wires
// the library modules together and emits plot-ready CSV/JSON reports.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fairmix/analysis.hpp"
#include "fairmix/diffusion.hpp"
#include "fairmix/distmix.hpp"
#include "fairmix/gmm.hpp"
#include "fairmix/mixpolicy.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fairmix;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Collects run outputs in memory, then writes them plus a content-hash
// manifest and a copy of the resolved config.
class RunOutput {
 public:
  RunOutput(fs::path dir, json config)
      : dir_(std::move(dir)), config_(std::move(config)) {}

  void add(const std::string& name, const std::string& content) {
    files_[name] = content;
  }

  void finalize() {
    fs::create_directories(dir_);
    files_["config.json"] = config_.dump(2) + "\n";
    json manifest = json::object();
    for (const auto& [name, content] : files_) {
      char hex[32];
      std::snprintf(hex, sizeof(hex), "%016llx",
                    static_cast<unsigned long long>(fnv1a64(content)));
      manifest[name] = {{"bytes", content.size()}, {"fnv1a64", hex}};
    }
    files_["manifest.json"] = manifest.dump(2) + "\n";
    for (const auto& [name, content] : files_) {
      std::ofstream out(dir_ / name, std::ios::binary);
      out << content;
    }
  }

 private:
  fs::path dir_;
  json config_;
  std::map<std::string, std::string> files_;
};

json load_config(const std::string& path,
                 const std::vector<std::string>& overrides) {
  json cfg = json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    try {
      in >> cfg;
    } catch (const json::parse_error& e) {
      throw ConfigError("config parse error in " + path + ": " + e.what());
    }
  }
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw ConfigError("--set expects KEY=VALUE, got: " + kv);
    const std::string key = kv.substr(0, eq);
    const std::string raw = kv.substr(eq + 1);
    json value;
    try {
      value = json::parse(raw);
    } catch (const json::parse_error&) {
      value = raw;  // bare strings pass through
    }
    json* node = &cfg;
    std::stringstream keys(key);
    std::string part, prev;
    std::vector<std::string> parts;
    while (std::getline(keys, part, '.')) parts.push_back(part);
    for (std::size_t i = 0; i + 1 < parts.size(); ++i)
      node = &(*node)[parts[i]];
    (*node)[parts.back()] = value;
  }
  return cfg;
}

void require_keys(const json& cfg, const std::set<std::string>& allowed,
                  const std::string& context) {
  for (const auto& [key, value] : cfg.items())
    if (!allowed.count(key))
      throw ConfigError("unknown parameter key '" + key + "' in " + context);
}

template <typename T>
T get_or(const json& cfg, const std::string& key, T fallback) {
  if (!cfg.contains(key)) return fallback;
  try {
    return cfg.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("bad value for '" + key + "': " + e.what());
  }
}

std::string csv_join(const std::vector<std::string>& cells) {
  std::string row;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) row += ",";
    row += cells[i];
  }
  return row + "\n";
}

// ---- bernoulli --------------------------------------------------------------

int cmd_bernoulli(const json& cfg, const fs::path& out_dir,
                  std::uint64_t seed_offset) {
  require_keys(cfg,
               {"p0", "p_hat0", "n", "resamples", "n_sweep", "p_hat_sweep",
                "seed"},
               "bernoulli config");
  const double p0 = get_or(cfg, "p0", 0.2);
  const double ph0 = get_or(cfg, "p_hat0", 0.5);
  const int n = get_or(cfg, "n", 6);
  const int resamples = get_or(cfg, "resamples", 1000);
  const std::vector<int> n_sweep =
      get_or(cfg, "n_sweep", std::vector<int>{6, 25, 100});
  const std::vector<double> ph_sweep =
      get_or(cfg, "p_hat_sweep", std::vector<double>{});
  const std::uint64_t seed = get_or(cfg, "seed", std::uint64_t{0}) + seed_offset;
  if (!(p0 > 0.0 && p0 < 1.0) || !(ph0 > 0.0 && ph0 < 1.0))
    throw ConfigError("p0 and p_hat0 must lie in (0, 1)");
  if (n < 1 || resamples < 1) throw ConfigError("n and resamples must be >= 1");

  const CategoricalDist p({p0, 1.0 - p0});
  const CategoricalDist p_hat({ph0, 1.0 - ph0});

  // Single-run fixture: the paper's t = [1/6, 5/6] drawn at N = 6.
  const CategoricalDist t_single({1.0 / 6.0, 5.0 / 6.0});
  const AlphaResult single = optimal_alpha(p, t_single, p_hat);

  auto sweep_stats = [&](const CategoricalDist& target,
                         const CategoricalDist& gen, int n_draws,
                         std::uint64_t stream) {
    double sum = 0.0, sum2 = 0.0;
    Rng root(seed);
    for (int r = 0; r < resamples; ++r) {
      const std::uint64_t s =
          stream * 1000003ULL + static_cast<std::uint64_t>(r) + seed * 7919ULL;
      const CategoricalDist t = sample_empirical(target, n_draws, s);
      const double a = optimal_alpha(target, t, gen).weight.alpha_gen;
      sum += a;
      sum2 += a * a;
    }
    const double mean = sum / resamples;
    const double var = std::max(0.0, sum2 / resamples - mean * mean);
    const double ci = 1.96 * std::sqrt(var / resamples);
    return std::pair<double, double>{mean, ci};
  };

  std::string csv = "param,value,mean_alpha_gen,ci95_lo,ci95_hi\n";
  std::uint64_t stream = 1;
  for (int nv : n_sweep) {
    const auto [mean, ci] = sweep_stats(p, p_hat, nv, stream++);
    csv += csv_join({"N", format_double(nv), format_double(mean),
                     format_double(mean - ci), format_double(mean + ci)});
  }
  for (double ph : ph_sweep) {
    const CategoricalDist gen({ph, 1.0 - ph});
    const auto [mean, ci] = sweep_stats(p, gen, n, stream++);
    csv += csv_join({"p_hat0", format_double(ph), format_double(mean),
                     format_double(mean - ci), format_double(mean + ci)});
  }

  json summary;
  summary["single_run"] = {{"alpha_gen", single.weight.alpha_gen},
                           {"kl", single.kl},
                           {"direction", "target_vs_mix"}};
  summary["p0"] = p0;
  summary["p_hat0"] = ph0;

  RunOutput out(out_dir, cfg);
  out.add("bernoulli_sweep.csv", csv);
  out.add("summary.json", summary.dump(2) + "\n");
  out.finalize();
  return kExitOk;
}

// ---- gmm --------------------------------------------------------------------

int cmd_gmm(const json& cfg, const fs::path& out_dir, int workers,
            std::uint64_t seed_offset) {
  require_keys(cfg,
               {"dims", "components", "n_labelled_per_class", "n_unlabelled",
                "n_generated", "seeds", "n_validation", "classifier_epochs",
                "classifier_lr", "em_max_iters", "em_tol", "em_restarts",
                "cov_scale"},
               "gmm config");
  GmmExperimentConfig ec;
  ec.dims = get_or(cfg, "dims", 2);
  ec.components = get_or(cfg, "components", 2);
  ec.n_labelled_per_class =
      get_or(cfg, "n_labelled_per_class", std::vector<int>{4});
  ec.n_unlabelled = get_or(cfg, "n_unlabelled", 10000);
  ec.n_generated = get_or(cfg, "n_generated", std::vector<int>{0, 1000});
  const auto seeds = get_or(cfg, "seeds", std::vector<std::uint64_t>{0});
  ec.seeds.clear();
  for (std::uint64_t s : seeds) ec.seeds.push_back(s + seed_offset);
  ec.n_validation = get_or(cfg, "n_validation", 2000);
  ec.classifier_epochs = get_or(cfg, "classifier_epochs", 200);
  ec.classifier_lr = get_or(cfg, "classifier_lr", 0.5);
  ec.em_max_iters = get_or(cfg, "em_max_iters", 50);
  ec.em_tol = get_or(cfg, "em_tol", 1e-5);
  ec.em_restarts = get_or(cfg, "em_restarts", 2);
  ec.cov_scale = get_or(cfg, "cov_scale", 0.1);
  ec.workers = workers;
  if (ec.dims < 1 || ec.components < 1) throw ConfigError("bad gmm geometry");

  const auto rows = run_gmm_experiment(ec);

  std::string csv = "n_labelled,n_generated,mean_acc,std_acc,n_seeds\n";
  for (const auto& r : rows)
    csv += csv_join({std::to_string(r.n_labelled), std::to_string(r.n_generated),
                     format_double(r.mean_acc), format_double(r.std_acc),
                     std::to_string(r.n_seeds)});

  json summary;
  summary["rows"] = json::array();
  for (const auto& r : rows)
    summary["rows"].push_back({{"n_labelled", r.n_labelled},
                               {"n_generated", r.n_generated},
                               {"mean_acc", r.mean_acc},
                               {"std_acc", r.std_acc}});

  RunOutput out(out_dir, cfg);
  out.add("gmm_results.csv", csv);
  out.add("summary.json", summary.dump(2) + "\n");
  out.finalize();
  return kExitOk;
}

// ---- diffusion --------------------------------------------------------------

json checkpoint_to_json(const DenoiserNet& net, const DiffusionSchedule& sched) {
  json j;
  j["data_dim"] = net.data_dim;
  j["num_classes"] = net.num_classes;
  j["num_attrs"] = net.num_attrs;
  j["T"] = sched.T;
  j["betas"] = sched.betas;
  json layers = json::array();
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    json layer;
    layer["rows"] = net.W[l].rows();
    layer["cols"] = net.W[l].cols();
    std::vector<double> w(net.W[l].data(), net.W[l].data() + net.W[l].size());
    std::vector<double> b(net.b[l].data(), net.b[l].data() + net.b[l].size());
    layer["W"] = w;
    layer["b"] = b;
    layers.push_back(layer);
  }
  j["layers"] = layers;
  return j;
}

std::pair<DenoiserNet, DiffusionSchedule> checkpoint_from_json(const json& j) {
  DenoiserNet net;
  net.data_dim = j.at("data_dim").get<int>();
  net.num_classes = j.at("num_classes").get<int>();
  net.num_attrs = j.at("num_attrs").get<int>();
  for (const auto& layer : j.at("layers")) {
    const auto rows = layer.at("rows").get<Eigen::Index>();
    const auto cols = layer.at("cols").get<Eigen::Index>();
    const auto w = layer.at("W").get<std::vector<double>>();
    const auto b = layer.at("b").get<std::vector<double>>();
    Eigen::MatrixXd W(rows, cols);
    std::copy(w.begin(), w.end(), W.data());
    net.W.push_back(std::move(W));
    net.b.push_back(Eigen::Map<const Eigen::VectorXd>(b.data(), b.size()));
  }
  const auto betas = j.at("betas").get<std::vector<double>>();
  DiffusionSchedule sched;
  sched.T = j.at("T").get<int>();
  sched.betas = betas;
  double prod = 1.0;
  for (double beta : betas) {
    prod *= 1.0 - beta;
    sched.alpha_bars.push_back(prod);
  }
  return {std::move(net), std::move(sched)};
}

int cmd_diffusion(const json& cfg, const fs::path& out_dir,
                  std::uint64_t seed_offset) {
  require_keys(cfg,
               {"mode", "data", "epochs", "lr", "drop_prob", "T", "beta_start",
                "beta_end", "hidden", "batch_size", "seed", "checkpoint",
                "label", "attr", "w", "n"},
               "diffusion config");
  const std::string mode = get_or(cfg, "mode", std::string("train"));
  const std::uint64_t seed = get_or(cfg, "seed", std::uint64_t{0}) + seed_offset;

  if (mode == "train") {
    const std::string data_path = get_or(cfg, "data", std::string());
    if (data_path.empty()) throw ConfigError("train mode requires 'data'");
    std::ifstream in(data_path);
    if (!in) throw ConfigError("cannot open data file: " + data_path);
    const Dataset d = load_jsonl(in);
    if (d.examples.empty()) throw ConfigError("empty training dataset");

    const int T = get_or(cfg, "T", 200);
    const auto sched = make_schedule(T, get_or(cfg, "beta_start", 1e-4),
                                     get_or(cfg, "beta_end", 0.02));
    const int C = d.num_classes();
    const int A = d.attribute_schemas.empty()
                      ? 0
                      : static_cast<int>(d.attribute_schemas[0].values.size());
    std::vector<DiffusionExample> train;
    for (const auto& ex : d.examples) {
      DiffusionExample de;
      de.x = Eigen::Map<const Eigen::VectorXd>(ex.features.data(),
                                               ex.features.size());
      de.cond.num_classes = C;
      de.cond.num_attrs = A;
      de.cond.label = ex.label + 1;
      de.cond.attr =
          (!ex.attrs.empty() && ex.attrs[0] != kUnknownAttr) ? ex.attrs[0] + 1 : 0;
      de.labelled = true;
      train.push_back(std::move(de));
    }

    auto net = make_denoiser(static_cast<int>(train[0].x.size()), C, A,
                             get_or(cfg, "hidden", std::vector<int>{64, 64}),
                             seed);
    const int epochs = get_or(cfg, "epochs", 50);
    const double lr = get_or(cfg, "lr", 1e-3);
    const double drop = get_or(cfg, "drop_prob", 0.1);
    const int batch = get_or(cfg, "batch_size", 64);
    NetGradients vel = zero_gradients(net);
    std::string loss_csv = "epoch,mean_loss\n";
    for (int e = 0; e < epochs; ++e) {
      const double loss =
          train_epoch(net, train, sched, lr, drop, seed + 1 + e, batch, 0.9, &vel);
      if (!std::isfinite(loss))
        throw std::runtime_error("training diverged: non-finite loss");
      loss_csv += csv_join({std::to_string(e), format_double(loss)});
    }

    RunOutput out(out_dir, cfg);
    out.add("checkpoint.json", checkpoint_to_json(net, sched).dump() + "\n");
    out.add("loss_curve.csv", loss_csv);
    out.finalize();
    return kExitOk;
  }

  if (mode == "sample") {
    const std::string ckpt_path = get_or(cfg, "checkpoint", std::string());
    if (ckpt_path.empty()) throw ConfigError("sample mode requires 'checkpoint'");
    std::ifstream in(ckpt_path);
    if (!in) throw ConfigError("missing checkpoint file: " + ckpt_path);
    json j;
    try {
      in >> j;
    } catch (const json::parse_error& e) {
      throw ConfigError("checkpoint parse error: " + std::string(e.what()));
    }
    const auto [net, sched] = checkpoint_from_json(j);

    const int n = get_or(cfg, "n", 0);
    if (n < 1) throw ConfigError("sample mode requires n >= 1");
    ConditionVector cond;
    cond.num_classes = net.num_classes;
    cond.num_attrs = net.num_attrs;
    cond.label = get_or(cfg, "label", 0) + 1;
    cond.attr = cfg.contains("attr") ? cfg.at("attr").get<int>() + 1 : 0;
    if (cond.label < 1 || cond.label > net.num_classes)
      throw ConfigError("label out of range");
    const double w = get_or(cfg, "w", 0.0);

    const auto draws = sample(net, sched, cond, w, n, seed);
    std::string csv = "label,attr,";
    for (int q = 0; q < net.data_dim; ++q)
      csv += "x" + std::to_string(q) + (q + 1 < net.data_dim ? "," : "\n");
    for (const auto& x : draws) {
      std::vector<std::string> cells = {std::to_string(cond.label - 1),
                                        std::to_string(cond.attr - 1)};
      for (int q = 0; q < net.data_dim; ++q) cells.push_back(format_double(x[q]));
      csv += csv_join(cells);
    }

    RunOutput out(out_dir, cfg);
    out.add("samples.csv", csv);
    out.finalize();
    return kExitOk;
  }

  throw ConfigError("diffusion mode must be 'train' or 'sample'");
}

// ---- analyze ----------------------------------------------------------------

EmbeddingSet load_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open embeddings file: " + path);
  EmbeddingSet set;
  set.domain_tag = fs::path(path).stem().string();
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  const bool jsonl = fs::path(path).extension() == ".jsonl";
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (jsonl) {
      json j;
      try {
        j = json::parse(line);
      } catch (const json::parse_error& e) {
        throw ConfigError("malformed row in " + path + " line " +
                          std::to_string(line_no) + ": " + e.what());
      }
      if (j.is_object()) {
        if (j.contains("domain_tag"))
          set.domain_tag = j.at("domain_tag").get<std::string>();
        continue;
      }
      rows.push_back(j.get<std::vector<double>>());
    } else {
      std::vector<double> row;
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) {
        try {
          row.push_back(std::stod(cell));
        } catch (const std::exception&) {
          throw ConfigError("malformed row in " + path + " line " +
                            std::to_string(line_no));
        }
      }
      rows.push_back(std::move(row));
    }
    if (rows.size() > 1 && rows.back().size() != rows.front().size())
      throw ConfigError("ragged row in " + path + " line " +
                        std::to_string(line_no));
  }
  if (rows.empty()) throw ConfigError("no vectors in " + path);
  set.vectors.resize(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t c = 0; c < rows[i].size(); ++c)
      set.vectors(i, c) = rows[i][c];
  return set;
}

std::vector<ScoredPrediction> load_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open predictions file: " + path);
  std::vector<ScoredPrediction> preds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.rfind("score", 0) == 0) continue;
    std::stringstream ss(line);
    std::string a, b, c;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ','))
      throw ConfigError("malformed row in " + path + " line " +
                        std::to_string(line_no));
    std::getline(ss, c, ',');
    try {
      ScoredPrediction p;
      p.score = std::stod(a);
      p.truth = std::stoi(b);
      p.subgroup = c.empty() ? 0 : std::stoi(c);
      preds.push_back(p);
    } catch (const std::exception&) {
      throw ConfigError("malformed row in " + path + " line " +
                        std::to_string(line_no));
    }
  }
  return preds;
}

int cmd_analyze(const json& cfg, const fs::path& out_dir,
                std::uint64_t seed_offset) {
  require_keys(cfg,
               {"embeddings", "predictions", "metrics", "fractions", "mmd_s",
                "mmd_n", "kernel_offset", "seed", "beta_samples"},
               "analyze config");
  const auto emb_paths = get_or(cfg, "embeddings", std::vector<std::string>{});
  const auto pred_paths = get_or(cfg, "predictions", std::vector<std::string>{});
  const auto metrics = get_or(
      cfg, "metrics", std::vector<std::string>{"mmd", "pca", "auc"});
  const auto fractions = get_or(cfg, "fractions",
                                std::vector<double>{0.6, 0.7, 0.8, 0.9, 0.95});
  const int mmd_s = get_or(cfg, "mmd_s", 30);
  const int mmd_n = get_or(cfg, "mmd_n", 300);
  const double offset = get_or(cfg, "kernel_offset", 1.0);
  const std::uint64_t seed = get_or(cfg, "seed", std::uint64_t{0}) + seed_offset;
  const std::size_t beta_samples =
      get_or(cfg, "beta_samples", std::size_t{100000});

  for (const auto& p : emb_paths)
    if (!fs::exists(p)) throw ConfigError("missing file: " + p);
  for (const auto& p : pred_paths)
    if (!fs::exists(p)) throw ConfigError("missing file: " + p);

  std::vector<EmbeddingSet> sets;
  for (const auto& p : emb_paths) sets.push_back(load_embeddings(p));

  const std::set<std::string> wanted(metrics.begin(), metrics.end());
  json report;
  std::string flat_csv = "metric,key,value\n";
  auto emit = [&](const std::string& metric, const std::string& key, double v) {
    flat_csv += csv_join({metric, key, format_double(v)});
  };

  if (wanted.count("mmd") && sets.size() >= 2) {
    json mmd_block = json::array();
    std::map<std::string, std::vector<double>> estimates;
    for (std::size_t i = 0; i < sets.size(); ++i)
      for (std::size_t j = i + 1; j < sets.size(); ++j) {
        const auto est = mmd_protocol(sets[i], sets[j], mmd_s, mmd_n,
                                      seed + i * 131 + j, offset);
        double mean = 0, var = 0;
        for (double e : est) mean += e;
        mean /= est.size();
        for (double e : est) var += (e - mean) * (e - mean);
        var /= est.size();
        const std::string key = sets[i].domain_tag + "|" + sets[j].domain_tag;
        estimates[key] = est;
        char formatted[64];
        std::snprintf(formatted, sizeof(formatted), "%.4f $\\pm$ %.4f", mean,
                      std::sqrt(var));
        mmd_block.push_back({{"pair", key},
                             {"mean", mean},
                             {"std", std::sqrt(var)},
                             {"formatted", formatted},
                             {"estimates", est}});
        emit("mmd_mean", key, mean);
        emit("mmd_std", key, std::sqrt(var));
      }
    report["mmd"] = mmd_block;

    if (wanted.count("mwu")) {
      json mwu_block = json::array();
      std::vector<std::string> keys;
      for (const auto& [k, v] : estimates) keys.push_back(k);
      for (std::size_t i = 0; i < keys.size(); ++i)
        for (std::size_t j = i + 1; j < keys.size(); ++j) {
          const auto r = mann_whitney_u(estimates[keys[i]], estimates[keys[j]]);
          mwu_block.push_back({{"pair", keys[i] + " vs " + keys[j]},
                               {"U", r.U},
                               {"p_two_sided", r.p_two_sided},
                               {"significant_95", r.p_two_sided < 0.05}});
          emit("mwu_p", keys[i] + " vs " + keys[j], r.p_two_sided);
        }
      report["mann_whitney"] = mwu_block;
    }
  }

  if (wanted.count("pca")) {
    json pca_block = json::array();
    for (const auto& s : sets) {
      json counts = json::object();
      for (double f : fractions) {
        const int m = pca_components_for_variance(s.vectors, f);
        counts[format_double(f)] = m;
        emit("pca_components", s.domain_tag + "@" + format_double(f), m);
      }
      pca_block.push_back({{"domain", s.domain_tag}, {"components", counts}});
    }
    report["pca"] = pca_block;
  }

  if ((wanted.count("auc") || wanted.count("fairness")) && !pred_paths.empty()) {
    json auc_block = json::array();
    for (std::size_t pi = 0; pi < pred_paths.size(); ++pi) {
      const auto preds = load_predictions(pred_paths[pi]);
      const std::string tag = fs::path(pred_paths[pi]).stem().string();
      json entry;
      entry["file"] = tag;
      if (wanted.count("auc")) {
        const double overall = auc(preds);
        entry["auc"] = overall;
        emit("auc", tag, overall);
      }
      if (wanted.count("fairness")) {
        std::map<int, std::vector<ScoredPrediction>> by_group;
        for (const auto& p : preds) by_group[p.subgroup].push_back(p);
        std::map<int, double> auc_per_group;
        std::map<int, std::pair<std::size_t, std::size_t>> acc_counts;
        for (const auto& [grp, v] : by_group) {
          auc_per_group[grp] = auc(v);
          std::size_t hits = 0;
          for (const auto& p : v)
            if ((p.score >= 0.5) == (p.truth == 1)) ++hits;
          acc_counts[grp] = {hits, v.size()};
        }
        if (auc_per_group.size() >= 2) {
          const double gap = subgroup_gap(auc_per_group);
          entry["auc_gap"] = gap;
          emit("auc_gap", tag, gap);
          json per_group = json::object();
          for (const auto& [grp, v] : auc_per_group)
            per_group[std::to_string(grp)] = v;
          entry["auc_per_subgroup"] = per_group;
          // Beta-posterior central best estimate: first subgroup vs the rest.
          const auto first = acc_counts.begin();
          std::size_t out_s = 0, out_t = 0;
          for (auto it = std::next(acc_counts.begin()); it != acc_counts.end();
               ++it) {
            out_s += it->second.first;
            out_t += it->second.second;
          }
          if (out_t > 0) {
            const auto beta = beta_fairness_estimate(
                first->second, {out_s, out_t}, beta_samples, seed + 17 + pi);
            entry["beta_mean_diff"] = beta.mean_diff;
            entry["beta_spread"] = beta.spread;
            emit("beta_mean_diff", tag, beta.mean_diff);
            emit("beta_spread", tag, beta.spread);
          }
        }
      }
      auc_block.push_back(entry);
    }
    report["predictions"] = auc_block;
  }

  RunOutput out(out_dir, cfg);
  out.add("report.json", report.dump(2) + "\n");
  out.add("report.csv", flat_csv);
  out.finalize();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fair data mixing toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir = "run_out";
  int workers = 1;
  std::uint64_t seed_offset = 0;
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--set", overrides, "KEY=VALUE config override (repeatable)");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--workers", workers, "worker pool size for seed grids");
  app.add_option("--seed-offset", seed_offset, "offset added to all seeds");

  auto* bernoulli = app.add_subcommand("bernoulli", "Bernoulli mixing sweeps");
  auto* gmm = app.add_subcommand("gmm", "semi-supervised GMM experiment");
  auto* diffusion = app.add_subcommand("diffusion", "train/sample the toy diffusion model");
  auto* analyze = app.add_subcommand("analyze", "distribution-shift and fairness metrics");

  CLI11_PARSE(app, argc, argv);

  try {
    const json cfg = load_config(config_path, overrides);
    if (bernoulli->parsed())
      return cmd_bernoulli(cfg, out_dir, seed_offset);
    if (gmm->parsed()) return cmd_gmm(cfg, out_dir, workers, seed_offset);
    if (diffusion->parsed()) return cmd_diffusion(cfg, out_dir, seed_offset);
    if (analyze->parsed()) return cmd_analyze(cfg, out_dir, seed_offset);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}
