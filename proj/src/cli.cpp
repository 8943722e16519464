#include "vmreg/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "vmreg/csv.hpp"
#include "vmreg/model_io.hpp"
#include "vmreg/selftest.hpp"
#include "vmreg/train.hpp"

namespace vmreg {

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

HeadKind::Tag head_tag_from(const std::string& s) {
  if (s == "fixed") return HeadKind::Tag::kFixedKappa;
  if (s == "vm") return HeadKind::Tag::kSingleVonMises;
  if (s == "mixture") return HeadKind::Tag::kFiniteMixture;
  if (s == "cvae") return HeadKind::Tag::kCvae;
  if (s == "scvae") return HeadKind::Tag::kScvae;
  throw CLI::ValidationError("--head", "expected fixed|vm|mixture|cvae|scvae, got '" + s + "'");
}

Activation activation_from(const std::string& s) {
  if (s == "tanh") return Activation::kTanh;
  if (s == "relu") return Activation::kRelu;
  if (s == "identity") return Activation::kIdentity;
  throw CLI::ValidationError("--activation", "expected tanh|relu|identity, got '" + s + "'");
}

SyntheticKind kind_from(const std::string& s) {
  if (s == "unimodal") return SyntheticKind::kUnimodal;
  if (s == "hetero" || s == "heteroscedastic") return SyntheticKind::kHeteroscedastic;
  if (s == "bimodal") return SyntheticKind::kBimodal;
  throw CLI::ValidationError("--kind", "expected unimodal|hetero|bimodal, got '" + s + "'");
}

std::uint64_t split_stream(const std::string& split) {
  if (split == "train") return 1;
  if (split == "val") return 2;
  if (split == "test") return 3;
  throw CLI::ValidationError("--split", "expected train|val|test, got '" + split + "'");
}

// Flat key=value file mirroring the training flags; '#' starts a comment.
std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    std::string::size_type hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string::size_type eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      std::string::size_type a = s.find_first_not_of(" \t\r");
      std::string::size_type b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (!key.empty() && !val.empty()) kv[key] = val;
  }
  return kv;
}

struct TrainOpts {
  std::string head = "vm";
  int k = 4;
  int latent = 8;
  int s_train = 5;
  int s_eval = 50;
  double fixed_kappa = 0.0;  // 0: fit after training
  std::string hidden = "48,48";
  std::string activation = "tanh";
  double lr = 1e-3;
  int batch = 64;
  int epochs = 500;
  int patience = 20;
  std::uint64_t seed = 1;
  std::string config_path;
};

void add_train_opts(CLI::App* cmd, TrainOpts& o) {
  cmd->add_option("--head", o.head, "Head: fixed|vm|mixture|cvae|scvae")->capture_default_str();
  cmd->add_option("--k", o.k, "Mixture components")->capture_default_str();
  cmd->add_option("--latent", o.latent, "Latent dimension (cvae/scvae)")->capture_default_str();
  cmd->add_option("--s-train", o.s_train, "Monte Carlo samples per example during training")
      ->capture_default_str();
  cmd->add_option("--s-eval", o.s_eval, "Monte Carlo samples at evaluation")->capture_default_str();
  cmd->add_option("--fixed-kappa", o.fixed_kappa,
                  "Concentration for the fixed head (0 = fit on validation)")
      ->capture_default_str();
  cmd->add_option("--hidden", o.hidden, "Hidden widths, comma separated")->capture_default_str();
  cmd->add_option("--activation", o.activation, "tanh|relu|identity")->capture_default_str();
  cmd->add_option("--lr", o.lr, "Adam learning rate")->capture_default_str();
  cmd->add_option("--batch", o.batch, "Mini-batch size")->capture_default_str();
  cmd->add_option("--epochs", o.epochs, "Maximum epochs")->capture_default_str();
  cmd->add_option("--patience", o.patience, "Early-stopping patience (epochs)")
      ->capture_default_str();
  cmd->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  cmd->add_option("--config", o.config_path, "Key=value config file (flags win)");
}

// Config-file values apply only where the command line stayed silent.
void merge_config(const CLI::App* cmd, TrainOpts& o) {
  if (o.config_path.empty()) return;
  auto kv = read_config_file(o.config_path);
  auto apply = [&](const char* flag, const char* key, auto& slot) {
    auto it = kv.find(key);
    if (it == kv.end() || cmd->count(flag) > 0) return;
    std::istringstream ss(it->second);
    ss >> slot;
    if (ss.fail()) throw std::runtime_error("config: bad value for " + std::string(key));
  };
  apply("--head", "head", o.head);
  apply("--k", "k", o.k);
  apply("--latent", "latent", o.latent);
  apply("--s-train", "s_train", o.s_train);
  apply("--s-eval", "s_eval", o.s_eval);
  apply("--fixed-kappa", "fixed_kappa", o.fixed_kappa);
  apply("--hidden", "hidden", o.hidden);
  apply("--activation", "activation", o.activation);
  apply("--lr", "lr", o.lr);
  apply("--batch", "batch", o.batch);
  apply("--epochs", "epochs", o.epochs);
  apply("--patience", "patience", o.patience);
  apply("--seed", "seed", o.seed);
}

TrainConfig to_train_config(const TrainOpts& o) {
  TrainConfig cfg;
  cfg.head.tag = head_tag_from(o.head);
  if (cfg.head.tag == HeadKind::Tag::kFixedKappa && o.fixed_kappa > 0.0) {
    cfg.head.fixed_kappa = o.fixed_kappa;
  }
  cfg.head.mixture_k = o.k;
  cfg.head.latent_dim = o.latent;
  cfg.head.s_train = o.s_train;
  cfg.head.s_eval = o.s_eval;
  cfg.hidden.clear();
  Activation act = activation_from(o.activation);
  std::stringstream ss(o.hidden);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (cell.empty()) continue;
    cfg.hidden.push_back(LayerSpec{std::stoi(cell), act});
  }
  cfg.adam.alpha = o.lr;
  cfg.batch_size = o.batch;
  cfg.max_epochs = o.epochs;
  cfg.patience = o.patience;
  cfg.seed = o.seed;
  return cfg;
}

Dataset angle_view(const Dataset& multi, std::size_t which) {
  Dataset d;
  d.x = multi.x;
  d.split = multi.split;
  d.phi.reserve(multi.triples.size());
  for (const auto& t : multi.triples) d.phi.push_back(t[which]);
  return d;
}

std::vector<double> feature_row(const Tensor& x, int i) {
  std::vector<double> row(static_cast<std::size_t>(x.cols));
  for (int j = 0; j < x.cols; ++j) row[static_cast<std::size_t>(j)] = x.at(i, j);
  return row;
}

void write_text_atomic(const std::string& path, const std::string& body) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp);
    out << body;
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw std::runtime_error("rename failed for " + path);
  }
}

// ---- subcommand bodies ----

int cmd_gen(const std::string& kind, int n, int d, std::uint64_t seed, const std::string& split,
            double kappa, const std::string& weights, bool multi, const std::string& out) {
  std::array<double, 2> w{0.6, 0.4};
  if (!weights.empty()) {
    if (std::sscanf(weights.c_str(), "%lf,%lf", &w[0], &w[1]) != 2) {
      throw std::runtime_error("--weights: expected two comma-separated numbers");
    }
  }
  auto make_spec = [&](std::uint64_t family_seed) {
    SyntheticSpec s;
    s.kind = kind_from(kind);
    s.feature_dim = d;
    s.family_seed = family_seed;
    if (kappa > 0.0) s.constant_kappa = kappa;
    s.bimodal_weights = w;
    return s;
  };
  std::uint64_t data_seed = Rng::derive(seed, split_stream(split));
  Dataset out_data;
  if (multi) {
    std::array<SyntheticTask, 3> tasks{SyntheticTask(make_spec(Rng::derive(seed, 101))),
                                       SyntheticTask(make_spec(Rng::derive(seed, 102))),
                                       SyntheticTask(make_spec(Rng::derive(seed, 103)))};
    out_data = generate_multi(tasks, n, data_seed, split);
  } else {
    out_data = SyntheticTask(make_spec(seed)).generate(n, data_seed, split);
  }
  write_dataset_csv(out_data, out);
  std::cout << "wrote " << out_data.size() << " rows to " << out << '\n';
  return 0;
}

int cmd_train(const CLI::App* cmd, TrainOpts& opts, const std::string& data_path,
              const std::string& val_path, const std::string& out) {
  merge_config(cmd, opts);
  TrainConfig cfg = to_train_config(opts);
  Dataset train_d = read_dataset_csv(data_path);
  Dataset val_d = read_dataset_csv(val_path);
  train_d.split = "train";
  val_d.split = "val";
  if (train_d.multi() != val_d.multi()) {
    throw ConfigMismatch("train: datasets disagree on single vs multi-angle targets");
  }
  if (train_d.multi()) {
    std::array<TrainedModel, 3> models;
    for (std::size_t k = 0; k < 3; ++k) {
      TrainConfig per = cfg;
      per.seed = Rng::derive(cfg.seed, 200 + k);
      models[k] = train(per, angle_view(train_d, k), angle_view(val_d, k));
      std::cout << "angle " << k << ": best val loss "
                << fmt(models[k].history[static_cast<std::size_t>(models[k].best_epoch)].val_loss)
                << " at epoch " << models[k].best_epoch << '\n';
    }
    save_multi_model(models, out);
  } else {
    TrainedModel m = train(cfg, train_d, val_d);
    std::cout << "best val loss "
              << fmt(m.history[static_cast<std::size_t>(m.best_epoch)].val_loss) << " at epoch "
              << m.best_epoch << " of " << m.history.size() << '\n';
    save_model(m, out);
  }
  std::cout << "saved model to " << out << '\n';
  return 0;
}

int cmd_eval(const std::string& model_path, const std::string& data_path, int s_eval,
             int point_samples, std::uint64_t seed, bool degrees, const std::string& out) {
  Dataset data = read_dataset_csv(data_path);
  double scale = degrees ? 180.0 / kPi : 1.0;
  const char* unit = degrees ? "deg" : "rad";
  std::ostringstream report;
  std::ostringstream js;
  js << "{\n";

  if (model_file_is_multi(model_path)) {
    if (!data.multi()) throw ConfigMismatch("eval: multi-angle model, single-angle data");
    std::array<TrainedModel, 3> models = load_multi_model(model_path);
    const char* names[3] = {"az", "el", "tilt"};
    std::vector<std::array<Angle, 3>> points(static_cast<std::size_t>(data.size()));
    double ll_total = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
      Dataset view = angle_view(data, k);
      int se = s_eval > 0 ? s_eval : models[k].model.head.s_eval;
      MeanSem ll = mean_log_likelihood(models[k].model, view.x, view.phi, se,
                                       Rng::derive(seed, 10 + k));
      ll_total += ll.mean;
      std::vector<Angle> est(view.phi.size());
      for (int i = 0; i < view.x.rows; ++i) {
        PredictiveDensity pd = predictive_density(models[k].model, feature_row(view.x, i), se,
                                                  Rng::derive(seed, 1000 + 3 * i + k));
        est[static_cast<std::size_t>(i)] =
            point_estimate(pd, point_samples, Rng::derive(seed, 5000 + 3 * i + k)).angle;
        points[static_cast<std::size_t>(i)][k] = est[static_cast<std::size_t>(i)];
      }
      MeanSem dev = maad(est, view.phi);
      report << "maad_" << names[k] << '_' << unit << ' ' << fmt(dev.mean * scale) << " sem "
             << fmt(dev.sem * scale) << '\n';
      report << "log_likelihood_" << names[k] << ' ' << fmt(ll.mean) << " sem " << fmt(ll.sem)
             << '\n';
      js << "  \"maad_" << names[k] << "_rad\": " << fmt(dev.mean) << ",\n";
      js << "  \"log_likelihood_" << names[k] << "\": " << fmt(ll.mean) << ",\n";
    }
    AccMedErr am = acc_med_err(points, data.triples);
    report << "log_likelihood_total " << fmt(ll_total) << '\n';
    report << "acc_pi6 " << fmt(am.acc_pi6) << '\n';
    report << "med_err_deg " << fmt(am.med_err_deg) << '\n';
    js << "  \"log_likelihood_total\": " << fmt(ll_total) << ",\n";
    js << "  \"acc_pi6\": " << fmt(am.acc_pi6) << ",\n";
    js << "  \"med_err_deg\": " << fmt(am.med_err_deg) << "\n}\n";
  } else {
    if (data.multi()) throw ConfigMismatch("eval: single-angle model, multi-angle data");
    TrainedModel m = load_model(model_path);
    int se = s_eval > 0 ? s_eval : m.model.head.s_eval;
    MeanSem ll = mean_log_likelihood(m.model, data.x, data.phi, se, Rng::derive(seed, 10));
    std::vector<Angle> decision(data.phi.size()), mean_est(data.phi.size());
    for (int i = 0; i < data.size(); ++i) {
      PredictiveDensity pd = predictive_density(m.model, feature_row(data.x, i), se,
                                                Rng::derive(seed, 1000 + i));
      decision[static_cast<std::size_t>(i)] =
          point_estimate(pd, point_samples, Rng::derive(seed, 5000 + i)).angle;
      mean_est[static_cast<std::size_t>(i)] = predictive_circular_mean(pd);
    }
    MeanSem dev_point = maad(decision, data.phi);
    MeanSem dev_mean = maad(mean_est, data.phi);
    report << "maad_point_" << unit << ' ' << fmt(dev_point.mean * scale) << " sem "
           << fmt(dev_point.sem * scale) << '\n';
    report << "maad_mean_" << unit << ' ' << fmt(dev_mean.mean * scale) << " sem "
           << fmt(dev_mean.sem * scale) << '\n';
    report << "mean_log_likelihood " << fmt(ll.mean) << " sem " << fmt(ll.sem) << '\n';
    js << "  \"maad_point_rad\": " << fmt(dev_point.mean) << ",\n";
    js << "  \"maad_point_sem\": " << fmt(dev_point.sem) << ",\n";
    js << "  \"maad_mean_rad\": " << fmt(dev_mean.mean) << ",\n";
    js << "  \"mean_log_likelihood\": " << fmt(ll.mean) << ",\n";
    js << "  \"mean_log_likelihood_sem\": " << fmt(ll.sem) << "\n}\n";
  }

  std::cout << report.str();
  if (!out.empty()) write_text_atomic(out, js.str());
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& data_path, int point_samples,
                int s_eval, std::uint64_t seed, bool degrees, const std::string& out) {
  Dataset data = read_dataset_csv(data_path);
  double scale = degrees ? 180.0 / kPi : 1.0;
  std::ostringstream body;
  if (model_file_is_multi(model_path)) {
    if (!data.multi()) throw ConfigMismatch("predict: multi-angle model, single-angle data");
    std::array<TrainedModel, 3> models = load_multi_model(model_path);
    body << "az_hat,el_hat,tilt_hat\n";
    for (int i = 0; i < data.size(); ++i) {
      for (std::size_t k = 0; k < 3; ++k) {
        int se = s_eval > 0 ? s_eval : models[k].model.head.s_eval;
        PredictiveDensity pd = predictive_density(models[k].model, feature_row(data.x, i), se,
                                                  Rng::derive(seed, 1000 + 3 * i + k));
        Angle a = point_estimate(pd, point_samples, Rng::derive(seed, 5000 + 3 * i + k)).angle;
        body << fmt(a.rad() * scale) << (k == 2 ? '\n' : ',');
      }
    }
  } else {
    if (data.multi()) throw ConfigMismatch("predict: single-angle model, multi-angle data");
    TrainedModel m = load_model(model_path);
    int se = s_eval > 0 ? s_eval : m.model.head.s_eval;
    body << "phi_hat,expected_loss\n";
    for (int i = 0; i < data.size(); ++i) {
      PredictiveDensity pd = predictive_density(m.model, feature_row(data.x, i), se,
                                                Rng::derive(seed, 1000 + i));
      PointEstimate pe = point_estimate(pd, point_samples, Rng::derive(seed, 5000 + i));
      body << fmt(pe.angle.rad() * scale) << ',' << fmt(pe.expected_loss * scale) << '\n';
    }
  }
  write_text_atomic(out, body.str());
  std::cout << "wrote predictions for " << data.size() << " rows to " << out << '\n';
  return 0;
}

int cmd_sample(const std::string& model_path, const std::string& data_path, int n_per_row,
               int s_eval, std::uint64_t seed, const std::string& out) {
  if (model_file_is_multi(model_path)) {
    throw ConfigMismatch("sample: multi-angle bundles are not supported; sample per-angle models");
  }
  Dataset data = read_dataset_csv(data_path);
  if (data.multi()) throw ConfigMismatch("sample: expected single-angle data");
  TrainedModel m = load_model(model_path);
  int se = s_eval > 0 ? s_eval : m.model.head.s_eval;
  std::ostringstream body;
  body << "row,phi\n";
  for (int i = 0; i < data.size(); ++i) {
    PredictiveDensity pd = predictive_density(m.model, feature_row(data.x, i), se,
                                              Rng::derive(seed, 1000 + i));
    for (Angle a : pd.sample(static_cast<std::size_t>(n_per_row), Rng::derive(seed, 5000 + i))) {
      body << i << ',' << fmt(a.rad()) << '\n';
    }
  }
  write_text_atomic(out, body.str());
  std::cout << "wrote " << data.size() * n_per_row << " samples to " << out << '\n';
  return 0;
}

int cmd_density(const std::string& model_path, const std::string& data_path, int row, int s_eval,
                std::uint64_t seed, const std::string& out) {
  if (model_file_is_multi(model_path)) {
    throw ConfigMismatch("density: multi-angle bundles are not supported; export per-angle models");
  }
  Dataset data = read_dataset_csv(data_path);
  if (data.multi()) throw ConfigMismatch("density: expected single-angle data");
  if (row < 0 || row >= data.size()) throw std::runtime_error("density: --row out of range");
  TrainedModel m = load_model(model_path);
  int se = s_eval > 0 ? s_eval : m.model.head.s_eval;
  PredictiveDensity pd = predictive_density(m.model, feature_row(data.x, row), se,
                                            Rng::derive(seed, 1000 + row));
  std::ostringstream body;
  body << "phi,log_density\n";
  const int grid = 512;
  for (int i = 0; i < grid; ++i) {
    double phi = kTwoPi * i / grid;
    body << fmt(phi) << ',' << fmt(pd.log_pdf(Angle(phi))) << '\n';
  }
  write_text_atomic(out, body.str());
  std::cout << "wrote density curve for row " << row << " to " << out << '\n';
  return 0;
}

int cmd_search(const CLI::App* cmd, TrainOpts& opts, const std::string& data_path,
               const std::string& val_path, int budget, double lr_lo, double lr_hi,
               const std::string& out, const std::string& leaderboard_path) {
  merge_config(cmd, opts);
  TrainConfig base = to_train_config(opts);
  Dataset train_d = read_dataset_csv(data_path);
  Dataset val_d = read_dataset_csv(val_path);
  if (train_d.multi() || val_d.multi()) {
    throw ConfigMismatch("search: expected single-angle datasets");
  }
  SearchSpace space;
  space.lr_lo = lr_lo;
  space.lr_hi = lr_hi;
  space.max_epochs = base.max_epochs;
  space.patience = base.patience;
  SearchResult res = random_search(base.head, space, budget, train_d, val_d, opts.seed);

  std::cout << "trials " << budget << ", finished " << res.leaderboard.size() << ", diverged "
            << res.diverged.size() << '\n';
  std::cout << "best val loss " << fmt(res.leaderboard.front().val_loss) << '\n';
  save_model(res.best, out);
  std::cout << "saved best model to " << out << '\n';

  if (!leaderboard_path.empty()) {
    std::ostringstream body;
    body << "rank,val_loss,lr,batch,width,depth,activation,diverged\n";
    int rank = 1;
    auto dump_entry = [&](const SearchEntry& e, bool diverged) {
      const char* act = e.config.hidden[0].act == Activation::kTanh
                            ? "tanh"
                            : (e.config.hidden[0].act == Activation::kRelu ? "relu" : "identity");
      body << rank++ << ',' << (diverged ? "" : fmt(e.val_loss).c_str()) << ','
           << fmt(e.config.adam.alpha) << ',' << e.config.batch_size << ','
           << e.config.hidden[0].width << ',' << e.config.hidden.size() << ',' << act << ','
           << (diverged ? 1 : 0) << '\n';
    };
    for (const SearchEntry& e : res.leaderboard) dump_entry(e, false);
    for (const SearchEntry& e : res.diverged) dump_entry(e, true);
    write_text_atomic(leaderboard_path, body.str());
    std::cout << "wrote leaderboard to " << leaderboard_path << '\n';
  }
  return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"vmreg: probabilistic circular regression with von Mises predictive densities"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset CSV");
  std::string g_kind = "hetero", g_split = "train", g_weights, g_out;
  int g_n = 1000, g_d = 8;
  std::uint64_t g_seed = 1;
  double g_kappa = 0.0;
  bool g_multi = false;
  gen->add_option("--kind", g_kind, "unimodal|hetero|bimodal")->capture_default_str();
  gen->add_option("--n", g_n, "Rows to generate")->capture_default_str();
  gen->add_option("--d", g_d, "Feature dimension")->capture_default_str();
  gen->add_option("--seed", g_seed, "Family + data seed")->capture_default_str();
  gen->add_option("--split", g_split, "train|val|test (independent draws per split)")
      ->capture_default_str();
  gen->add_option("--kappa", g_kappa, "Constant concentration (0 = use the smooth link)")
      ->capture_default_str();
  gen->add_option("--weights", g_weights, "Bimodal weights, e.g. 0.6,0.4");
  gen->add_flag("--multi", g_multi, "Three-angle targets (az, el, tilt)");
  gen->add_option("--out", g_out, "Output CSV path")->required();

  // train
  auto* tr = app.add_subcommand("train", "Train a head on a dataset");
  TrainOpts t_opts;
  std::string t_data, t_val, t_out;
  tr->add_option("--data", t_data, "Training CSV")->required();
  tr->add_option("--val", t_val, "Validation CSV")->required();
  tr->add_option("--out", t_out, "Model output path")->required();
  add_train_opts(tr, t_opts);

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate a trained model");
  std::string e_model, e_data, e_out;
  int e_seval = 0, e_points = 200;
  std::uint64_t e_seed = 1;
  bool e_degrees = false;
  ev->add_option("--model", e_model, "Model file")->required();
  ev->add_option("--data", e_data, "Dataset CSV")->required();
  ev->add_option("--s-eval", e_seval, "Override Monte Carlo sample count (0 = model default)")
      ->capture_default_str();
  ev->add_option("--point-samples", e_points, "Samples for the decision-rule estimate")
      ->capture_default_str();
  ev->add_option("--seed", e_seed, "Random seed")->capture_default_str();
  ev->add_flag("--degrees", e_degrees, "Report angular metrics in degrees");
  ev->add_option("--out", e_out, "Optional JSON metrics path");

  // predict
  auto* pr = app.add_subcommand("predict", "Decision-rule point estimates per row");
  std::string p_model, p_data, p_out;
  int p_points = 200, p_seval = 0;
  std::uint64_t p_seed = 1;
  bool p_degrees = false;
  pr->add_option("--model", p_model, "Model file")->required();
  pr->add_option("--data", p_data, "Dataset CSV")->required();
  pr->add_option("--out", p_out, "Output CSV path")->required();
  pr->add_option("--point-samples", p_points, "Samples for the decision rule")
      ->capture_default_str();
  pr->add_option("--s-eval", p_seval, "Override Monte Carlo sample count")->capture_default_str();
  pr->add_option("--seed", p_seed, "Random seed")->capture_default_str();
  pr->add_flag("--degrees", p_degrees, "Write angles in degrees");

  // sample
  auto* sa = app.add_subcommand("sample", "Draw samples from the predictive density per row");
  std::string s_model, s_data, s_out;
  int s_n = 1, s_seval = 0;
  std::uint64_t s_seed = 1;
  sa->add_option("--model", s_model, "Model file")->required();
  sa->add_option("--data", s_data, "Dataset CSV")->required();
  sa->add_option("--out", s_out, "Output CSV path")->required();
  sa->add_option("--n", s_n, "Samples per row")->capture_default_str();
  sa->add_option("--s-eval", s_seval, "Override Monte Carlo sample count")->capture_default_str();
  sa->add_option("--seed", s_seed, "Random seed")->capture_default_str();

  // density
  auto* de = app.add_subcommand("density", "Export a 512-point log-density curve for one row");
  std::string d_model, d_data, d_out;
  int d_row = 0, d_seval = 0;
  std::uint64_t d_seed = 1;
  de->add_option("--model", d_model, "Model file")->required();
  de->add_option("--data", d_data, "Dataset CSV")->required();
  de->add_option("--out", d_out, "Output CSV path")->required();
  de->add_option("--row", d_row, "Dataset row index")->capture_default_str();
  de->add_option("--s-eval", d_seval, "Override Monte Carlo sample count")->capture_default_str();
  de->add_option("--seed", d_seed, "Random seed")->capture_default_str();

  // search
  auto* se = app.add_subcommand("search", "Random hyperparameter search");
  TrainOpts se_opts;
  se_opts.epochs = 150;
  se_opts.patience = 10;
  std::string se_data, se_val, se_out, se_lb;
  int se_budget = 10;
  double se_lr_lo = 1e-4, se_lr_hi = 1e-2;
  se->add_option("--data", se_data, "Training CSV")->required();
  se->add_option("--val", se_val, "Validation CSV")->required();
  se->add_option("--out", se_out, "Best model output path")->required();
  se->add_option("--budget", se_budget, "Number of trials")->capture_default_str();
  se->add_option("--lr-lo", se_lr_lo, "Learning-rate range, low end")->capture_default_str();
  se->add_option("--lr-hi", se_lr_hi, "Learning-rate range, high end")->capture_default_str();
  se->add_option("--leaderboard", se_lb, "Optional leaderboard CSV path");
  add_train_opts(se, se_opts);

  // selftest
  auto* st = app.add_subcommand("selftest", "Run the built-in invariant suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (gen->parsed()) {
      return cmd_gen(g_kind, g_n, g_d, g_seed, g_split, g_kappa, g_weights, g_multi, g_out);
    }
    if (tr->parsed()) return cmd_train(tr, t_opts, t_data, t_val, t_out);
    if (ev->parsed()) {
      return cmd_eval(e_model, e_data, e_seval, e_points, e_seed, e_degrees, e_out);
    }
    if (pr->parsed()) {
      return cmd_predict(p_model, p_data, p_points, p_seval, p_seed, p_degrees, p_out);
    }
    if (sa->parsed()) return cmd_sample(s_model, s_data, s_n, s_seval, s_seed, s_out);
    if (de->parsed()) return cmd_density(d_model, d_data, d_row, d_seval, d_seed, d_out);
    if (se->parsed()) {
      return cmd_search(se, se_opts, se_data, se_val, se_budget, se_lr_lo, se_lr_hi, se_out, se_lb);
    }
    if (st->parsed()) return run_selftest(std::cout) == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace vmreg
