// Command-line front end: synthetic benchmark runs, estimation on CSV
// datasets, directed-information graphs, and parameter sweeps.
//
// Configuration comes from an optional JSON file (--config) with flag
// overrides on top; flags always win. Reports embed the fully resolved
// configuration and SHA-256 hashes of any file inputs. Wall-clock timing is
// written to a separate *_timing.json sidecar so the main reports are
// byte-identical across --threads settings for a fixed master seed.

#include <algorithm>
#include <array>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cmiknn/classifier.hpp"
#include "cmiknn/dataset.hpp"
#include "cmiknn/dinfo.hpp"
#include "cmiknn/estimator.hpp"
#include "cmiknn/gaussian_chain.hpp"
#include "cmiknn/report.hpp"
#include "cmiknn/resample.hpp"
#include "cmiknn/stats.hpp"
#include "cmiknn/theory.hpp"
#include "cmiknn/util.hpp"

namespace {

using cmiknn::Rng;
using nlohmann::ordered_json;

struct RunConfig {
  // generative model
  double sigma_x = 10.0, sigma_y = 1.0, sigma_z = 5.0;
  int d = 3;
  double rho = 0.0;
  std::string x_map = "identity";     // identity | tanh:A | affine:A,B
  std::string target = "xy_given_z";  // xy_given_z | xz_given_y
  std::size_t n = 80000;
  // schedule
  std::string schedule_mode = "fixed_k";  // fixed_k | theory
  std::size_t k = 2;
  double epsilon_0 = 0.1;
  std::size_t b = 0;  // joint-batch target; 0 = full split
  double train_fraction = 0.5;
  std::string index_kind = "kdtree";  // kdtree | brute
  // network
  std::vector<int> hidden = {64, 64};
  double tau = 1e-3;
  int epochs = 200;
  int minibatch = 128;
  double learning_rate = 1e-3;
  std::string lr_schedule = "exponential";
  double lr_decay = 0.97;
  // run
  int trials = 5;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out_dir;
  std::string name = "run";
  std::string estimators = "dv,nwj,ldr";  // subset of dv,nwj,ldr,midiff
  bool save_data = false;
  bool diagnostics = false;
  double gamma_d = 0.0;  // 0 = dimension default
  // estimate
  std::string data_path;
  int dx = -1, dy = -1, dz = -1;  // optional declared dims for validation
  // digraph / time series
  std::string nodes = "";  // comma-separated, exactly 3
  int lag = 5;
  bool standardize = true;
  std::string di_estimator = "dv";
  // bench
  std::string n_grid, k_grid, d_grid;  // comma-separated value lists
  bool utest = false;
};

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : csv) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

template <typename T>
std::vector<T> parse_numeric_list(const std::string& csv, const char* what) {
  std::vector<T> out;
  for (const auto& tok : split_list(csv)) {
    try {
      if constexpr (std::is_integral_v<T>)
        out.push_back(static_cast<T>(std::stoull(tok)));
      else
        out.push_back(static_cast<T>(std::stod(tok)));
    } catch (const std::exception&) {
      throw std::runtime_error(std::string("cannot parse ") + what +
                               " entry '" + tok + "'");
    }
  }
  return out;
}

// conservative cone-covering default; exact values are model inputs, so any
// upper bound only loosens the diagnostic
double default_gamma_d(int d) {
  if (d <= 1) return 2.0;
  const double per_dim = 1.0 + 2.0 / std::sin(3.14159265358979323846 / 12.0);
  return std::ceil(std::pow(per_dim, d));
}

void load_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  nlohmann::json doc = nlohmann::json::parse(in);
  if (doc.contains("version") && doc["version"].get<int>() != 1)
    throw std::runtime_error("unsupported config version in " + path);

  auto get = [&](const char* key, auto& field) {
    if (doc.contains(key)) field = doc[key].get<std::decay_t<decltype(field)>>();
  };
  get("sigma_x", cfg.sigma_x);
  get("sigma_y", cfg.sigma_y);
  get("sigma_z", cfg.sigma_z);
  get("d", cfg.d);
  get("rho", cfg.rho);
  get("x_map", cfg.x_map);
  get("target", cfg.target);
  get("n", cfg.n);
  get("schedule_mode", cfg.schedule_mode);
  get("k", cfg.k);
  get("epsilon_0", cfg.epsilon_0);
  get("b", cfg.b);
  get("train_fraction", cfg.train_fraction);
  get("index_kind", cfg.index_kind);
  get("hidden", cfg.hidden);
  get("tau", cfg.tau);
  get("epochs", cfg.epochs);
  get("minibatch", cfg.minibatch);
  get("learning_rate", cfg.learning_rate);
  get("lr_schedule", cfg.lr_schedule);
  get("lr_decay", cfg.lr_decay);
  get("trials", cfg.trials);
  get("seed", cfg.seed);
  get("threads", cfg.threads);
  get("out_dir", cfg.out_dir);
  get("name", cfg.name);
  get("estimators", cfg.estimators);
  get("save_data", cfg.save_data);
  get("diagnostics", cfg.diagnostics);
  get("gamma_d", cfg.gamma_d);
  get("data", cfg.data_path);
  get("dx", cfg.dx);
  get("dy", cfg.dy);
  get("dz", cfg.dz);
  get("nodes", cfg.nodes);
  get("lag", cfg.lag);
  get("standardize", cfg.standardize);
  get("di_estimator", cfg.di_estimator);
  get("n_grid", cfg.n_grid);
  get("k_grid", cfg.k_grid);
  get("d_grid", cfg.d_grid);
  get("utest", cfg.utest);
}

cmiknn::NetConfig make_net(const RunConfig& cfg) {
  cmiknn::NetConfig net;
  net.hidden = cfg.hidden;
  net.tau = cfg.tau;
  net.epochs = cfg.epochs;
  net.minibatch_size = cfg.minibatch;
  net.optimizer.learning_rate = cfg.learning_rate;
  if (cfg.lr_schedule == "exponential")
    net.optimizer.schedule = cmiknn::LrSchedule::exponential;
  else if (cfg.lr_schedule == "cosine")
    net.optimizer.schedule = cmiknn::LrSchedule::cosine;
  else if (cfg.lr_schedule == "constant")
    net.optimizer.schedule = cmiknn::LrSchedule::constant;
  else
    throw std::invalid_argument(
        "lr_schedule must be exponential, cosine, or constant");
  net.optimizer.epoch_decay = cfg.lr_decay;
  net.input_dim = 1;  // placeholder; resolved per run
  return net;
}

cmiknn::Algorithm1Params make_alg_params(const RunConfig& cfg) {
  cmiknn::Algorithm1Params p;
  p.trials = cfg.trials;
  p.train_fraction = cfg.train_fraction;
  if (cfg.schedule_mode == "theory")
    p.mode = cmiknn::ScheduleMode::theory;
  else if (cfg.schedule_mode == "fixed_k")
    p.mode = cmiknn::ScheduleMode::fixed_k;
  else
    throw std::runtime_error("schedule_mode must be fixed_k or theory");
  p.k = cfg.k;
  p.epsilon_0 = cfg.epsilon_0;
  p.b_target = cfg.b;
  if (cfg.index_kind == "brute")
    p.index_kind = cmiknn::IndexKind::brute;
  else if (cfg.index_kind == "kdtree")
    p.index_kind = cmiknn::IndexKind::kdtree;
  else
    throw std::runtime_error("index_kind must be kdtree or brute");
  p.threads = cfg.threads;
  return p;
}

// Full resolved configuration for report embedding. Thread count is an
// execution detail with no effect on results and is deliberately left out so
// reports from different --threads runs stay identical.
ordered_json config_echo(const RunConfig& cfg, const std::string& command) {
  ordered_json doc;
  doc["command"] = command;
  doc["seed"] = cfg.seed;
  if (command == "synth" || command == "bench") {
    doc["model"] = {{"sigma_x", cfg.sigma_x}, {"sigma_y", cfg.sigma_y},
                    {"sigma_z", cfg.sigma_z}, {"d", cfg.d},
                    {"rho", cfg.rho},         {"x_map", cfg.x_map},
                    {"target", cfg.target},   {"n", cfg.n}};
  }
  doc["schedule"] = {{"mode", cfg.schedule_mode},
                     {"k", cfg.k},
                     {"epsilon_0", cfg.epsilon_0},
                     {"b", cfg.b},
                     {"train_fraction", cfg.train_fraction},
                     {"index_kind", cfg.index_kind}};
  doc["net"] = {{"hidden", cfg.hidden},
                {"tau", cfg.tau},
                {"epochs", cfg.epochs},
                {"minibatch", cfg.minibatch},
                {"learning_rate", cfg.learning_rate},
                {"lr_schedule", cfg.lr_schedule},
                {"lr_decay", cfg.lr_decay}};
  doc["trials"] = cfg.trials;
  doc["estimators"] = cfg.estimators;
  if (command == "estimate") doc["data"] = cfg.data_path;
  if (command == "digraph") {
    doc["data"] = cfg.data_path;
    doc["nodes"] = cfg.nodes;
    doc["lag"] = cfg.lag;
    doc["standardize"] = cfg.standardize;
    doc["di_estimator"] = cfg.di_estimator;
  }
  if (command == "bench") {
    doc["grids"] = {{"n", cfg.n_grid.empty() ? std::to_string(cfg.n) : cfg.n_grid},
                    {"k", cfg.k_grid.empty() ? std::to_string(cfg.k) : cfg.k_grid},
                    {"d", cfg.d_grid.empty() ? std::to_string(cfg.d) : cfg.d_grid}};
    doc["utest"] = cfg.utest;
  }
  return doc;
}

std::filesystem::path out_path(const RunConfig& cfg, const std::string& file) {
  std::filesystem::path dir = cfg.out_dir.empty() ? "." : cfg.out_dir;
  std::filesystem::create_directories(dir);
  return dir / file;
}

ordered_json input_hashes(const std::vector<std::string>& paths) {
  ordered_json inputs = ordered_json::object();
  for (const auto& p : paths)
    inputs[p] = cmiknn::sha256_file_hex(p);
  return inputs;
}

struct SynthData {
  cmiknn::Dataset dataset;
  std::optional<double> truth;
};

SynthData make_synth_dataset(const RunConfig& cfg, std::uint64_t seed) {
  cmiknn::GaussianChainConfig model;
  model.sigma_x = cfg.sigma_x;
  model.sigma_y = cfg.sigma_y;
  model.sigma_z = cfg.sigma_z;
  model.dim = cfg.d;
  model.rho = cfg.rho;
  model.validate();

  cmiknn::Dataset ds = cmiknn::sample_gaussian_chain(model, cfg.n, seed);
  const cmiknn::ComponentMap map = cmiknn::ComponentMap::parse(cfg.x_map);
  if (map.descriptor() != "identity")
    ds = cmiknn::apply_componentwise(ds, cmiknn::Role::X, map);

  std::optional<double> truth;
  if (cfg.target == "xy_given_z") {
    // componentwise invertible maps leave the value unchanged
    if (cfg.rho == 0.0) truth = cmiknn::true_cmi_xy_given_z(model);
  } else if (cfg.target == "xz_given_y") {
    // conditional independence across the chain: exactly zero for any rho
    truth = cmiknn::true_cmi_xz_given_y(model);
    const std::vector<cmiknn::RoleSlice> xs = {{cmiknn::Role::X, 0, model.dim}};
    const std::vector<cmiknn::RoleSlice> zs = {{cmiknn::Role::Z, 0, model.dim}};
    const std::vector<cmiknn::RoleSlice> ys = {{cmiknn::Role::Y, 0, model.dim}};
    ds = cmiknn::recompose(ds, xs, zs, ys);
  } else {
    throw std::runtime_error("target must be xy_given_z or xz_given_y");
  }
  return {std::move(ds), truth};
}

void print_summary_row(const std::string& label, const cmiknn::SummaryStats& s,
                       const std::optional<double>& truth) {
  std::printf("  %-10s mean %+9.4f   min %+9.4f   max %+9.4f   sd %8.4f",
              label.c_str(), s.mean, s.min, s.max, s.stddev);
  if (truth)
    std::printf("   truth %+9.4f", *truth);
  std::printf("\n");
}

void emit_diagnostics_csv(const RunConfig& cfg,
                          const cmiknn::EstimateReport& report,
                          const std::filesystem::path& path) {
  cmiknn::BoundParams params =
      cmiknn::bound_params_from_schedule(report.schedule);
  params.tau = report.net.tau;
  params.d = report.dims.x;
  params.gamma_d = cfg.gamma_d > 0.0 ? cfg.gamma_d
                                     : default_gamma_d(report.dims.x);
  // network diagnostics averaged over trials; the parameter count follows
  // from the layer shapes
  double norm_k = 0.0, lip_b = 0.0;
  for (const auto& t : report.trials) {
    norm_k += t.classifier_norm;
    lip_b += t.classifier_lipschitz;
  }
  norm_k /= static_cast<double>(report.trials.size());
  lip_b /= static_cast<double>(report.trials.size());
  params.norm_k = norm_k;
  params.lipschitz_b = lip_b;
  std::size_t h = 0;
  int prev = report.net.input_dim;
  for (int w : report.net.hidden) {
    h += static_cast<std::size_t>(prev) * w + w;
    prev = w;
  }
  h += static_cast<std::size_t>(prev) + 1;
  params.param_count_h = h;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "bound,eps,log_value,value_clipped\n";
  const std::array<double, 3> eps_list = {0.05, 0.1, 0.2};
  for (int i = 2; i <= 7; ++i) {
    for (double eps : eps_list) {
      const double lg = cmiknn::log_delta_chain(i, eps, params);
      const double clipped = std::min(1.0, std::exp(lg));
      out << "delta" << i << ',' << cmiknn::format_double(eps) << ','
          << cmiknn::format_double(lg) << ',' << cmiknn::format_double(clipped)
          << '\n';
    }
  }
  out << "gamma_d," << cmiknn::format_double(params.gamma_d) << ",,\n";
}

struct EstimatorSelection {
  bool dv = false, nwj = false, ldr = false, midiff = false;
};

EstimatorSelection parse_estimators(const std::string& csv) {
  EstimatorSelection sel;
  for (const auto& tok : split_list(csv)) {
    if (tok == "dv") sel.dv = true;
    else if (tok == "nwj") sel.nwj = true;
    else if (tok == "ldr") sel.ldr = true;
    else if (tok == "midiff") sel.midiff = true;
    else throw std::runtime_error("unknown estimator '" + tok + "'");
  }
  if (!sel.dv && !sel.nwj && !sel.ldr && !sel.midiff)
    throw std::runtime_error("no estimators selected");
  return sel;
}

int cmd_synth(const RunConfig& cfg) {
  const EstimatorSelection sel = parse_estimators(cfg.estimators);
  Rng master(cfg.seed);
  SynthData data = make_synth_dataset(cfg, master.fork(1).next_u64());

  if (cfg.save_data)
    cmiknn::write_dataset_csv(data.dataset,
                              out_path(cfg, cfg.name + "_data.csv").string());

  const ordered_json echo = config_echo(cfg, "synth");
  int failures = 0;

  if (sel.dv || sel.nwj || sel.ldr) {
    const cmiknn::EstimateReport report = cmiknn::run_algorithm1(
        data.dataset, make_alg_params(cfg), make_net(cfg),
        master.fork(2).next_u64());
    ordered_json doc = cmiknn::report_to_json(report);
    doc["run_config"] = echo;
    doc["inputs"] = ordered_json::object();
    if (data.truth) doc["truth"] = *data.truth;
    cmiknn::write_json(doc, out_path(cfg, cfg.name + "_report.json").string());
    cmiknn::write_report_csv(
        report, out_path(cfg, cfg.name + "_report.csv").string());
    cmiknn::write_json(cmiknn::timing_to_json(report.seconds),
                       out_path(cfg, cfg.name + "_timing.json").string());
    if (cfg.diagnostics)
      emit_diagnostics_csv(cfg, report,
                           out_path(cfg, cfg.name + "_diagnostics.csv"));

    std::printf("synth '%s': n=%zu d=%d  (b=%zu b'=%zu k=%zu m=%zu)\n",
                cfg.name.c_str(), data.dataset.size(), data.dataset.dims().x,
                report.schedule.b, report.schedule.b_prime, report.schedule.k,
                report.schedule.m);
    if (sel.dv) print_summary_row("dv", report.dv, data.truth);
    if (sel.nwj) print_summary_row("nwj", report.nwj, data.truth);
    if (sel.ldr) print_summary_row("ldr", report.ldr, data.truth);
  }

  if (sel.midiff) {
    cmiknn::MidiffParams mp;
    mp.trials = cfg.trials;
    mp.train_fraction = cfg.train_fraction;
    mp.b = cfg.b;
    mp.threads = cfg.threads;
    const cmiknn::MidiffReport report = cmiknn::run_midiff(
        data.dataset, mp, make_net(cfg), master.fork(3).next_u64());
    ordered_json doc = cmiknn::report_to_json(report);
    doc["run_config"] = echo;
    doc["inputs"] = ordered_json::object();
    if (data.truth) doc["truth"] = *data.truth;
    cmiknn::write_json(doc,
                       out_path(cfg, cfg.name + "_midiff_report.json").string());
    cmiknn::write_report_csv(
        report, out_path(cfg, cfg.name + "_midiff_report.csv").string());
    cmiknn::write_json(
        cmiknn::timing_to_json(report.seconds),
        out_path(cfg, cfg.name + "_midiff_timing.json").string());
    print_summary_row("midiff-dv", report.dv_diff, data.truth);
    print_summary_row("midiff-nwj", report.nwj_diff, data.truth);
  }
  return failures == 0 ? 0 : 1;
}

int cmd_estimate(const RunConfig& cfg) {
  if (cfg.data_path.empty())
    throw std::runtime_error("estimate: --data CSV path is required");
  cmiknn::Dataset ds = cmiknn::read_dataset_csv(cfg.data_path);
  const cmiknn::RoleDims dims = ds.dims();
  auto check_dim = [&](int declared, int actual, const char* role) {
    if (declared >= 0 && declared != actual)
      throw std::runtime_error(std::string("estimate: declared ") + role +
                               " dimension " + std::to_string(declared) +
                               " does not match CSV (" +
                               std::to_string(actual) + ")");
  };
  check_dim(cfg.dx, dims.x, "x");
  check_dim(cfg.dy, dims.y, "y");
  check_dim(cfg.dz, dims.z, "z");

  Rng master(cfg.seed);
  const cmiknn::EstimateReport report = cmiknn::run_algorithm1(
      ds, make_alg_params(cfg), make_net(cfg), master.fork(2).next_u64());

  ordered_json doc = cmiknn::report_to_json(report);
  doc["run_config"] = config_echo(cfg, "estimate");
  doc["inputs"] = input_hashes({cfg.data_path});
  cmiknn::write_json(doc, out_path(cfg, cfg.name + "_report.json").string());
  cmiknn::write_report_csv(report,
                           out_path(cfg, cfg.name + "_report.csv").string());
  cmiknn::write_json(cmiknn::timing_to_json(report.seconds),
                     out_path(cfg, cfg.name + "_timing.json").string());
  if (cfg.diagnostics)
    emit_diagnostics_csv(cfg, report,
                         out_path(cfg, cfg.name + "_diagnostics.csv"));

  std::printf("estimate '%s': n=%zu dims=(%d,%d,%d)\n", cfg.name.c_str(),
              ds.size(), dims.x, dims.y, dims.z);
  const EstimatorSelection sel = parse_estimators(cfg.estimators);
  if (sel.dv) print_summary_row("dv", report.dv, std::nullopt);
  if (sel.nwj) print_summary_row("nwj", report.nwj, std::nullopt);
  if (sel.ldr) print_summary_row("ldr", report.ldr, std::nullopt);
  return 0;
}

int cmd_digraph(const RunConfig& cfg) {
  if (cfg.data_path.empty())
    throw std::runtime_error("digraph: --data CSV path is required");
  const auto node_list = split_list(cfg.nodes);
  if (node_list.size() != 3)
    throw std::runtime_error("digraph: exactly three --nodes are required");

  cmiknn::IngestReport ingest;
  const cmiknn::TimeSeriesTable table = cmiknn::ingest_csv(
      cfg.data_path, node_list, cmiknn::DropPolicy::drop_row, &ingest);

  cmiknn::DIParams params;
  params.l = cfg.lag;
  params.standardize = cfg.standardize;
  if (cfg.di_estimator == "dv") params.estimator = cmiknn::EstimatorKind::dv;
  else if (cfg.di_estimator == "nwj") params.estimator = cmiknn::EstimatorKind::nwj;
  else if (cfg.di_estimator == "ldr") params.estimator = cmiknn::EstimatorKind::ldr;
  else throw std::runtime_error("di_estimator must be dv, nwj, or ldr");
  params.algorithm = make_alg_params(cfg);

  const std::array<std::string, 3> names = {node_list[0], node_list[1],
                                            node_list[2]};
  const cmiknn::DIGraph graph =
      cmiknn::build_digraph(table, names, params, make_net(cfg), cfg.seed);

  ordered_json doc = cmiknn::digraph_to_json(graph);
  doc["run_config"] = config_echo(cfg, "digraph");
  doc["inputs"] = input_hashes({cfg.data_path});
  doc["ingest"] = {{"rows_read", ingest.rows_read},
                   {"rows_dropped", ingest.rows_dropped}};
  cmiknn::write_json(doc, out_path(cfg, cfg.name + "_digraph.json").string());
  cmiknn::write_digraph_csv(graph,
                            out_path(cfg, cfg.name + "_digraph.csv").string());

  std::printf("digraph '%s': T=%zu (dropped %zu)\n", cfg.name.c_str(),
              table.length(), ingest.rows_dropped);
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 3; ++b)
      if (a != b)
        std::printf("  %s -> %s : %+8.4f\n", graph.nodes[a].c_str(),
                    graph.nodes[b].c_str(), graph.weights[a][b]);
  return 0;
}

int cmd_bench(const RunConfig& cfg) {
  const EstimatorSelection sel = parse_estimators(cfg.estimators);
  const auto ns = cfg.n_grid.empty()
                      ? std::vector<std::size_t>{cfg.n}
                      : parse_numeric_list<std::size_t>(cfg.n_grid, "n_grid");
  const auto ks = cfg.k_grid.empty()
                      ? std::vector<std::size_t>{cfg.k}
                      : parse_numeric_list<std::size_t>(cfg.k_grid, "k_grid");
  const auto ds = cfg.d_grid.empty()
                      ? std::vector<int>{cfg.d}
                      : parse_numeric_list<int>(cfg.d_grid, "d_grid");
  if (ns.empty() || ks.empty() || ds.empty())
    throw std::runtime_error("bench: empty grid");

  std::ofstream agg(out_path(cfg, cfg.name + "_bench.csv"),
                    std::ios::binary);
  agg << "cell,n,k,d,trial,estimator,value\n";
  ordered_json summary = ordered_json::array();
  Rng master(cfg.seed);
  int failures = 0;
  std::size_t cell = 0;

  for (std::size_t n : ns) {
    for (std::size_t k : ks) {
      for (int d : ds) {
        RunConfig cell_cfg = cfg;
        cell_cfg.n = n;
        cell_cfg.k = k;
        cell_cfg.d = d;
        const std::uint64_t cell_seed = master.fork(100 + cell).next_u64();
        ordered_json entry = {{"cell", cell}, {"n", n}, {"k", k}, {"d", d}};
        try {
          Rng cell_rng(cell_seed);
          SynthData data =
              make_synth_dataset(cell_cfg, cell_rng.fork(1).next_u64());
          std::vector<double> alg_dv, midiff_dv;

          if (sel.dv || sel.nwj || sel.ldr) {
            const cmiknn::EstimateReport report = cmiknn::run_algorithm1(
                data.dataset, make_alg_params(cell_cfg), make_net(cell_cfg),
                cell_rng.fork(2).next_u64());
            ordered_json doc = cmiknn::report_to_json(report);
            doc["run_config"] = config_echo(cell_cfg, "bench");
            doc["inputs"] = ordered_json::object();
            if (data.truth) doc["truth"] = *data.truth;
            cmiknn::write_json(
                doc, out_path(cfg, cfg.name + "_cell" + std::to_string(cell) +
                                       "_report.json")
                         .string());
            for (std::size_t t = 0; t < report.trials.size(); ++t) {
              const auto& r = report.trials[t];
              auto row = [&](const char* est, double v) {
                agg << cell << ',' << n << ',' << k << ',' << d << ',' << t
                    << ',' << est << ',' << cmiknn::format_double(v) << '\n';
              };
              if (sel.dv) row("dv", r.dv);
              if (sel.nwj) row("nwj", r.nwj);
              if (sel.ldr) row("ldr", r.ldr);
              alg_dv.push_back(r.dv);
            }
            entry["dv_mean"] = report.dv.mean;
            if (data.truth) entry["truth"] = *data.truth;
          }

          if (sel.midiff) {
            cmiknn::MidiffParams mp;
            mp.trials = cell_cfg.trials;
            mp.train_fraction = cell_cfg.train_fraction;
            mp.b = cell_cfg.b;
            mp.threads = cell_cfg.threads;
            const cmiknn::MidiffReport report =
                cmiknn::run_midiff(data.dataset, mp, make_net(cell_cfg),
                                   cell_rng.fork(3).next_u64());
            for (std::size_t t = 0; t < report.trials.size(); ++t) {
              agg << cell << ',' << n << ',' << k << ',' << d << ',' << t
                  << ",midiff_dv,"
                  << cmiknn::format_double(report.trials[t].dv_diff) << '\n';
              midiff_dv.push_back(report.trials[t].dv_diff);
            }
            entry["midiff_dv_mean"] = report.dv_diff.mean;
          }

          if (cfg.utest && !alg_dv.empty() && !midiff_dv.empty()) {
            const cmiknn::MannWhitneyResult u =
                cmiknn::mann_whitney_u(alg_dv, midiff_dv);
            entry["utest"] = {{"u1", u.u1},
                              {"u2", u.u2},
                              {"p_value", u.p_value},
                              {"exact", u.exact}};
          }
        } catch (const std::exception& e) {
          entry["error"] = e.what();
          ++failures;
        }
        summary.push_back(std::move(entry));
        ++cell;
      }
    }
  }

  ordered_json doc;
  doc["format"] = "cmiknn-bench-v1";
  doc["run_config"] = config_echo(cfg, "bench");
  doc["cells"] = std::move(summary);
  cmiknn::write_json(doc, out_path(cfg, cfg.name + "_bench.json").string());
  std::printf("bench '%s': %zu cells, %d failed\n", cfg.name.c_str(), cell,
              failures);
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conditional mutual information estimation with classifier-based "
               "ratio models and isolated k-NN resampling"};
  app.require_subcommand(1);

  RunConfig cfg;
  if (const char* env = std::getenv("CMIKNN_OUT_DIR")) cfg.out_dir = env;

  std::string config_path;
  struct FlagVals {
    std::uint64_t seed;
    int threads, epochs, trials, lag, dx, dy, dz, minibatch, d;
    std::size_t k, n, b;
    double tau, epsilon_0, train_fraction, learning_rate, lr_decay, rho;
    double sigma_x, sigma_y, sigma_z, gamma_d;
    std::string out_dir, estimators, name, data, nodes, schedule_mode;
    std::string x_map, target, index_kind, di_estimator, hidden, lr_schedule;
    std::string n_grid, k_grid, d_grid;
    bool save_data = false, diagnostics = false, no_standardize = false;
    bool utest = false;
  } fv{};

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file (flags override)");
    sub->add_option("--seed", fv.seed, "master seed");
    sub->add_option("--threads", fv.threads, "worker threads for trials");
    sub->add_option("--out-dir", fv.out_dir, "artifact directory");
    sub->add_option("--name", fv.name, "artifact base name");
    sub->add_option("--tau", fv.tau, "classifier output clamp");
    sub->add_option("--epochs", fv.epochs, "training epochs per trial");
    sub->add_option("--trials", fv.trials, "trial count T");
    sub->add_option("--k", fv.k, "neighbor count (fixed_k mode)");
    sub->add_option("--n", fv.n, "sample count (synthetic data)");
    sub->add_option("--b", fv.b, "joint-batch target size (0 = full split)");
    sub->add_option("--estimators", fv.estimators,
                    "comma list from dv,nwj,ldr,midiff");
    sub->add_option("--schedule-mode", fv.schedule_mode, "fixed_k | theory");
    sub->add_option("--epsilon0", fv.epsilon_0, "theory-mode exponent offset");
    sub->add_option("--train-fraction", fv.train_fraction, "train split share");
    sub->add_option("--hidden", fv.hidden, "comma list of hidden widths");
    sub->add_option("--minibatch", fv.minibatch, "minibatch size");
    sub->add_option("--learning-rate", fv.learning_rate, "optimizer step size");
    sub->add_option("--lr-schedule", fv.lr_schedule,
                    "learning-rate schedule: exponential|cosine|constant");
    sub->add_option("--lr-decay", fv.lr_decay,
                    "per-epoch decay factor for the exponential schedule");
    sub->add_option("--index-kind", fv.index_kind, "kdtree | brute");
    sub->add_flag("--diagnostics", fv.diagnostics,
                  "emit concentration-bound diagnostics CSV");
    sub->add_option("--gamma-d", fv.gamma_d, "cone-covering number override");
  };

  CLI::App* synth = app.add_subcommand("synth", "generate chain data and estimate");
  add_common(synth);
  synth->add_option("--sigma-x", fv.sigma_x, "chain sigma_x");
  synth->add_option("--sigma-y", fv.sigma_y, "chain sigma_y");
  synth->add_option("--sigma-z", fv.sigma_z, "chain sigma_z");
  synth->add_option("--d", fv.d, "coordinate dimension");
  synth->add_option("--rho", fv.rho, "within-vector correlation");
  synth->add_option("--x-map", fv.x_map, "identity | tanh:A | affine:A,B");
  synth->add_option("--target", fv.target, "xy_given_z | xz_given_y");
  synth->add_flag("--save-data", fv.save_data, "write the sampled dataset CSV");

  CLI::App* estimate = app.add_subcommand("estimate", "estimate from a dataset CSV");
  add_common(estimate);
  estimate->add_option("--data", fv.data, "dataset CSV path");
  estimate->add_option("--dx", fv.dx, "declared x dimension (validated)");
  estimate->add_option("--dy", fv.dy, "declared y dimension (validated)");
  estimate->add_option("--dz", fv.dz, "declared z dimension (validated)");

  CLI::App* digraph = app.add_subcommand("digraph",
                                         "directed-information graph from series CSV");
  add_common(digraph);
  digraph->add_option("--data", fv.data, "time-series CSV path");
  digraph->add_option("--nodes", fv.nodes, "three column names, comma separated");
  digraph->add_option("--lag", fv.lag, "embedding order l");
  digraph->add_flag("--no-standardize", fv.no_standardize,
                    "skip per-series standardization");
  digraph->add_option("--di-estimator", fv.di_estimator, "dv | nwj | ldr");

  CLI::App* bench = app.add_subcommand("bench", "sweep a parameter grid");
  add_common(bench);
  bench->add_option("--sigma-x", fv.sigma_x, "chain sigma_x");
  bench->add_option("--sigma-y", fv.sigma_y, "chain sigma_y");
  bench->add_option("--sigma-z", fv.sigma_z, "chain sigma_z");
  bench->add_option("--d", fv.d, "coordinate dimension");
  bench->add_option("--rho", fv.rho, "within-vector correlation");
  bench->add_option("--x-map", fv.x_map, "identity | tanh:A | affine:A,B");
  bench->add_option("--target", fv.target, "xy_given_z | xz_given_y");
  bench->add_option("--n-grid", fv.n_grid, "comma list of n values");
  bench->add_option("--k-grid", fv.k_grid, "comma list of k values");
  bench->add_option("--d-grid", fv.d_grid, "comma list of d values");
  bench->add_flag("--utest", fv.utest,
                  "rank test comparing per-trial dv against midiff");

  CLI11_PARSE(app, argc, argv);
  CLI::App* sub = app.get_subcommands().front();

  try {
    if (!config_path.empty()) load_config_file(cfg, config_path);

    auto touched = [&](const std::string& flag) {
      return sub->count(flag) > 0;
    };
    if (touched("--seed")) cfg.seed = fv.seed;
    if (touched("--threads")) cfg.threads = fv.threads;
    if (touched("--out-dir")) cfg.out_dir = fv.out_dir;
    if (touched("--name")) cfg.name = fv.name;
    if (touched("--tau")) cfg.tau = fv.tau;
    if (touched("--epochs")) cfg.epochs = fv.epochs;
    if (touched("--trials")) cfg.trials = fv.trials;
    if (touched("--k")) cfg.k = fv.k;
    if (touched("--n")) cfg.n = fv.n;
    if (touched("--b")) cfg.b = fv.b;
    if (touched("--estimators")) cfg.estimators = fv.estimators;
    if (touched("--schedule-mode")) cfg.schedule_mode = fv.schedule_mode;
    if (touched("--epsilon0")) cfg.epsilon_0 = fv.epsilon_0;
    if (touched("--train-fraction")) cfg.train_fraction = fv.train_fraction;
    if (touched("--hidden"))
      cfg.hidden = parse_numeric_list<int>(fv.hidden, "hidden");
    if (touched("--minibatch")) cfg.minibatch = fv.minibatch;
    if (touched("--learning-rate")) cfg.learning_rate = fv.learning_rate;
    if (touched("--lr-schedule")) cfg.lr_schedule = fv.lr_schedule;
    if (touched("--lr-decay")) cfg.lr_decay = fv.lr_decay;
    if (touched("--index-kind")) cfg.index_kind = fv.index_kind;
    if (touched("--diagnostics")) cfg.diagnostics = true;
    if (touched("--gamma-d")) cfg.gamma_d = fv.gamma_d;

    if (sub == synth || sub == bench) {
      if (touched("--sigma-x")) cfg.sigma_x = fv.sigma_x;
      if (touched("--sigma-y")) cfg.sigma_y = fv.sigma_y;
      if (touched("--sigma-z")) cfg.sigma_z = fv.sigma_z;
      if (touched("--d")) cfg.d = fv.d;
      if (touched("--rho")) cfg.rho = fv.rho;
      if (touched("--x-map")) cfg.x_map = fv.x_map;
      if (touched("--target")) cfg.target = fv.target;
    }
    if (sub == synth && touched("--save-data")) cfg.save_data = true;
    if (sub == estimate || sub == digraph) {
      if (touched("--data")) cfg.data_path = fv.data;
    }
    if (sub == estimate) {
      if (touched("--dx")) cfg.dx = fv.dx;
      if (touched("--dy")) cfg.dy = fv.dy;
      if (touched("--dz")) cfg.dz = fv.dz;
    }
    if (sub == digraph) {
      if (touched("--nodes")) cfg.nodes = fv.nodes;
      if (touched("--lag")) cfg.lag = fv.lag;
      if (touched("--no-standardize")) cfg.standardize = false;
      if (touched("--di-estimator")) cfg.di_estimator = fv.di_estimator;
    }
    if (sub == bench) {
      if (touched("--n-grid")) cfg.n_grid = fv.n_grid;
      if (touched("--k-grid")) cfg.k_grid = fv.k_grid;
      if (touched("--d-grid")) cfg.d_grid = fv.d_grid;
      if (touched("--utest")) cfg.utest = true;
    }

    if (cfg.threads < 1) cfg.threads = 1;
    if (sub == synth) return cmd_synth(cfg);
    if (sub == estimate) return cmd_estimate(cfg);
    if (sub == digraph) return cmd_digraph(cfg);
    return cmd_bench(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
