#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"

#include "dsoft/benchmark.hpp"
#include "dsoft/csv.hpp"
#include "dsoft/datagen.hpp"
#include "dsoft/forecast.hpp"
#include "dsoft/forest.hpp"
#include "dsoft/fsio.hpp"
#include "dsoft/model_io.hpp"
#include "dsoft/scoring.hpp"
#include "dsoft/tree.hpp"

namespace {

using namespace dsoft;

constexpr int kExitUsage = 2;
constexpr int kExitFit = 3;

std::uint64_t default_seed() {
  if (const char* env = std::getenv("DSOFT_SEED")) {
    try {
      return std::stoull(env);
    } catch (...) {
      throw CLI::ValidationError("DSOFT_SEED", "not a valid unsigned integer");
    }
  }
  return kDefaultSeed;
}

struct FitFlags {
  std::string family = "NO";
  std::vector<double> lambda{10.0};
  std::string criterion = "AIC";
  int max_nodes = 64;
  int restarts = 5;
  int cycles = 2;
  int max_iters = 500;
  std::string growth = "per_param";
  std::string refine = "all";
  double ridge_zeta = 1e-5;
  bool no_penalize_bias = false;
};

void add_fit_flags(CLI::App* cmd, FitFlags& f) {
  cmd->add_option("--family", f.family, "Family code: NO, GU, NBI, GA, TF")
      ->capture_default_str();
  cmd->add_option("--lambda", f.lambda,
                  "Gate shrinkage; one value per parameter or one for all")
      ->capture_default_str();
  cmd->add_option("--criterion", f.criterion, "AIC or BIC")
      ->check(CLI::IsMember({"AIC", "BIC"}))
      ->capture_default_str();
  cmd->add_option("--max-nodes", f.max_nodes, "Node cap per tree (even)")
      ->capture_default_str();
  cmd->add_option("--restarts", f.restarts,
                  "Random gate initializations per candidate")
      ->capture_default_str();
  cmd->add_option("--cycles", f.cycles,
                  "Coefficient/gate alternations per candidate")
      ->capture_default_str();
  cmd->add_option("--max-iters", f.max_iters, "Outer iteration cap")
      ->capture_default_str();
  cmd->add_option("--growth", f.growth, "per_param or best_param")
      ->check(CLI::IsMember({"per_param", "best_param"}))
      ->capture_default_str();
  cmd->add_option("--refine", f.refine, "all or new_only")
      ->check(CLI::IsMember({"all", "new_only"}))
      ->capture_default_str();
  cmd->add_option("--ridge-zeta", f.ridge_zeta,
                  "Ridge stabilizer for coefficient solves")
      ->capture_default_str();
  cmd->add_flag("--no-penalize-bias", f.no_penalize_bias,
                "Exclude the gate bias from the shrinkage penalty");
}

FitConfig make_fit_config(const FitFlags& f, std::uint64_t seed) {
  FitConfig cfg;
  cfg.shrinkage.lambda = f.lambda;
  cfg.shrinkage.ridge_zeta = f.ridge_zeta;
  cfg.shrinkage.penalize_bias = !f.no_penalize_bias;
  cfg.criterion = f.criterion == "BIC" ? Criterion::BIC : Criterion::AIC;
  cfg.max_nodes = f.max_nodes;
  cfg.candidate_restarts = f.restarts;
  cfg.candidate_cycles = f.cycles;
  cfg.max_outer_iters = f.max_iters;
  cfg.growth = f.growth == "best_param" ? GrowthMode::best_param
                                        : GrowthMode::per_param;
  cfg.refine = f.refine == "new_only" ? RefineMode::new_only : RefineMode::all;
  cfg.seed = seed;
  return cfg;
}

std::vector<double> load_series(const std::string& path,
                                const std::string& response) {
  const std::string text = read_text_file(path);
  if (looks_like_silso(text)) return parse_silso(text).value;
  return parse_csv(text).column(response);
}

std::optional<MonthDate> silso_last_date(const std::string& path,
                                         std::size_t used) {
  const std::string text = read_text_file(path);
  if (!looks_like_silso(text)) return std::nullopt;
  const MonthlySeries s = parse_silso(text);
  if (used == 0 || used > s.size()) return std::nullopt;
  return MonthDate{s.year[used - 1], s.month[used - 1]};
}

std::string quantile_column_name(double p) {
  int milli = static_cast<int>(std::lround(p * 1000.0));
  std::string digits = std::to_string(milli);
  while (digits.size() < 3) digits.insert(digits.begin(), '0');
  while (digits.size() > 2 && digits.back() == '0') digits.pop_back();
  return "q" + digits;
}

// ---------------------------------------------------------------------------

int cmd_fit(const std::string& data_path, const std::string& response,
            const FitFlags& flags, std::uint64_t seed, int forest_members,
            double bag_fraction, const std::string& out) {
  const Dataset data = csv_to_dataset(read_csv(data_path), response);
  const Family fam = Family::from_code(flags.family);
  const FitConfig cfg = make_fit_config(flags, seed);
  if (forest_members > 0) {
    const ForestModel forest =
        fit_forest(data, fam, cfg, forest_members, bag_fraction, seed);
    save_forest(forest, out);
    std::cerr << "wrote forest (" << forest_members << " members) to " << out
              << "\n";
  } else {
    const DistModel model = fit(data, fam, cfg);
    save_model(model, out);
    std::cerr << "wrote model to " << out << " (loglik "
              << format_double(model.report.final_loglik) << ", df "
              << model.report.final_df << ", "
              << model.report.criterion_name << " "
              << format_double(model.report.final_criterion) << ")\n";
  }
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& data_path,
                const std::string& response, const std::string& out) {
  const nlohmann::json j = load_model_json(model_path);
  Csv in = read_csv(data_path);
  // the response column, when present, is ignored for prediction
  std::optional<std::size_t> drop;
  try {
    drop = in.col(response);
  } catch (const CsvError&) {
  }
  Csv features;
  for (std::size_t c = 0; c < in.header.size(); ++c)
    if (!drop || *drop != c) features.header.push_back(in.header[c]);
  Matrix X(in.n_rows(), features.header.size());
  for (std::size_t i = 0; i < in.n_rows(); ++i) {
    std::size_t f = 0;
    for (std::size_t c = 0; c < in.header.size(); ++c)
      if (!drop || *drop != c) X(i, f++) = in.rows[i][c];
  }

  EtaBlock eta;
  Family fam{};
  if (is_forest_file(j)) {
    const ForestModel forest = forest_from_json(j);
    fam = forest.family();
    predict_eta_forest(forest, X, eta);
  } else {
    const DistModel model = model_from_json(j);
    fam = model.family;
    predict_eta(model, X, eta);
  }

  Csv out_csv;
  const int K = fam.n_params();
  for (int k = 0; k < K; ++k)
    out_csv.header.push_back("eta_" + std::string(fam.param_name(k)));
  for (int k = 0; k < K; ++k)
    out_csv.header.push_back(std::string(fam.param_name(k)));
  for (std::size_t i = 0; i < X.n; ++i) {
    std::vector<double> row;
    for (int k = 0; k < K; ++k) row.push_back(eta[k][i]);
    for (int k = 0; k < K; ++k)
      row.push_back(fam.link(k).inverse(eta[k][i]));
    out_csv.rows.push_back(std::move(row));
  }
  write_csv(out, out_csv);
  return 0;
}

int cmd_score(const std::string& model_path, const std::string& data_path,
              const std::string& response, const std::string& out) {
  const nlohmann::json j = load_model_json(model_path);
  const Csv in = read_csv(data_path);
  const Dataset data = csv_to_dataset(in, response);

  std::vector<ParamVec> theta;
  Family fam{};
  if (is_forest_file(j)) {
    const ForestModel forest = forest_from_json(j);
    fam = forest.family();
    theta = predict_theta_forest(forest, data.X);
  } else {
    const DistModel model = model_from_json(j);
    fam = model.family;
    theta = predict_theta(model, data.X);
  }

  const bool with_crps = !fam.discrete();
  Csv out_csv;
  out_csv.header = {"row", "log_score"};
  if (with_crps) out_csv.header.push_back("crps");
  std::vector<double> ls(data.n()), cr(with_crps ? data.n() : 0);
  for (std::size_t i = 0; i < data.n(); ++i) {
    ls[i] = log_score(fam, data.y[i], theta[i]);
    std::vector<double> row{static_cast<double>(i), ls[i]};
    if (with_crps) {
      cr[i] = crps(fam, data.y[i], theta[i]);
      row.push_back(cr[i]);
    }
    out_csv.rows.push_back(std::move(row));
  }
  write_csv(out, out_csv);

  std::cout << "metric,mean,median\n";
  std::cout << "log_score," << format_double(mean_of(ls)) << ","
            << format_double(median_of(ls)) << "\n";
  if (with_crps)
    std::cout << "crps," << format_double(mean_of(cr)) << ","
              << format_double(median_of(cr)) << "\n";
  return 0;
}

int cmd_simulate(const std::string& family, std::size_t n, std::uint64_t seed,
                 const std::string& kind, double noise_sd, bool with_truth,
                 const std::string& out) {
  Dataset d;
  if (kind == "friedman") {
    d = simulate_dataset(Family::from_code(family), n, seed);
  } else if (kind == "sine2d") {
    d = toy_surface(ToyKind::sine2d, n, noise_sd, seed);
  } else if (kind == "step_oscillation") {
    d = toy_surface(ToyKind::step_oscillation, n, noise_sd, seed);
  } else {
    throw CLI::ValidationError("--kind", "unknown generator " + kind);
  }
  if (!with_truth) {
    // keep the file directly fit-able: never leak the true predictors into
    // the feature columns
    d.eta_mu_true.clear();
    d.eta_sigma_true.clear();
  }
  write_csv(out, dataset_to_csv(d));
  return 0;
}

int cmd_forecast(const std::string& data_path, const std::string& response,
                 const FitFlags& flags, std::uint64_t seed, int horizon,
                 const std::vector<double>& probs, long train_end,
                 const std::string& out) {
  const Family fam = Family::from_code(flags.family);
  std::vector<double> series = load_series(data_path, response);
  if (train_end > 0) {
    if (static_cast<std::size_t>(train_end) > series.size())
      throw CLI::ValidationError("--train-end", "beyond the series length");
    series.resize(static_cast<std::size_t>(train_end));
  }
  const LagSpec spec = LagSpec::defaults();
  const FitConfig cfg = make_fit_config(flags, seed);
  const Dataset lagged = build_lag_matrix(transform_series(series), spec);
  const DistModel model = fit(lagged, fam, cfg);
  const ForecastResult fc =
      recursive_forecast(model, series, horizon, spec, probs);

  const auto last_date = silso_last_date(data_path, series.size());
  std::string text = "step,date";
  for (double p : probs) text += "," + quantile_column_name(p);
  text += ",point";
  for (int k = 0; k < fam.n_params(); ++k)
    text += ",theta_" + std::string(fam.param_name(k));
  text += "\n";
  for (int h = 0; h < horizon; ++h) {
    text += std::to_string(h + 1) + ",";
    if (last_date) {
      const MonthDate d = advance_month(*last_date, h + 1);
      char buf[16];
      std::snprintf(buf, sizeof(buf), "%04d-%02d", d.year, d.month);
      text += buf;
    }
    for (std::size_t qi = 0; qi < probs.size(); ++qi)
      text += "," + format_double(fc.quantiles[h][qi]);
    text += "," + format_double(fc.point[h]);
    for (int k = 0; k < fam.n_params(); ++k)
      text += "," + format_double(fc.theta[h][k]);
    text += "\n";
  }
  write_text_atomic(out, text);
  return 0;
}

int cmd_gridsearch(const std::string& data_path, const std::string& response,
                   const FitFlags& flags, std::uint64_t seed,
                   const std::vector<double>& grid, long train_end,
                   int horizon, const std::string& out) {
  const Family fam = Family::from_code(flags.family);
  const std::vector<double> series = load_series(data_path, response);
  if (train_end <= 0)
    throw CLI::ValidationError("--train-end", "required for gridsearch");
  const LagSpec spec = LagSpec::defaults();
  FitConfig cfg = make_fit_config(flags, seed);
  const std::vector<EvalWindow> windows{
      {static_cast<std::size_t>(train_end), static_cast<std::size_t>(horizon)}};
  const auto table = lambda_grid_search(series, fam, cfg, grid, windows, spec);
  std::string text = "lambda,bucket,median_crps,median_mse,n_steps\n";
  for (const auto& cell : table)
    text += format_double(cell.lambda) + "," + cell.bucket + "," +
            format_double(cell.median_crps) + "," +
            format_double(cell.median_mse) + "," +
            std::to_string(cell.n_steps) + "\n";
  write_text_atomic(out, text);
  return 0;
}

int cmd_benchmark(const std::string& family,
                  const std::vector<std::size_t>& sizes, int reps,
                  std::size_t test_n, const FitFlags& flags,
                  std::uint64_t seed, int jobs, const std::string& out) {
  BenchmarkConfig bench;
  bench.family = family;
  if (!sizes.empty()) bench.sizes = sizes;
  bench.replications = reps;
  bench.test_n = test_n;
  bench.seed = seed;
  bench.jobs = jobs;
  FitFlags f = flags;
  f.family = family;
  const std::vector<BenchmarkRow> rows =
      run_benchmark(bench, make_fit_config(f, seed));
  std::string text = "family,n,replication,model,metric,value\n";
  for (const auto& r : rows)
    text += r.family + "," + std::to_string(r.n) + "," +
            std::to_string(r.replication) + "," + r.model + "," + r.metric +
            "," + format_double(r.value) + "\n";
  write_text_atomic(out, text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "dsoft: distributional adaptive soft regression trees "
      "(fit, predict, score, simulate, forecast, gridsearch, benchmark)"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from an INI/TOML config file");

  std::uint64_t seed = 0;
  try {
    seed = default_seed();
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  app.add_option("--seed", seed,
                 "RNG seed (fallback: DSOFT_SEED, then a fixed default)")
      ->capture_default_str();
  int jobs = 0;
  app.add_option("--jobs", jobs, "Worker threads (0 = all cores)")
      ->capture_default_str();

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "Fit a model to CSV data");
  std::string fit_data, fit_out = "model.json", fit_response = "y";
  FitFlags fit_flags;
  int forest_members = 0;
  double bag_fraction = 0.63;
  fit_cmd->add_option("--data", fit_data, "Training CSV")->required();
  fit_cmd->add_option("--response", fit_response, "Response column name")
      ->capture_default_str();
  fit_cmd->add_option("--out", fit_out, "Model file to write")
      ->capture_default_str();
  add_fit_flags(fit_cmd, fit_flags);
  fit_cmd->add_option("--forest", forest_members,
                      "Fit a bagged forest with this many members");
  fit_cmd->add_option("--bag-fraction", bag_fraction,
                      "Subsample fraction per member")
      ->capture_default_str();

  // predict
  auto* pred_cmd = app.add_subcommand("predict", "Predict parameters for CSV");
  std::string pred_model, pred_data, pred_out = "predictions.csv",
                           pred_response = "y";
  pred_cmd->add_option("--model", pred_model, "Model file")->required();
  pred_cmd->add_option("--data", pred_data, "Feature CSV")->required();
  pred_cmd->add_option("--response", pred_response,
                       "Response column to ignore when present")
      ->capture_default_str();
  pred_cmd->add_option("--out", pred_out, "Output CSV")->capture_default_str();

  // score
  auto* score_cmd =
      app.add_subcommand("score", "Per-row and aggregate metrics");
  std::string score_model, score_data, score_out = "scores.csv",
                           score_response = "y";
  score_cmd->add_option("--model", score_model, "Model file")->required();
  score_cmd->add_option("--data", score_data, "CSV with response")->required();
  score_cmd->add_option("--response", score_response, "Response column name")
      ->capture_default_str();
  score_cmd->add_option("--out", score_out, "Per-row output CSV")
      ->capture_default_str();

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Generate benchmark data");
  std::string sim_family = "NO", sim_kind = "friedman",
              sim_out = "simulated.csv";
  std::size_t sim_n = 1000;
  double sim_noise = 0.1;
  sim_cmd->add_option("--family", sim_family, "NO, GU or NBI (friedman kind)")
      ->capture_default_str();
  sim_cmd->add_option("--n", sim_n, "Rows (grid total for sine2d)")
      ->capture_default_str();
  sim_cmd->add_option("--kind", sim_kind,
                      "friedman, sine2d or step_oscillation")
      ->check(CLI::IsMember({"friedman", "sine2d", "step_oscillation"}))
      ->capture_default_str();
  sim_cmd->add_option("--noise-sd", sim_noise, "Noise sd for toy kinds")
      ->capture_default_str();
  bool sim_with_truth = false;
  sim_cmd->add_flag("--with-truth", sim_with_truth,
                    "Append the true predictor columns (eta_*_true)");
  sim_cmd->add_option("--out", sim_out, "Output CSV")->capture_default_str();

  // forecast
  auto* fc_cmd =
      app.add_subcommand("forecast", "Recursive multi-step forecast");
  std::string fc_data, fc_out = "forecast.csv", fc_response = "y";
  FitFlags fc_flags;
  fc_flags.family = "GA";
  fc_flags.lambda = {50.0};
  int fc_horizon = 100;
  long fc_train_end = 0;
  std::vector<double> fc_probs{0.05, 0.5, 0.95};
  fc_cmd->add_option("--data", fc_data,
                     "Series CSV (semicolon monthly dialect auto-detected)")
      ->required();
  fc_cmd->add_option("--response", fc_response,
                     "Response column for plain CSV input")
      ->capture_default_str();
  fc_cmd->add_option("--horizon", fc_horizon, "Steps ahead")
      ->capture_default_str();
  fc_cmd->add_option("--quantiles", fc_probs, "Quantile levels")
      ->capture_default_str();
  fc_cmd->add_option("--train-end", fc_train_end,
                     "Use only the first N points for training");
  fc_cmd->add_option("--out", fc_out, "Output CSV")->capture_default_str();
  add_fit_flags(fc_cmd, fc_flags);

  // gridsearch
  auto* gs_cmd =
      app.add_subcommand("gridsearch", "Lambda grid over forecast windows");
  std::string gs_data, gs_out = "gridsearch.csv", gs_response = "y";
  FitFlags gs_flags;
  gs_flags.family = "GA";
  std::vector<double> gs_grid{1, 5, 10, 50, 100, 500, 1000};
  long gs_train_end = 0;
  int gs_horizon = 100;
  gs_cmd->add_option("--data", gs_data, "Series CSV")->required();
  gs_cmd->add_option("--response", gs_response,
                     "Response column for plain CSV input")
      ->capture_default_str();
  gs_cmd->add_option("--grid", gs_grid, "Lambda grid")->capture_default_str();
  gs_cmd->add_option("--train-end", gs_train_end,
                     "Training cut (points before the forecast window)")
      ->required();
  gs_cmd->add_option("--horizon", gs_horizon, "Window length")
      ->capture_default_str();
  gs_cmd->add_option("--out", gs_out, "Output CSV")->capture_default_str();
  add_fit_flags(gs_cmd, gs_flags);

  // benchmark
  auto* bm_cmd =
      app.add_subcommand("benchmark", "Replicated simulation benchmark");
  std::string bm_out = "benchmark.csv";
  std::vector<std::size_t> bm_sizes{500, 1000, 5000};
  int bm_reps = 10;
  std::size_t bm_test_n = 10000;
  FitFlags bm_flags;
  bm_cmd->add_option("--sizes", bm_sizes, "Training sizes")
      ->capture_default_str();
  bm_cmd->add_option("--reps", bm_reps, "Replications per size")
      ->capture_default_str();
  bm_cmd->add_option("--test-n", bm_test_n, "Shared test-set size")
      ->capture_default_str();
  bm_cmd->add_option("--out", bm_out, "Tidy results CSV")
      ->capture_default_str();
  add_fit_flags(bm_cmd, bm_flags);

  // let global flags (--seed, --jobs) appear after the subcommand name too
  for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and friends exit 0; every genuine usage error exits 2
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

#ifdef _OPENMP
  if (jobs > 0) omp_set_num_threads(jobs);
#endif

  try {
    if (*fit_cmd)
      return cmd_fit(fit_data, fit_response, fit_flags, seed, forest_members,
                     bag_fraction, fit_out);
    if (*pred_cmd)
      return cmd_predict(pred_model, pred_data, pred_response, pred_out);
    if (*score_cmd)
      return cmd_score(score_model, score_data, score_response, score_out);
    if (*sim_cmd)
      return cmd_simulate(sim_family, sim_n, seed, sim_kind, sim_noise,
                          sim_with_truth, sim_out);
    if (*fc_cmd)
      return cmd_forecast(fc_data, fc_response, fc_flags, seed, fc_horizon,
                          fc_probs, fc_train_end, fc_out);
    if (*gs_cmd)
      return cmd_gridsearch(gs_data, gs_response, gs_flags, seed, gs_grid,
                            gs_train_end, gs_horizon, gs_out);
    if (*bm_cmd)
      return cmd_benchmark(bm_flags.family, bm_sizes, bm_reps, bm_test_n,
                           bm_flags, seed, jobs, bm_out);
  } catch (const FitError& e) {
    std::cerr << "fit error: " << e.what() << "\n";
    return kExitFit;
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return 0;
}
