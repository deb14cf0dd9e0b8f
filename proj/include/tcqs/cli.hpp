#pragma once

#include <CLI11.hpp>
#include <Eigen/Dense>
#include <cstdint>
#include <iostream>
#include <json.hpp>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "tcqs/dataset.hpp"
#include "tcqs/metrics.hpp"
#include "tcqs/simulate.hpp"
#include "tcqs/tcqs.hpp"

namespace tcqs::cli {

namespace detail {

inline int resolve_threads(int requested) {
  if (requested >= 1) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Unreadable or malformed input files are the caller's mistake, so they are
// reported as usage errors rather than runtime failures.
inline Dataset load_input_dataset(const std::string& path,
                                  const std::string& response) {
  try {
    return load_dataset(path, response);
  } catch (const std::exception& e) {
    throw std::invalid_argument(e.what());
  }
}

inline Eigen::MatrixXd load_basis(const std::string& path) {
  Eigen::MatrixXd m;
  try {
    m = load_matrix_csv(path).first;
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::exception& e) {
    throw std::invalid_argument(e.what());
  }
  if (m.rows() == 0 || m.cols() == 0)
    throw std::invalid_argument("basis file has no data rows: " + path);
  return m;
}

inline std::vector<std::string> direction_headers(Eigen::Index d) {
  std::vector<std::string> h;
  for (Eigen::Index k = 0; k < d; ++k) h.push_back("dir" + std::to_string(k + 1));
  return h;
}

inline std::string matrix_csv_text(const Eigen::MatrixXd& m,
                                   const std::vector<std::string>& headers) {
  std::string out;
  for (std::size_t j = 0; j < headers.size(); ++j) {
    if (j) out += ',';
    out += headers[j];
  }
  out += '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += tcqs::detail::format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

inline void emit_text(const std::string& out_path, const std::string& text) {
  if (out_path.empty())
    std::cout << text;
  else
    atomic_write_text(out_path, text);
}

inline double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::VectorXd ca = a.array() - a.mean();
  const Eigen::VectorXd cb = b.array() - b.mean();
  const double denom = std::sqrt(ca.squaredNorm() * cb.squaredNorm());
  if (!(denom > 0.0))
    throw std::runtime_error("correlation undefined: a column is constant");
  return ca.dot(cb) / denom;
}

struct SimulateArgs {
  std::vector<std::string> models;
  std::vector<double> taus;
  std::vector<std::string> methods;
  int n = 600;
  int p = 10;
  int reps = 50;
  int slices = 10;
  int t_df = 3;
  int threads = 0;
  double ar_rho = 0.5;
  double bandwidth_scale = 1.0;
  std::string dist = "iid-normal";
  std::uint64_t seed = 1;
  std::string out;
  std::string data_out;
};

struct EstimateArgs {
  std::string data;
  std::string response;
  std::string method = "tcqs";
  std::string out;
  std::string summary_out;
  double tau = 0.5;
  double bandwidth_scale = 1.0;
  int d = 1;
  int cs_dim = 0;
  int slices = 10;
  int threads = 0;
  bool raw_scale = false;
};

struct ProjectArgs {
  std::string basis;
  std::string train;
  std::string test;
  std::string response;
  std::string method = "tcqs";
  std::string out;
};

struct MetricsArgs {
  std::string estimated;
  std::string truth;
};

struct ConsistencyArgs {
  std::string model = "I";
  std::string method = "tcqs";
  std::string dist = "iid-normal";
  std::string out;
  std::string fit_out;
  std::vector<int> grid;
  double tau = 0.5;
  double ar_rho = 0.5;
  double bandwidth_scale = 1.0;
  int p = 10;
  int reps = 30;
  int slices = 10;
  int t_df = 3;
  int threads = 0;
  std::uint64_t seed = 1;
};

inline ModelSpec base_spec(const std::string& model, int n, int p,
                           const std::string& dist, double ar_rho, int t_df,
                           std::uint64_t seed) {
  ModelSpec spec;
  spec.model = model_from_string(model);
  spec.n = n;
  spec.p = p;
  spec.dist = dist_from_string(dist);
  spec.ar_rho = ar_rho;
  spec.t_df = t_df;
  spec.seed = seed;
  return spec;
}

inline int cmd_simulate(const SimulateArgs& a) {
  BenchmarkOptions opts;
  opts.threads = resolve_threads(a.threads);
  opts.bandwidth_scale = a.bandwidth_scale;
  opts.slices = a.slices;

  if (!a.data_out.empty()) {
    const ModelSpec spec = base_spec(a.models.at(0), a.n, a.p, a.dist,
                                     a.ar_rho, a.t_df, a.seed);
    save_dataset_csv(a.data_out, generate(spec));
    // dataset-only convenience: skip the benchmark unless asked for a report
    if (a.out.empty()) return 0;
  }

  std::string csv = "model,method,tau,dm_mean,dm_sd,tcc_mean,tcc_sd,failures\n";
  for (const auto& model : a.models) {
    const ModelSpec spec =
        base_spec(model, a.n, a.p, a.dist, a.ar_rho, a.t_df, a.seed);
    for (double tau : a.taus) {
      for (const auto& method : a.methods) {
        const Method m = method_from_string(method);
        const CellSummary cell = run_replications(spec, m, tau, a.reps, opts);
        csv += to_string(spec.model);
        csv += ',';
        csv += to_string(m);
        csv += ',';
        csv += tcqs::detail::format_double(tau);
        csv += ',';
        csv += tcqs::detail::format_double(cell.dm_mean);
        csv += ',';
        csv += tcqs::detail::format_double(cell.dm_sd);
        csv += ',';
        csv += tcqs::detail::format_double(cell.tcc_mean);
        csv += ',';
        csv += tcqs::detail::format_double(cell.tcc_sd);
        csv += ',';
        csv += std::to_string(cell.failures);
        csv += '\n';
      }
    }
  }
  emit_text(a.out, csv);
  return 0;
}

inline int cmd_estimate(const EstimateArgs& a) {
  const Dataset data = load_input_dataset(a.data, a.response);
  const Method method = method_from_string(a.method);

  SirConfig sir_cfg;
  sir_cfg.n_slices = a.slices;
  sir_cfg.target_dim = a.cs_dim >= 1 ? a.cs_dim : a.d;
  EstimatorOptions opts;
  opts.bandwidth_scale = a.bandwidth_scale;
  opts.threads = resolve_threads(a.threads);

  Eigen::MatrixXd basis;
  Eigen::VectorXd eigenvalues;
  if (method == Method::tcqs) {
    const TcqsResult res =
        tcqs_basis(data.x, data.y, a.tau, a.d, sir_cfg, opts);
    basis = a.raw_scale ? raw_scale_basis(res) : res.estimate.basis;
    eigenvalues = res.estimate.eigenvalues;
  } else {
    const SirResult sir = sir_directions(data.x, data.y, sir_cfg);
    const CqsResult res =
        cqs_basis(data.x, data.y, a.tau, a.d, sir.basis, opts);
    basis = res.estimate.basis;
    eigenvalues = res.estimate.eigenvalues;
  }

  if (!a.out.empty())
    write_matrix_csv(a.out, basis, direction_headers(basis.cols()));

  nlohmann::json j;
  j["method"] = to_string(method);
  j["tau"] = a.tau;
  j["d"] = a.d;
  j["n"] = static_cast<long long>(data.n());
  j["p"] = static_cast<long long>(data.p());
  j["raw_scale"] = a.raw_scale;
  j["columns"] = data.names;
  j["eigenvalues"] =
      std::vector<double>(eigenvalues.data(), eigenvalues.data() + eigenvalues.size());
  std::vector<std::vector<double>> rows;
  for (Eigen::Index i = 0; i < basis.rows(); ++i) {
    rows.emplace_back(basis.row(i).begin(), basis.row(i).end());
  }
  j["basis"] = rows;

  const std::string text = j.dump(2) + "\n";
  std::cout << text;
  if (!a.summary_out.empty()) atomic_write_text(a.summary_out, text);
  return 0;
}

inline int cmd_project(const ProjectArgs& a) {
  const Eigen::MatrixXd basis = load_basis(a.basis);
  const Dataset train = load_input_dataset(a.train, a.response);
  const Dataset test = load_input_dataset(a.test, a.response);
  if (train.names != test.names)
    throw std::invalid_argument(
        "project: train and test predictor columns differ");
  if (basis.rows() != train.p())
    throw std::invalid_argument(
        "project: basis has " + std::to_string(basis.rows()) +
        " rows but the data has " + std::to_string(train.p()) + " predictors");

  const Method method = method_from_string(a.method);
  Eigen::MatrixXd predictors;
  if (method == Method::tcqs) {
    TcqsResult res;
    res.transform = whiten(normal_scores(train.x));
    res.estimate.basis = basis;
    predictors = sufficient_predictors(res, test.x, train.x);
  } else {
    predictors = test.x * basis;
  }

  emit_text(a.out, matrix_csv_text(predictors, direction_headers(basis.cols())));

  nlohmann::json j;
  j["n_test"] = static_cast<long long>(test.n());
  j["d"] = static_cast<long long>(basis.cols());
  std::vector<double> corr;
  for (Eigen::Index k = 0; k < predictors.cols(); ++k)
    corr.push_back(pearson(predictors.col(k), test.y));
  j["correlations"] = corr;
  std::cout << j.dump() << "\n";
  return 0;
}

inline int cmd_metrics(const MetricsArgs& a) {
  const Eigen::MatrixXd estimated = load_basis(a.estimated);
  const Eigen::MatrixXd truth = load_basis(a.truth);
  const double tcc = trace_correlation(estimated, truth);
  const double dm = distance_measure(estimated, truth);
  nlohmann::json j;
  j["dm"] = dm;
  j["tcc"] = tcc;
  std::cout << j.dump() << "\n";
  return 0;
}

inline int cmd_consistency(const ConsistencyArgs& a) {
  const ModelSpec base =
      base_spec(a.model, a.grid.empty() ? 600 : a.grid.front(), a.p, a.dist,
                a.ar_rho, a.t_df, a.seed);
  BenchmarkOptions opts;
  opts.threads = resolve_threads(a.threads);
  opts.bandwidth_scale = a.bandwidth_scale;
  opts.slices = a.slices;

  const ConsistencyResult res = consistency_sweep(
      base, method_from_string(a.method), a.tau, a.grid, a.reps, opts);

  std::string csv = "n,inv_sqrt_n,dm_mean\n";
  for (const auto& pt : res.points) {
    csv += std::to_string(pt.n);
    csv += ',';
    csv += tcqs::detail::format_double(1.0 / std::sqrt(static_cast<double>(pt.n)));
    csv += ',';
    csv += tcqs::detail::format_double(pt.dm_mean);
    csv += '\n';
  }
  emit_text(a.out, csv);

  nlohmann::json j;
  j["slope"] = res.slope;
  j["intercept"] = res.intercept;
  j["r_squared"] = res.r_squared;
  const std::string text = j.dump() + "\n";
  std::cout << text;
  if (!a.fit_out.empty()) atomic_write_text(a.fit_out, text);
  return 0;
}

}  // namespace detail

// Entry point shared by the binary and the in-process tests. Exit codes:
// 0 success, 1 runtime failure, 2 usage error.
inline int run(int argc, const char* const* argv) {
  CLI::App app{"central quantile subspace estimation toolkit"};
  app.require_subcommand(1);

  detail::SimulateArgs sim;
  CLI::App* s = app.add_subcommand(
      "simulate", "run a seeded benchmark over models, quantile levels, and methods");
  s->set_config("--config");
  s->add_option("--model", sim.models, "model ids (EX1, I..VI), comma-separated")
      ->required()
      ->delimiter(',');
  s->add_option("--tau", sim.taus, "quantile levels, comma-separated")->delimiter(',');
  s->add_option("--method", sim.methods, "estimators: cqs, tcqs")->delimiter(',');
  s->add_option("--n", sim.n, "sample size per replication");
  s->add_option("--p", sim.p, "predictor count");
  s->add_option("--reps", sim.reps, "number of replications");
  s->add_option("--dist", sim.dist, "predictor distribution: iid-normal, ar-normal, student-t");
  s->add_option("--ar-rho", sim.ar_rho, "correlation decay for ar-normal");
  s->add_option("--t-df", sim.t_df, "degrees of freedom for student-t");
  s->add_option("--seed", sim.seed, "base seed");
  s->add_option("--slices", sim.slices, "slice count for the inverse-regression step");
  s->add_option("--bandwidth-scale", sim.bandwidth_scale, "multiplier on plug-in bandwidths");
  s->add_option("--threads", sim.threads, "worker threads (0 = all cores)");
  s->add_option("--out", sim.out, "results CSV path (stdout if omitted)");
  s->add_option("--data-out", sim.data_out,
                "write one generated dataset (first --model) to this CSV and skip "
                "the benchmark unless --out is also given");

  detail::EstimateArgs est;
  CLI::App* e = app.add_subcommand("estimate", "fit a quantile subspace basis on a dataset CSV");
  e->set_config("--config");
  e->add_option("--data", est.data, "input dataset CSV")->required();
  e->add_option("--response", est.response, "response column name (default: last column)");
  e->add_option("--method", est.method, "cqs or tcqs");
  e->add_option("--tau", est.tau, "quantile level");
  e->add_option("--d", est.d, "subspace dimension");
  e->add_option("--cs-dim", est.cs_dim,
                "dimension for the initial inverse-regression step (default: same as --d)");
  e->add_option("--slices", est.slices, "slice count for the inverse-regression step");
  e->add_option("--bandwidth-scale", est.bandwidth_scale, "multiplier on plug-in bandwidths");
  e->add_option("--threads", est.threads, "worker threads (0 = all cores)");
  e->add_option("--out", est.out, "basis CSV path");
  e->add_option("--summary-out", est.summary_out, "also write the JSON summary here");
  e->add_flag("--raw-scale", est.raw_scale,
              "report the tcqs basis in score coordinates instead of whitened ones");

  detail::ProjectArgs proj;
  CLI::App* pr = app.add_subcommand(
      "project", "map a test set onto a fitted basis and report response correlations");
  pr->set_config("--config");
  pr->add_option("--basis", proj.basis, "basis CSV from estimate")->required();
  pr->add_option("--train", proj.train, "training dataset CSV (defines the transform)")->required();
  pr->add_option("--test", proj.test, "test dataset CSV")->required();
  pr->add_option("--response", proj.response, "response column name (default: last column)");
  pr->add_option("--method", proj.method, "cqs or tcqs (must match the fit)");
  pr->add_option("--out", proj.out, "sufficient-predictor CSV path (stdout if omitted)");

  detail::MetricsArgs met;
  CLI::App* m = app.add_subcommand("metrics", "compare two basis CSVs");
  m->set_config("--config");
  m->add_option("--estimated", met.estimated, "estimated basis CSV")->required();
  m->add_option("--truth", met.truth, "reference basis CSV")->required();

  detail::ConsistencyArgs con;
  CLI::App* c = app.add_subcommand(
      "consistency", "benchmark error against sample size and fit it to 1/sqrt(n)");
  c->set_config("--config");
  c->add_option("--model", con.model, "model id");
  c->add_option("--method", con.method, "cqs or tcqs");
  c->add_option("--tau", con.tau, "quantile level");
  c->add_option("--n-grid", con.grid, "increasing sample sizes, comma-separated")->delimiter(',');
  c->add_option("--p", con.p, "predictor count");
  c->add_option("--reps", con.reps, "replications per sample size");
  c->add_option("--dist", con.dist, "predictor distribution");
  c->add_option("--ar-rho", con.ar_rho, "correlation decay for ar-normal");
  c->add_option("--t-df", con.t_df, "degrees of freedom for student-t");
  c->add_option("--seed", con.seed, "base seed");
  c->add_option("--slices", con.slices, "slice count for the inverse-regression step");
  c->add_option("--bandwidth-scale", con.bandwidth_scale, "multiplier on plug-in bandwidths");
  c->add_option("--threads", con.threads, "worker threads (0 = all cores)");
  c->add_option("--out", con.out, "plot-data CSV path (stdout if omitted)");
  c->add_option("--fit-out", con.fit_out, "also write the fit JSON here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  }

  if (sim.taus.empty()) sim.taus = {0.5};
  if (sim.methods.empty()) sim.methods = {"tcqs"};
  if (con.grid.empty()) con.grid = {400, 600, 800, 1000, 1200};

  try {
    if (s->parsed()) return detail::cmd_simulate(sim);
    if (e->parsed()) return detail::cmd_estimate(est);
    if (pr->parsed()) return detail::cmd_project(proj);
    if (m->parsed()) return detail::cmd_metrics(met);
    if (c->parsed()) return detail::cmd_consistency(con);
  } catch (const std::invalid_argument& err) {
    std::cerr << "usage error: " << err.what() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace tcqs::cli
