#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "support.hpp"
#include "tcqs/cli.hpp"
#include "tcqs/dataset.hpp"
#include "tcqs/simulate.hpp"

using Catch::Matchers::WithinAbs;

namespace {

// Runs the toolkit in-process with a synthetic argv, optionally capturing
// whatever it prints to stdout.
int run_cli(const std::vector<std::string>& args, std::string* captured = nullptr) {
  std::vector<const char*> argv;
  argv.push_back("tcqs");
  for (const auto& a : args) argv.push_back(a.c_str());
  if (captured == nullptr) {
    return tcqs::cli::run(static_cast<int>(argv.size()), argv.data());
  }
  testsupport::CoutCapture cap;
  const int code = tcqs::cli::run(static_cast<int>(argv.size()), argv.data());
  *captured = cap.text();
  return code;
}

std::string basis_file(const std::string& name, const Eigen::MatrixXd& m) {
  const auto path = testsupport::scratch_dir() / name;
  std::vector<std::string> headers;
  for (Eigen::Index k = 0; k < m.cols(); ++k)
    headers.push_back("dir" + std::to_string(k + 1));
  tcqs::write_matrix_csv(path.string(), m, headers);
  return path.string();
}

std::string dataset_file(const std::string& name, tcqs::ModelId model, int n,
                         int p, std::uint64_t seed) {
  tcqs::ModelSpec spec;
  spec.model = model;
  spec.n = n;
  spec.p = p;
  spec.seed = seed;
  const auto path = testsupport::scratch_dir() / name;
  tcqs::save_dataset_csv(path.string(), tcqs::generate(spec));
  return path.string();
}

}  // namespace

TEST_CASE("metrics reports zero distance for a basis against itself", "[cli]") {
  Eigen::MatrixXd e1 = Eigen::MatrixXd::Zero(4, 1);
  e1(0, 0) = 1.0;
  const std::string a = basis_file("cli_metrics_self.csv", e1);

  std::string out;
  REQUIRE(run_cli({"metrics", "--estimated", a, "--truth", a}, &out) == 0);
  const auto j = nlohmann::json::parse(out);
  CHECK_THAT(j.at("dm").get<double>(), WithinAbs(0.0, 1e-12));
  CHECK_THAT(j.at("tcc").get<double>(), WithinAbs(1.0, 1e-12));
}

TEST_CASE("metrics distinguishes orthogonal and oblique pairs", "[cli]") {
  Eigen::MatrixXd e1 = Eigen::MatrixXd::Zero(4, 1);
  e1(0, 0) = 1.0;
  Eigen::MatrixXd e2 = Eigen::MatrixXd::Zero(4, 1);
  e2(1, 0) = 1.0;
  Eigen::MatrixXd diag = Eigen::MatrixXd::Zero(4, 1);
  diag(0, 0) = diag(1, 0) = std::sqrt(0.5);

  const std::string a = basis_file("cli_metrics_e1.csv", e1);
  const std::string b = basis_file("cli_metrics_e2.csv", e2);
  const std::string c = basis_file("cli_metrics_diag.csv", diag);

  std::string out;
  REQUIRE(run_cli({"metrics", "--estimated", a, "--truth", b}, &out) == 0);
  auto j = nlohmann::json::parse(out);
  CHECK_THAT(j.at("dm").get<double>(), WithinAbs(1.0, 1e-12));
  CHECK_THAT(j.at("tcc").get<double>(), WithinAbs(0.0, 1e-12));

  REQUIRE(run_cli({"metrics", "--estimated", a, "--truth", c}, &out) == 0);
  j = nlohmann::json::parse(out);
  CHECK_THAT(j.at("dm").get<double>(), WithinAbs(0.70711, 1e-4));
  CHECK_THAT(j.at("tcc").get<double>(), WithinAbs(0.70711, 1e-4));
}

TEST_CASE("usage errors exit with code 2", "[cli]") {
  std::string out;
  // unknown model name
  CHECK(run_cli({"simulate", "--model", "VII", "--reps", "1"}, &out) == 2);
  // missing required flag
  CHECK(run_cli({"simulate", "--reps", "1"}, &out) == 2);
  // unknown subcommand
  CHECK(run_cli({"frobnicate"}, &out) == 2);
  // short grids cannot support a rate fit
  CHECK(run_cli({"consistency", "--model", "I", "--n-grid", "100,200",
                 "--reps", "1", "--p", "3"},
                &out) == 2);
  // missing basis file
  const std::string gone = (testsupport::scratch_dir() / "cli_no_such.csv").string();
  CHECK(run_cli({"metrics", "--estimated", gone, "--truth", gone}, &out) == 2);
}

TEST_CASE("simulate emits the report schema on stdout or to a file", "[cli]") {
  const auto out_path = testsupport::scratch_dir() / "cli_sim.csv";
  const std::vector<std::string> base = {
      "simulate", "--model", "I",     "--n",    "80", "--p",       "3",
      "--tau",    "0.5",     "--method", "cqs", "--reps", "2",
      "--seed",   "11",      "--threads", "1"};

  std::vector<std::string> to_file = base;
  to_file.insert(to_file.end(), {"--out", out_path.string()});
  REQUIRE(run_cli(to_file) == 0);
  const std::string file_text = testsupport::read_file(out_path.string());
  CHECK(file_text.rfind("model,method,tau,dm_mean,dm_sd,tcc_mean,tcc_sd,failures\n", 0) == 0);
  CHECK(file_text.find("\nI,cqs,0.5,") != std::string::npos);

  std::string stdout_text;
  REQUIRE(run_cli(base, &stdout_text) == 0);
  CHECK(stdout_text == file_text);
}

TEST_CASE("simulate reports are byte-identical across thread counts", "[cli]") {
  const auto path_a = testsupport::scratch_dir() / "cli_sim_t1.csv";
  const auto path_b = testsupport::scratch_dir() / "cli_sim_t3.csv";
  auto args = [&](const char* threads, const std::filesystem::path& out) {
    return std::vector<std::string>{
        "simulate", "--model", "I",      "--n",       "80",    "--p",  "3",
        "--tau",    "0.25,0.5", "--method", "cqs,tcqs", "--reps", "2",
        "--seed",   "99",      "--threads", threads,  "--out", out.string()};
  };
  REQUIRE(run_cli(args("1", path_a)) == 0);
  REQUIRE(run_cli(args("3", path_b)) == 0);
  CHECK(testsupport::read_file(path_a.string()) ==
        testsupport::read_file(path_b.string()));
}

TEST_CASE("simulate can write one generated dataset", "[cli]") {
  const auto path = testsupport::scratch_dir() / "cli_data_out.csv";
  REQUIRE(run_cli({"simulate", "--model", "I", "--n", "80", "--p", "3",
                   "--seed", "4", "--data-out", path.string()}) == 0);
  const tcqs::Dataset d = tcqs::load_dataset(path.string());
  CHECK(d.n() == 80);
  CHECK(d.p() == 3);
  CHECK(d.names == std::vector<std::string>{"c1", "c2", "c3"});
  CHECK(d.response_name == "y");
}

TEST_CASE("estimate writes a basis and a summary", "[cli]") {
  const std::string data =
      dataset_file("cli_est_data.csv", tcqs::ModelId::m1, 300, 4, 5);
  const auto basis_path = testsupport::scratch_dir() / "cli_est_basis.csv";
  const auto summary_path = testsupport::scratch_dir() / "cli_est_summary.json";

  std::string out;
  REQUIRE(run_cli({"estimate", "--data", data, "--method", "tcqs", "--tau",
                   "0.5", "--d", "1", "--threads", "1", "--out",
                   basis_path.string(), "--summary-out", summary_path.string()},
                  &out) == 0);

  const auto [basis, headers] = tcqs::load_matrix_csv(basis_path.string());
  REQUIRE(basis.rows() == 4);
  REQUIRE(basis.cols() == 1);
  CHECK(headers == std::vector<std::string>{"dir1"});
  // the location direction of this model loads on the first predictor
  CHECK(std::abs(basis(0, 0)) > 0.9);

  const auto j = nlohmann::json::parse(testsupport::read_file(summary_path.string()));
  CHECK(j.at("method") == "tcqs");
  CHECK(j.at("n") == 300);
  CHECK(j.at("p") == 4);
  CHECK(j.at("d") == 1);
  CHECK(j.at("columns") == std::vector<std::string>{"c1", "c2", "c3", "c4"});
  CHECK(j.at("eigenvalues").size() >= 1);
  CHECK(j.at("basis").size() == 4);
  // the summary also goes to stdout
  CHECK(nlohmann::json::parse(out) == j);

  // asking for more directions than predictors is a usage error
  CHECK(run_cli({"estimate", "--data", data, "--d", "9"}) == 2);
}

TEST_CASE("project round trips the training data", "[cli]") {
  const std::string data =
      dataset_file("cli_proj_data.csv", tcqs::ModelId::m1, 300, 4, 5);
  const auto basis_path = testsupport::scratch_dir() / "cli_proj_basis.csv";
  REQUIRE(run_cli({"estimate", "--data", data, "--tau", "0.5", "--d", "1",
                   "--threads", "1", "--out", basis_path.string()}) == 0);

  const auto sp_path = testsupport::scratch_dir() / "cli_proj_sp.csv";
  std::string out;
  REQUIRE(run_cli({"project", "--basis", basis_path.string(), "--train", data,
                   "--test", data, "--method", "tcqs", "--out",
                   sp_path.string()},
                  &out) == 0);

  const auto [sp, headers] = tcqs::load_matrix_csv(sp_path.string());
  CHECK(sp.rows() == 300);
  CHECK(sp.cols() == 1);
  CHECK(headers == std::vector<std::string>{"dir1"});

  const auto j = nlohmann::json::parse(out);
  CHECK(j.at("n_test") == 300);
  CHECK(j.at("d") == 1);
  REQUIRE(j.at("correlations").size() == 1);
  // the first sufficient predictor tracks the response strongly in-sample
  CHECK(std::abs(j.at("correlations")[0].get<double>()) > 0.7);
}

TEST_CASE("project rejects mismatched or unusable inputs", "[cli]") {
  const std::string train =
      dataset_file("cli_projerr_train.csv", tcqs::ModelId::m1, 80, 3, 8);
  Eigen::MatrixXd e1 = Eigen::MatrixXd::Zero(3, 1);
  e1(0, 0) = 1.0;
  const std::string basis = basis_file("cli_projerr_basis.csv", e1);

  // test set with a different predictor schema
  const std::string other =
      dataset_file("cli_projerr_other.csv", tcqs::ModelId::m1, 80, 4, 8);
  CHECK(run_cli({"project", "--basis", basis, "--train", train, "--test",
                 other}) == 2);

  // basis whose row count does not match the predictors
  Eigen::MatrixXd wide = Eigen::MatrixXd::Zero(5, 1);
  wide(0, 0) = 1.0;
  const std::string bad_basis = basis_file("cli_projerr_wide.csv", wide);
  CHECK(run_cli({"project", "--basis", bad_basis, "--train", train, "--test",
                 train}) == 2);

  // an empty test file is the caller's mistake, not a crash
  const auto empty = testsupport::scratch_dir() / "cli_projerr_empty.csv";
  testsupport::write_file(empty.string(), "");
  CHECK(run_cli({"project", "--basis", basis, "--train", train, "--test",
                 empty.string()}) == 2);

  // header-only files carry no observations
  const auto header_only = testsupport::scratch_dir() / "cli_projerr_header.csv";
  testsupport::write_file(header_only.string(), "c1,c2,c3,y\n");
  CHECK(run_cli({"project", "--basis", basis, "--train", train, "--test",
                 header_only.string()}) == 2);
}

TEST_CASE("consistency writes the sweep table and the fit", "[cli]") {
  const auto csv_path = testsupport::scratch_dir() / "cli_cons.csv";
  const auto fit_path = testsupport::scratch_dir() / "cli_cons_fit.json";
  std::string out;
  REQUIRE(run_cli({"consistency", "--model", "I", "--method", "tcqs", "--tau",
                   "0.5", "--n-grid", "80,120,160", "--p", "3", "--reps", "2",
                   "--seed", "3", "--threads", "1", "--out", csv_path.string(),
                   "--fit-out", fit_path.string()},
                  &out) == 0);

  const std::string csv = testsupport::read_file(csv_path.string());
  CHECK(csv.rfind("n,inv_sqrt_n,dm_mean\n", 0) == 0);
  CHECK(csv.find("\n80,") != std::string::npos);
  CHECK(csv.find("\n160,") != std::string::npos);

  const auto fit = nlohmann::json::parse(testsupport::read_file(fit_path.string()));
  CHECK(fit.contains("slope"));
  CHECK(fit.contains("intercept"));
  CHECK(fit.contains("r_squared"));
  // the same fit JSON is printed
  CHECK(nlohmann::json::parse(out) == fit);
}
