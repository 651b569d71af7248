#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sbl/cli.hpp"
#include "test_support.hpp"

using namespace sbl;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / ("sbl_cli_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

cli::RunSpec spec_for(const std::string& env, const fs::path& out) {
  cli::RunSpec spec;
  spec.env_path = test::source_path("envs/" + env);
  spec.output_path = out.string();
  return spec;
}

}  // namespace

TEST_CASE("alpha lists") {
  const auto r = cli::parse_alpha_list("0.65:0.99:0.05");
  REQUIRE(r.size() == 8);
  CHECK(r.front() == 0.65);
  CHECK(r[1] == 0.7);
  CHECK(r.back() == 0.99);
  CHECK(cli::parse_alpha_list("0.7,0.9") == std::vector<double>{0.7, 0.9});
  CHECK_THROWS_AS(cli::parse_alpha_list("0.9:0.7:0.1"), std::invalid_argument);
  CHECK_THROWS_AS(cli::parse_alpha_list("abc"), std::invalid_argument);
}

TEST_CASE("run writes a reproducible trace") {
  const auto dir = scratch_dir();
  auto spec = spec_for("distinct.json", dir / "a.csv");
  std::ostringstream out, err;
  REQUIRE(cli::cmd_run(spec, out, err) == cli::kExitOk);
  spec.output_path = (dir / "b.csv").string();
  spec.snapshot_path = (dir / "model.json").string();
  std::ostringstream out2;
  REQUIRE(cli::cmd_run(spec, out2, err) == cli::kExitOk);

  const std::string a = slurp(dir / "a.csv");
  CHECK(a == slurp(dir / "b.csv"));
  CHECK(out.str() == out2.str());
  const auto rows = lines(a);
  REQUIRE(rows.size() > 1);
  CHECK(rows[0] ==
        "trial,step,policy_mode,action,observation,num_model_states,confidence_min,"
        "running_error,schema_version");
  CHECK(rows[1].rfind("0,1,", 0) == 0);
  CHECK(rows[1].back() == '1');
  CHECK(out.str().find("model_states=4") != std::string::npos);
  CHECK(out.str().find("correct=1") != std::string::npos);
  CHECK(nlohmann::json::parse(slurp(dir / "model.json"))["states"].size() == 4);
  fs::remove_all(dir);
}

TEST_CASE("config errors") {
  const auto dir = scratch_dir();
  std::ostringstream out, err;
  auto spec = spec_for("missing.json", dir / "x.csv");
  CHECK(cli::cmd_run(spec, out, err) == cli::kExitConfigError);

  spec = spec_for("shape.json", dir / "x.csv");
  spec.alpha = 0.2;
  CHECK(cli::cmd_run(spec, out, err) == cli::kExitConfigError);

  spec = spec_for("shape.json", dir / "x.csv");
  spec.trainer.confidence_factor = 0.5;
  CHECK(cli::cmd_run(spec, out, err) == cli::kExitConfigError);

  spec = spec_for("shape.json", dir / "x.csv");
  spec.trials = 0;
  CHECK(cli::cmd_compare(spec, out, err) == cli::kExitConfigError);

  spec = spec_for("shape.json", dir / "x.csv");
  spec.alphas = "0.1,0.9";
  CHECK(cli::cmd_sweep(spec, out, err) == cli::kExitConfigError);
  fs::remove_all(dir);
}

TEST_CASE("validate-env") {
  std::ostringstream out, err;
  CHECK(cli::cmd_validate_env(test::source_path("envs/shape.json"), out, err) == cli::kExitOk);
  CHECK(out.str().find("ok (4 states") != std::string::npos);
  CHECK(cli::cmd_validate_env(test::source_path("tests/data/broken.json"), out, err) ==
        cli::kExitConfigError);
  CHECK(err.str().find("violation") != std::string::npos);
  CHECK(err.str().find("missing transition") != std::string::npos);
}

TEST_CASE("compare and sweep tables") {
  const auto dir = scratch_dir();
  std::ostringstream out, err;
  auto spec = spec_for("distinct.json", dir / "cmp.csv");
  spec.trials = 1;
  REQUIRE(cli::cmd_compare(spec, out, err) == cli::kExitOk);
  const auto rows = lines(slurp(dir / "cmp.csv"));
  CHECK(rows[0] == "policy,trial,actions_total,actions_per_split,success,final_error,schema_version");
  CHECK(rows[1].rfind("baseline,0,", 0) == 0);
  CHECK(rows[2].rfind("navigation,0,", 0) == 0);
  CHECK(rows[3].rfind("baseline,mean,", 0) == 0);
  CHECK(rows.back().rfind("reduction_percent,all,", 0) == 0);
  CHECK(out.str().find("action_reduction=") != std::string::npos);

  spec = spec_for("shape.json", dir / "sweep.csv");
  spec.trials = 1;
  spec.alphas = "0.85";
  spec.trainer.max_actions = 200;
  REQUIRE(cli::cmd_sweep(spec, out, err) == cli::kExitOk);
  const auto sweep = lines(slurp(dir / "sweep.csv"));
  REQUIRE(sweep.size() == 3);
  CHECK(sweep[0] == "alpha,policy,success_rate,mean_error,stddev_error,ratio,schema_version");
  // No correct model within 200 actions: error and ratio columns stay empty.
  CHECK(sweep[1] == "0.85,baseline,0,,,,1");
  CHECK(sweep[2] == "0.85,navigation,0,,,,1");
  fs::remove_all(dir);
}
