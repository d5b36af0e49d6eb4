#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace {

namespace fs = std::filesystem;

const std::string kCli = MOMEST_CLI_PATH;
const fs::path kConfigs = MOMEST_CONFIG_DIR;
const fs::path kScratch = fs::path(MOMEST_TEST_SCRATCH) / "cli";

int run(const std::string& args, const fs::path& stdout_file = {}) {
  std::string cmd = kCli + " " + args;
  if (!stdout_file.empty()) {
    cmd += " > " + stdout_file.string() + " 2>/dev/null";
  } else {
    cmd += " > /dev/null 2>&1";
  }
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("cli estimate prints an EstimateResult as JSON") {
  fs::create_directories(kScratch);
  const fs::path out = kScratch / "estimate.json";
  REQUIRE(run("estimate --problem mean-1d --n 50 --seed 3 --estimator cue", out) == 0);
  const auto j = nlohmann::json::parse(slurp(out));
  CHECK(j["converged"].get<bool>());
  CHECK(j["theta_hat"].size() == 1);
  CHECK(std::abs(j["theta_hat"][0].get<double>() - 1.0) < 0.5);

  const fs::path gel_out = kScratch / "estimate-gel.json";
  REQUIRE(run("estimate --problem normal-mean --n 60 --seed 3 --estimator gel "
              "--divergence et",
              gel_out) == 0);
  const auto g = nlohmann::json::parse(slurp(gel_out));
  CHECK(g["gel_weights"].size() == 60);
}

TEST_CASE("cli bounds reports the analytic normal-mean values") {
  fs::create_directories(kScratch);
  const fs::path out = kScratch / "bounds.json";
  REQUIRE(run("bounds --problem normal-mean --identity", out) == 0);
  const auto j = nlohmann::json::parse(slurp(out));
  CHECK(std::abs(j["B"][0][0].get<double>() - 1.0) < 1e-12);
  CHECK(std::abs(j["B_M"][0][0].get<double>() - 1.32) < 1e-12);
}

TEST_CASE("cli montecarlo: smoke config runs and is byte-deterministic") {
  fs::create_directories(kScratch);
  const std::string cfg = (kConfigs / "nm-smoke.json").string();
  const fs::path out_a = kScratch / "smoke-a";
  const fs::path out_b = kScratch / "smoke-b";
  REQUIRE(run("montecarlo " + cfg + " --no-timestamp --out " + out_a.string()) == 0);
  REQUIRE(run("montecarlo " + cfg + " --no-timestamp --out " + out_b.string()) == 0);
  const std::string csv_a = slurp(out_a.string() + ".csv");
  CHECK(!csv_a.empty());
  CHECK(csv_a == slurp(out_b.string() + ".csv"));
  CHECK(slurp(out_a.string() + ".json") == slurp(out_b.string() + ".json"));
}

TEST_CASE("cli montecarlo rejects a malformed config with a named field") {
  fs::create_directories(kScratch);
  const fs::path cfg = kScratch / "bad-config.json";
  {
    std::ofstream out(cfg);
    out << R"({"problem": "normal-mean", "n": 100, "replications": 2,
               "base_seed": 0, "estimators": [{"kind": "gel", "divergence": "klx"}],
               "output": ")" << (kScratch / "bad").string() << R"("})";
  }
  const fs::path diag = kScratch / "bad-stderr.txt";
  const int rc = std::system((kCli + " montecarlo " + cfg.string() + " 2> " +
                              diag.string() + " > /dev/null")
                                 .c_str());
  CHECK(WEXITSTATUS(rc) == 1);
  const std::string err = slurp(diag);
  CHECK(err.find("estimators[0].divergence") != std::string::npos);
  CHECK(err.find("klx") != std::string::npos);
}

TEST_CASE("cli rate: smoke config runs and is byte-deterministic") {
  fs::create_directories(kScratch);
  const std::string cfg = (kConfigs / "nm-rate-smoke.json").string();
  const fs::path out_a = kScratch / "rate-a";
  const fs::path out_b = kScratch / "rate-b";
  REQUIRE(run("rate " + cfg + " --no-timestamp --out " + out_a.string()) == 0);
  REQUIRE(run("rate " + cfg + " --no-timestamp --out " + out_b.string()) == 0);
  const std::string csv = slurp(out_a.string() + ".csv");
  CHECK(csv.rfind("m,phi_m,mean_sq_diff,stderr,n_var_theta_m,failures", 0) == 0);
  CHECK(csv == slurp(out_b.string() + ".csv"));
  CHECK(slurp(out_a.string() + ".json") == slurp(out_b.string() + ".json"));
}
