#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace {

struct Run {
  int status = -1;
  std::string out;
};

// Runs the CLI with the given arguments; stderr is folded into the output when asked.
Run cli(const std::string& args, bool with_stderr = false) {
  std::string cmd = std::string(RAREMETA_CLI) + " " + args + (with_stderr ? " 2>&1" : " 2>/dev/null");
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

const std::string kData = RAREMETA_DATA_DIR;

}  // namespace

TEST_CASE("wip-sigma") {
  auto r = cli("wip-sigma 250");
  REQUIRE(r.status == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["sigma"].get<double>() == doctest::Approx(2.81707).epsilon(1e-5));
  CHECK(j["ess"].get<double>() == doctest::Approx(2.0162).epsilon(1e-4));

  r = cli("wip-sigma --delta 7.0993270651566330");
  REQUIRE(r.status == 0);
  j = nlohmann::json::parse(r.out);
  CHECK(j["sigma"].get<double>() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(j["ess"].get<double>() == doctest::Approx(16.0).epsilon(1e-8));

  r = cli("wip-sigma 1", true);
  CHECK(r.status != 0);
  CHECK(r.out.find("delta") != std::string::npos);
}

TEST_CASE("forest") {
  auto r = cli("forest --data " + kData + "/crins_ptld.csv --format csv");
  REQUIRE(r.status == 0);
  CHECK(r.out.rfind("study,log_or,se,ci_low,ci_high,correction_applied\n", 0) == 0);
  CHECK(r.out.find("Ganschow,1.117131336435") != std::string::npos);
  r = cli("forest --data " + kData + "/crins_death.csv");
  REQUIRE(r.status == 0);
  const auto j = nlohmann::json::parse(r.out);
  REQUIRE(j["rows"].size() == 4);
  for (const auto& row : j["rows"]) CHECK_FALSE(row["correction_applied"].get<bool>());
}

TEST_CASE("fit output and determinism") {
  const std::string args = "fit --data " + kData +
                           "/crins_ptld.csv --method wip,vague,mle --delta 250 "
                           "--tau-prior-dist half-normal --tau-prior 0.5 --chains 2 --iter 600 "
                           "--warmup 300 --seed 4";
  const auto a = cli(args);
  REQUIRE(a.status == 0);
  const auto b = cli(args);
  CHECK(a.out == b.out);
  const auto j = nlohmann::json::parse(a.out);
  REQUIRE(j["results"].size() == 3);
  CHECK(j["seed"].get<int>() == 4);
  CHECK(j["results"][0]["method"] == "wip");
  CHECK(j["results"][1]["priors"]["theta"]["sd"].get<double>() == 100.0);
  CHECK(j["results"][0].contains("rhat_theta"));
  CHECK(j["results"][0].contains("divergences"));
  CHECK(j["results"][2]["tau_hat"].get<double>() <= 0.01);
  // JSON re-parses to the same document.
  CHECK(nlohmann::json::parse(j.dump()) == j);

  const auto env = cli("fit --data " + kData + "/crins_death.csv --method mle --format csv");
  REQUIRE(env.status == 0);
  CHECK(env.out.rfind("method,", 0) == 0);
}

TEST_CASE("configuration errors") {
  auto r = cli("fit --data " + kData + "/crins_death.csv --delta 250 --theta-prior 0,2.82", true);
  CHECK(r.status != 0);
  CHECK(r.out.find("mutually exclusive") != std::string::npos);

  r = cli("fit --data /no/such.csv", true);
  CHECK(r.status != 0);
  CHECK(r.out.find("/no/such.csv") != std::string::npos);

  r = cli("fit --data " + kData + "/crins_death.csv --method reml", true);
  CHECK(r.status != 0);

  r = cli("simulate --k 4 --replications 2", true);
  CHECK(r.status != 0);
}

TEST_CASE("config file") {
  const std::string path = "raremeta_cli_test_config.json";
  {
    std::ofstream f(path);
    f << R"({"method": ["mle"], "format": "csv", "gh-order": 9})";
  }
  auto r = cli("fit --data " + kData + "/crins_death.csv --config " + path);
  REQUIRE(r.status == 0);
  CHECK(r.out.rfind("method,", 0) == 0);
  CHECK(r.out.find("\nmle,") != std::string::npos);
  std::remove(path.c_str());
}

TEST_CASE("simulate rows and determinism") {
  const std::string args =
      "simulate --kind rare --k 3 --theta 0 --replications 3 --iter 200 --warmup 100 --seed 5 "
      "--format csv --quiet";
  const auto a = cli(args);
  REQUIRE(a.status == 0);
  const auto b = cli(args);
  CHECK(a.out == b.out);
  std::istringstream lines(a.out);
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) ++count;
  CHECK(count == 4);  // header plus one row per method
  CHECK(a.out.find(",vague,100,") != std::string::npos);
}
