#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

// End-to-end coverage of the command-line surface; the binary path arrives
// through MIXOPT_CLI (set by CTest).

#include "mixopt/rng.hpp"

#include "support.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

namespace {

std::string cli_path() {
  const char* path = std::getenv("MIXOPT_CLI");
  REQUIRE_MESSAGE(path != nullptr, "MIXOPT_CLI must point at the binary");
  return path;
}

int run_cli(const std::string& args, const std::filesystem::path& log) {
  const std::string cmd = cli_path() + " " + args + " >" + log.string() +
                          ".out 2>" + log.string() + ".err";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Dense synthetic records over `n` tasks with logprobs and distributions.
void write_fixture_jsonl(const std::filesystem::path& path, int n,
                         int examples, std::uint64_t seed) {
  std::ofstream out(path);
  out.precision(17);
  mixopt::Rng rng(seed);
  for (int model = 0; model < n; ++model) {
    for (int eval = 0; eval < n; ++eval) {
      for (int ex = 0; ex < examples; ++ex) {
        std::vector<double> dist(5);
        double sum = 0.0;
        for (double& v : dist) {
          v = 0.02 + rng.canonical();
          sum += v;
        }
        out << "{\"model_task\":\"task" << model << "\",\"eval_task\":\"task"
            << eval << "\",\"example_id\":\"e" << ex << "\",\"logprob\":"
            << std::log(0.05 + 0.9 * rng.canonical()) << ",\"dist\":[";
        for (size_t i = 0; i < dist.size(); ++i) {
          out << (i ? "," : "") << dist[i] / sum;
        }
        out << "]}\n";
      }
    }
  }
}

}  // namespace

TEST_CASE("pipeline: similarity -> spectrum -> solve -> discover -> sample") {
  testsupport::TempDir dir("cli_pipe");
  const auto preds = dir.path("preds.jsonl");
  write_fixture_jsonl(preds, 3, 4, 42);

  const auto matrix = dir.path("S.json");
  CHECK(run_cli("similarity --in " + preds.string() + " --metric jsd --out " +
                    matrix.string() + " --threads 2",
                dir.path("log1")) == 0);

  const auto spectrum = dir.path("spec.json");
  CHECK(run_cli("spectrum --in " + matrix.string() + " --out " +
                    spectrum.string(),
                dir.path("log2")) == 0);
  CHECK(std::filesystem::exists(dir.path("spec.csv")));

  const auto solution = dir.path("sol.json");
  CHECK(run_cli("solve --in " + matrix.string() + " --out " +
                    solution.string(),
                dir.path("log3")) == 0);

  const auto trace = dir.path("trace.json");
  CHECK(run_cli("discover --in " + matrix.string() + " --k 2 --out " +
                    trace.string(),
                dir.path("log4")) == 0);

  const auto caps = dir.path("caps.csv");
  {
    std::ofstream out(caps);
    out << "task0,4000\ntask1,4000\ntask2,4000\n";
  }
  const auto plan = dir.path("plan.json");
  CHECK(run_cli("sample --in " + solution.string() +
                    " --budget 3000 --seed 9 --capacities " + caps.string() +
                    " --out " + plan.string(),
                dir.path("log5")) == 0);
  CHECK(std::filesystem::exists(dir.path("plan.manifest.csv")));
}

TEST_CASE("reruns are byte identical") {
  testsupport::TempDir dir("cli_rerun");
  const auto preds = dir.path("preds.jsonl");
  write_fixture_jsonl(preds, 3, 3, 7);

  const auto m1 = dir.path("S1.json");
  const auto m2 = dir.path("S2.json");
  REQUIRE(run_cli("similarity --in " + preds.string() +
                      " --metric pmi --out " + m1.string(),
                  dir.path("log1")) == 0);
  REQUIRE(run_cli("similarity --in " + preds.string() +
                      " --metric pmi --out " + m2.string(),
                  dir.path("log2")) == 0);
  CHECK(slurp(m1) == slurp(m2));

  const auto s1 = dir.path("sol1.json");
  const auto s2 = dir.path("sol2.json");
  REQUIRE(run_cli("solve --in " + m1.string() + " --out " + s1.string(),
                  dir.path("log3")) == 0);
  REQUIRE(run_cli("solve --in " + m1.string() + " --out " + s2.string(),
                  dir.path("log4")) == 0);
  CHECK(slurp(s1) == slurp(s2));

  const auto p1 = dir.path("plan1.json");
  const auto p2 = dir.path("plan2.json");
  REQUIRE(run_cli("sample --in " + s1.string() +
                      " --budget 1000 --seed 3 --out " + p1.string(),
                  dir.path("log5")) == 0);
  REQUIRE(run_cli("sample --in " + s1.string() +
                      " --budget 1000 --seed 3 --out " + p2.string(),
                  dir.path("log6")) == 0);
  CHECK(slurp(p1) == slurp(p2));
}

TEST_CASE("exit code 2 on malformed input, naming the example") {
  testsupport::TempDir dir("cli_badlen");
  const auto preds = dir.path("preds.jsonl");
  {
    std::ofstream out(preds);
    out << R"({"model_task":"a","eval_task":"b","example_id":"weird","dist":[0.5,0.5]})"
        << "\n"
        << R"({"model_task":"b","eval_task":"b","example_id":"weird","dist":[0.2,0.3,0.5]})"
        << "\n"
        << R"({"model_task":"b","eval_task":"a","example_id":"x","dist":[1.0,0.0]})"
        << "\n"
        << R"({"model_task":"a","eval_task":"a","example_id":"x","dist":[1.0,0.0]})"
        << "\n";
  }
  const int rc = run_cli("similarity --in " + preds.string() +
                             " --metric jsd --out " +
                             dir.path("S.json").string(),
                         dir.path("log"));
  CHECK(rc == 2);
  CHECK(slurp(dir.path("log.err")).find("weird") != std::string::npos);
}

TEST_CASE("partial coverage warns on stderr but succeeds") {
  testsupport::TempDir dir("cli_warn");
  const auto preds = dir.path("preds.jsonl");
  {
    std::ofstream out(preds);
    out << R"({"model_task":"a","eval_task":"b","example_id":"e0","logprob":-0.2})"
        << "\n"
        << R"({"model_task":"a","eval_task":"b","example_id":"e1","logprob":-0.2})"
        << "\n"
        << R"({"model_task":"b","eval_task":"b","example_id":"e0","logprob":-0.4})"
        << "\n"
        << R"({"model_task":"b","eval_task":"a","example_id":"x","logprob":-0.1})"
        << "\n"
        << R"({"model_task":"a","eval_task":"a","example_id":"x","logprob":-0.3})"
        << "\n";
  }
  const int rc = run_cli("similarity --in " + preds.string() +
                             " --metric pmi --out " +
                             dir.path("S.json").string(),
                         dir.path("log"));
  CHECK(rc == 0);
  CHECK(slurp(dir.path("log.err")).find("warning:") != std::string::npos);
}

TEST_CASE("exit code 3 when pairs are incomplete") {
  testsupport::TempDir dir("cli_incomplete");
  const auto preds = dir.path("preds.jsonl");
  {
    std::ofstream out(preds);
    out << R"({"model_task":"a","eval_task":"a","example_id":"x","logprob":-0.5})"
        << "\n"
        << R"({"model_task":"b","eval_task":"b","example_id":"y","logprob":-0.5})"
        << "\n";
  }
  const int rc = run_cli("similarity --in " + preds.string() +
                             " --metric pmi --out " +
                             dir.path("S.json").string(),
                         dir.path("log"));
  CHECK(rc == 3);
  CHECK(slurp(dir.path("log.err")).find("(a, b)") != std::string::npos);
}

TEST_CASE("exit code 2 for shift off on an indefinite matrix") {
  testsupport::TempDir dir("cli_notpsd");
  const auto matrix = dir.path("S.csv");
  {
    std::ofstream out(matrix);
    out << "a,b\n0,1\n1,0\n";
  }
  const int rc = run_cli("solve --in " + matrix.string() +
                             " --shift off --out " +
                             dir.path("sol.json").string(),
                         dir.path("log"));
  CHECK(rc == 2);
  CHECK(slurp(dir.path("log.err")).find("NotPsd") != std::string::npos);
}

TEST_CASE("exit code 2 for a budget beyond capacity") {
  testsupport::TempDir dir("cli_cap");
  const auto preds = dir.path("preds.jsonl");
  write_fixture_jsonl(preds, 2, 2, 3);
  const auto matrix = dir.path("S.json");
  REQUIRE(run_cli("similarity --in " + preds.string() +
                      " --metric jsd --out " + matrix.string(),
                  dir.path("log1")) == 0);
  const auto solution = dir.path("sol.json");
  REQUIRE(run_cli("solve --in " + matrix.string() + " --out " +
                      solution.string(),
                  dir.path("log2")) == 0);
  const auto caps = dir.path("caps.csv");
  {
    std::ofstream out(caps);
    out << "task0,3\ntask1,3\n";
  }
  const int rc = run_cli("sample --in " + solution.string() +
                             " --budget 100 --capacities " + caps.string() +
                             " --out " + dir.path("plan.json").string(),
                         dir.path("log3"));
  CHECK(rc == 2);
}

TEST_CASE("exit code 2 for a discovery budget out of range") {
  testsupport::TempDir dir("cli_budget");
  const auto matrix = dir.path("S.csv");
  {
    std::ofstream out(matrix);
    out << "a,b\n0,0.5\n0.5,0\n";
  }
  const int rc = run_cli("discover --in " + matrix.string() +
                             " --k 5 --out " + dir.path("t.json").string(),
                         dir.path("log"));
  CHECK(rc == 2);
}

TEST_CASE("gamma command reports the minimum observed ratio") {
  testsupport::TempDir dir("cli_gamma");
  const auto report = dir.path("gamma.json");
  const int rc = run_cli("gamma --n 6 --trials 20 --seed 5 --out " +
                             report.string(),
                         dir.path("log"));
  CHECK(rc == 0);
  CHECK(std::filesystem::exists(dir.path("gamma.hist.csv")));
  CHECK(slurp(dir.path("log.out")).find("min observed ratio") !=
        std::string::npos);
}

TEST_CASE("MIXOPT_THREADS env var feeds --threads") {
  testsupport::TempDir dir("cli_envthreads");
  const auto preds = dir.path("preds.jsonl");
  write_fixture_jsonl(preds, 3, 3, 15);
  const auto m1 = dir.path("S1.json");
  const auto m2 = dir.path("S2.json");
  REQUIRE(run_cli("similarity --in " + preds.string() +
                      " --metric jsd --threads 1 --out " + m1.string(),
                  dir.path("log1")) == 0);
  const std::string env_cmd = "MIXOPT_THREADS=3 " + cli_path() +
                              " similarity --in " + preds.string() +
                              " --metric jsd --out " + m2.string() +
                              " >/dev/null 2>/dev/null";
  REQUIRE(WEXITSTATUS(std::system(env_cmd.c_str())) == 0);
  CHECK(slurp(m1) == slurp(m2));
}

TEST_CASE("config file supplies defaults that flags override") {
  testsupport::TempDir dir("cli_config");
  const auto matrix = dir.path("S.csv");
  {
    std::ofstream out(matrix);
    out << "a,b,c\n0,0.5,0.2\n0.5,0,0.4\n0.2,0.4,0\n";
  }
  const auto config = dir.path("run.ini");
  {
    std::ofstream out(config);
    out << "[solve]\nbeta=40\nlambda=10\n";
  }
  const auto s1 = dir.path("sol1.json");
  REQUIRE(run_cli("--config " + config.string() + " solve --in " +
                      matrix.string() + " --out " + s1.string(),
                  dir.path("log1")) == 0);
  CHECK(slurp(s1).find("\"beta\": 40") != std::string::npos);

  const auto s2 = dir.path("sol2.json");
  REQUIRE(run_cli("--config " + config.string() + " solve --beta 80 --in " +
                      matrix.string() + " --out " + s2.string(),
                  dir.path("log2")) == 0);
  CHECK(slurp(s2).find("\"beta\": 80") != std::string::npos);
}
