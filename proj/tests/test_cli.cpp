#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const std::string kBinary = CLI_BINARY_PATH;

int run(const std::string& args, const std::string& stdout_file = "") {
  std::string cmd = kBinary + " " + args;
  if (!stdout_file.empty()) cmd += " > " + stdout_file;
  cmd += " 2>/dev/null";
  int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

long count_lines(const std::string& text) {
  long n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

}  // namespace

TEST_CASE("gen-data writes the dataset and repeats byte-identically") {
  TempDir dir("overparam_cli_gen");
  std::string out = dir.file("d.csv");
  CHECK(run("gen-data --kind orthogonal --n 8 --seed 1 --out " + out) == 0);
  std::string first = slurp(out);
  CHECK(count_lines(first) == 9);  // header + 8 rows

  CHECK(run("gen-data --kind orthogonal --n 8 --seed 1 --out " + out) == 0);
  CHECK(slurp(out) == first);

  CHECK(run("gen-data --kind gaussian --n 4 --d 6 --seed 2 --out " + out) == 0);
  CHECK(run("gen-data --kind gaussian --n 4 --seed 2 --out " + out) == 1);
}

TEST_CASE("gen-data without --n exits 1") {
  TempDir dir("overparam_cli_gen2");
  CHECK(run("gen-data --kind orthogonal --seed 1 --out " + dir.file("d.csv")) ==
        1);
}

TEST_CASE("subcommand help lists flags and defaults") {
  TempDir dir("overparam_cli_help");
  std::string out = dir.file("help.txt");
  CHECK(run("train --help", out) == 0);
  std::string text = slurp(out);
  for (const char* flag : {"--data", "--m", "--kappa", "--eta", "--steps",
                           "--reg-beta", "--seed", "--trace", "--record-every"})
    CHECK(text.find(flag) != std::string::npos);
  CHECK(text.find("default") != std::string::npos);
}

TEST_CASE("constants reports the orthogonal-data values") {
  TempDir dir("overparam_cli_constants");
  std::string data = dir.file("d.csv");
  REQUIRE(run("gen-data --kind orthogonal --n 8 --seed 1 --out " + data) == 0);

  std::string json_path = dir.file("c.json");
  std::string stdout_path = dir.file("stdout.txt");
  CHECK(run("constants --data " + data + " --samples 50 --seed 3 --out " +
            json_path, stdout_path) == 0);
  auto j = nlohmann::json::parse(slurp(json_path));
  CHECK(j["lambda"].get<double>() == 0.5);
  CHECK(j["alpha"].get<double>() == 0.5);
  CHECK(j["beta_var"].get<double>() == 0.25);
  CHECK(j["theta"].get<double>() == 0.0);
  CHECK(j["sample_count"].get<long>() == 50);

  // Repeat run: identical file bytes.
  std::string first = slurp(json_path);
  CHECK(run("constants --data " + data + " --samples 50 --seed 3 --out " +
            json_path) == 0);
  CHECK(slurp(json_path) == first);

  CHECK(run("constants --data " + data + " --samples 0 --seed 3") == 1);
}

TEST_CASE("train writes a trace and prints the chosen step size") {
  TempDir dir("overparam_cli_train");
  std::string data = dir.file("d.csv");
  REQUIRE(run("gen-data --kind orthogonal --n 8 --seed 1 --out " + data) == 0);

  std::string trace = dir.file("trace.csv");
  std::string stdout_path = dir.file("stdout.txt");
  CHECK(run("train --data " + data +
            " --m 256 --kappa 1 --eta auto:quartic --steps 0 --seed 4 "
            "--trace " + trace, stdout_path) == 0);
  CHECK(count_lines(slurp(trace)) == 2);  // header + single record
  std::string printed = slurp(stdout_path);
  CHECK(printed.find("0.001953125") != std::string::npos);
  CHECK(printed.find("final loss_sq") != std::string::npos);
}

TEST_CASE("train exits 2 on divergence") {
  TempDir dir("overparam_cli_diverge");
  std::string data = dir.file("d.csv");
  REQUIRE(run("gen-data --kind gaussian --n 10 --d 4 --seed 52 --out " + data) ==
          0);
  CHECK(run("train --data " + data +
            " --m 64 --kappa 1 --eta 100 --steps 2000 --seed 52 --trace " +
            dir.file("t.csv")) == 2);
}

TEST_CASE("predict emits the curve and the generalization bound") {
  TempDir dir("overparam_cli_predict");
  std::string data = dir.file("d.csv");
  REQUIRE(run("gen-data --kind orthogonal --n 8 --labels ones --seed 1 --out " +
              data) == 0);

  std::string out = dir.file("pred.csv");
  std::string stdout_path = dir.file("stdout.txt");
  CHECK(run("predict --data " + data + " --eta 0.1 --k-max 0 --seed 1 --out " +
            out, stdout_path) == 0);
  std::string csv = slurp(out);
  CHECK(count_lines(csv) == 2);  // header + k = 0
  // k = 0 row equals ||y|| = sqrt(8).
  CHECK(csv.find("0,2.8284271247461903") != std::string::npos);

  auto j = nlohmann::json::parse(slurp(stdout_path));
  CHECK(j["generalization_bound"].get<double>() == 2.0);
}

TEST_CASE("concentration subcommand modes") {
  TempDir dir("overparam_cli_conc");
  std::string data = dir.file("d.csv");
  REQUIRE(run("gen-data --kind orthogonal --n 8 --seed 7 --out " + data) == 0);

  SECTION("anti mode lands inside the interval") {
    std::string stdout_path = dir.file("anti.txt");
    CHECK(run("concentration --mode anti --sigma 1 --t 0.1 --samples 1000000 "
              "--seed 8 --out " + dir.file("anti.csv"), stdout_path) == 0);
    auto j = nlohmann::json::parse(slurp(stdout_path));
    double emp = j["empirical"].get<double>();
    CHECK(emp > 2.0 / 30.0);
    CHECK(emp < 0.08);
    CHECK(j["inside"].get<bool>());
  }

  SECTION("perturb mode with R = 0 reports zero statistics") {
    std::string stdout_path = dir.file("perturb.txt");
    CHECK(run("concentration --mode perturb --data " + data +
              " --m 128 --r 0 --trials 3 --seed 9 --out " +
              dir.file("perturb.csv"), stdout_path) == 0);
    auto j = nlohmann::json::parse(slurp(stdout_path));
    CHECK(j["violations"].get<long>() == 0);
    std::string csv = slurp(dir.file("perturb.csv"));
    CHECK(csv.find("0,0,0") != std::string::npos);
  }

  SECTION("gram mode with a single weight flags a violation") {
    std::string stdout_path = dir.file("gram.txt");
    CHECK(run("concentration --mode gram --data " + data +
              " --m 1 --trials 1 --seed 10 --out " + dir.file("gram.csv"),
              stdout_path) == 0);
    auto j = nlohmann::json::parse(slurp(stdout_path));
    CHECK(j["violations"].get<long>() == 1);
  }
}

TEST_CASE("experiment exits 3 when a verdict fails") {
  TempDir dir("overparam_cli_exp3");
  CHECK(run("experiment --preset convergence --n 8 --m 128 --eta 0 "
            "--steps 20 --samples 20 --seed 42 --out-dir " +
            dir.file("run")) == 3);
}

TEST_CASE("experiment runs are byte-identical across thread counts") {
  TempDir dir("overparam_cli_det");
  std::string run1 = dir.file("run1"), run2 = dir.file("run2");
  std::string base = "experiment --preset convergence --n 8 --m 512 "
                     "--eta auto:quartic --steps 30 --samples 50 --seed 42 ";
  int s1 = std::system(("OVERPARAM_THREADS=1 " + kBinary + " " + base +
                        "--out-dir " + run1 + " >/dev/null 2>&1").c_str());
  int s2 = std::system(("OVERPARAM_THREADS=4 " + kBinary + " " + base +
                        "--out-dir " + run2 + " >/dev/null 2>&1").c_str());
  REQUIRE(WEXITSTATUS(s1) == 0);
  REQUIRE(WEXITSTATUS(s2) == 0);
  for (const char* name :
       {"config.json", "constants.json", "trace.csv", "bound.csv",
        "verdicts.csv"})
    CHECK(slurp(run1 + "/" + name) == slurp(run2 + "/" + name));
}

TEST_CASE("report renders deterministic SVGs and names missing files") {
  TempDir dir("overparam_cli_report");
  std::string run_dir = dir.file("run");
  REQUIRE(run("experiment --preset convergence --n 8 --m 512 "
              "--eta auto:quartic --steps 30 --samples 50 --seed 42 "
              "--out-dir " + run_dir) == 0);

  CHECK(run("report --run-dir " + run_dir + " --svg") == 0);
  std::string svg = run_dir + "/loss_vs_bound.svg";
  REQUIRE(fs::exists(svg));
  std::string first = slurp(svg);
  CHECK(first.find("<svg") != std::string::npos);
  CHECK(run("report --run-dir " + run_dir + " --svg") == 0);
  CHECK(slurp(svg) == first);

  fs::remove(run_dir + "/trace.csv");
  std::string stderr_path = dir.file("err.txt");
  int status = std::system((kBinary + " report --run-dir " + run_dir +
                            " --svg >/dev/null 2> " + stderr_path).c_str());
  CHECK(WEXITSTATUS(status) == 1);
  CHECK(slurp(stderr_path).find("trace.csv") != std::string::npos);
}
