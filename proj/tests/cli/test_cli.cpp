// End-to-end checks that drive the installed binary through LARE_BIN. Every
// test works inside its own temp directory and asserts on exit codes and the
// files the commands leave behind.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "lare/evaluation.hpp"
#include "lare/interactions.hpp"
#include "lare/models.hpp"

namespace fs = std::filesystem;

namespace {

std::string bin() {
  const char* path = std::getenv("LARE_BIN");
  REQUIRE_MESSAGE(path != nullptr, "LARE_BIN must point at the lare binary");
  return path;
}

int run(const std::string& args, bool quiet = true) {
  std::string cmd = bin() + " " + args;
  if (quiet) cmd += " > /dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), ("missing file " + path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("lare_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string operator/(const std::string& leaf) const {
    return (path / leaf).string();
  }
  static inline int counter = 0;
};

// One synthesized event file + prepared split shared by the pipeline tests.
struct Pipeline {
  TempDir dir;
  std::string matrix, data;

  explicit Pipeline(uint64_t seed = 3) {
    matrix = dir / "events.mtx";
    data = dir / "data";
    REQUIRE(run("synth --users 400 --items 300 --events 16000 --seed " +
                std::to_string(seed) + " --out " + matrix) == 0);
    REQUIRE(run("prepare --input " + matrix +
                " --protocol strong --ratios 0.8,0.1,0.1 --foldin 0.75"
                " --seed 5 --homophily-sample 20000 --out " +
                data) == 0);
  }
};

}  // namespace

TEST_CASE("version and usage errors") {
  CHECK(run("--version") == 0);
  CHECK(run("") == 2);                    // a subcommand is required
  CHECK(run("fit") == 2);                 // missing required options
  CHECK(run("frobnicate") == 2);          // unknown subcommand
  CHECK(run("synth --bogus 1 --out x") == 2);
}

TEST_CASE("missing input maps to the I/O exit code") {
  TempDir dir;
  CHECK(run("prepare --input " + (dir / "absent.tsv") + " --out " +
            (dir / "out")) == 4);
  CHECK(run("fit --data " + (dir / "nope") + " --lambda 1 --out " +
            (dir / "model")) == 4);
}

TEST_CASE("prepare writes a loadable split with stats") {
  Pipeline p;
  for (const char* leaf :
       {"train.mtx", "test_foldin.mtx", "test_heldout.mtx", "test_users.tsv",
        "val_foldin.mtx", "users.tsv", "items.tsv", "stats.tsv", "split.txt",
        "manifest.txt"})
    CHECK_MESSAGE(fs::exists(fs::path(p.data) / leaf), leaf);

  auto train = lare::read_matrix(fs::path(p.data) / "train.mtx");
  CHECK(train.rows() == 320);  // floor(0.8 * 400)
  CHECK(train.min_item_degree() >= 1);
}

TEST_CASE("events ingest honors delimiter and rating threshold") {
  TempDir dir;
  std::string events = dir / "events.csv";
  {
    std::ofstream out(events);
    out << "user,item,rating\n";
    for (const char* user : {"a", "b", "c", "d", "e"})
      for (const char* item : {"x", "y", "z"})
        out << user << ',' << item << ",5\n";
    out << "a,w,2\nb,w,1\n";  // below the threshold, w disappears entirely
  }
  std::string data = dir / "data";
  REQUIRE(run("prepare --input " + events +
              " --delimiter comma --rating-threshold 4"
              " --protocol weak --ratios 0.5,0.5 --seed 1 --out " +
              data) == 0);
  auto train = lare::read_matrix(fs::path(data) / "train.mtx");
  CHECK(train.rows() == 5);
  CHECK(train.cols() <= 3);
  // every user has degree 3, so the per-user cut keeps ceil(1.5) = 2 cells
  CHECK(train.nnz() == 10);
}

TEST_CASE("fit, evaluate, and topk run against a prepared split") {
  Pipeline p;
  std::string model_dir = p.dir / "model";
  REQUIRE(run("fit --data " + p.data +
              " --model lae --recipe dan --alpha 0.3 --beta 0.8"
              " --lambda 2 --out " +
              model_dir) == 0);
  std::string model = model_dir + "/model.bin";
  CHECK(fs::exists(model));
  CHECK(fs::exists(model_dir + "/model.bin.meta"));
  CHECK(fs::exists(model_dir + "/fit.tsv"));

  auto loaded = lare::load_model(model);
  CHECK(loaded.config.lambda == 2.0);
  CHECK(loaded.config.recipe.alpha == 0.3);

  std::string eval_dir = p.dir / "eval";
  REQUIRE(run("evaluate --data " + p.data + " --model " + model +
              " --split test --k 5,10 --out " + eval_dir) == 0);
  auto report = lare::read_report(fs::path(eval_dir) / "report.tsv");
  CHECK(report.rows.size() == 6 * 2 * 2);  // slices x metrics x cutoffs
  CHECK(report.get(lare::Slice::AOA, "ndcg", 10) > 0.0);

  std::string pop_dir = p.dir / "pop";
  REQUIRE(run("evaluate --data " + p.data +
              " --most-popular --split test --k 10 --out " + pop_dir) == 0);
  auto pop = lare::read_report(fs::path(pop_dir) / "report.tsv");
  CHECK(pop.get(lare::Slice::AOA, "ndcg", 10) > 0.0);

  std::string topk_dir = p.dir / "topk";
  REQUIRE(run("topk --data " + p.data + " --model " + model +
              " --users 5 --topk 8 --out " + topk_dir) == 0);
  std::string lists = slurp(fs::path(topk_dir) / "topk.tsv");
  CHECK(lists.find("user\tuser_id\trank") == 0);
  CHECK(std::count(lists.begin(), lists.end(), '\n') == 1 + 5 * 8);
}

TEST_CASE("model and dataset must match") {
  Pipeline a(3), b(11);
  std::string model_dir = a.dir / "model";
  REQUIRE(run("fit --data " + a.data + " --lambda 50 --out " + model_dir) == 0);
  CHECK(run("evaluate --data " + b.data + " --model " + model_dir +
            "/model.bin --out " + (b.dir / "eval")) == 2);
}

TEST_CASE("bad solver configs exit with the usage code") {
  Pipeline p;
  std::string out = p.dir / "bad";
  CHECK(run("fit --data " + p.data + " --lambda -1 --out " + out) == 2);
  CHECK(run("fit --data " + p.data +
            " --recipe rw --alpha 0.5 --lambda 1 --out " + out) == 2);
  CHECK(run("fit --data " + p.data +
            " --model ease --dropout 0.5 --out " + out) == 2);
  CHECK(run("evaluate --data " + p.data + " --split train --most-popular"
            " --out " + out) == 2);
}

TEST_CASE("analyze reports stats, spectra, and weight mass") {
  Pipeline p;
  std::string model_dir = p.dir / "model";
  REQUIRE(run("fit --data " + p.data + " --lambda 50 --out " + model_dir) == 0);
  std::string out = p.dir / "analysis";
  REQUIRE(run("analyze --data " + p.data + " --spectra --betas 0,1"
              " --lambda 1 --model " +
              model_dir + "/model.bin --plot --out " + out) == 0);
  CHECK(fs::exists(fs::path(out) / "stats.tsv"));
  CHECK(fs::exists(fs::path(out) / "spectra.svg"));
  CHECK(fs::exists(fs::path(out) / "weight_summary.tsv"));

  std::string spectra = slurp(fs::path(out) / "spectra.tsv");
  // one line per item and beta, plus the header
  auto train = lare::read_matrix(fs::path(p.data) / "train.mtx");
  CHECK(std::count(spectra.begin(), spectra.end(), '\n') ==
        1 + 2 * train.cols());
}

TEST_CASE("sweep selects on validation and honors the config file") {
  Pipeline p;
  std::string out = p.dir / "sweep";
  REQUIRE(run("sweep --data " + p.data +
              " --models lae --recipes dan --lambdas 0.5,2"
              " --alphas 0.5 --betas 0,1 --k 10 --select-k 10 --out " +
              out) == 0);
  std::string table = slurp(fs::path(out) / "sweep.tsv");
  CHECK(std::count(table.begin(), table.end(), '\n') == 1 + 4);
  CHECK(table.find("\t1\n") != std::string::npos);  // someone won
  CHECK(fs::exists(fs::path(out) / "best_report.tsv"));

  // The config file takes precedence over the conflicting flags.
  std::string cfg = p.dir / "sweep.json";
  {
    std::ofstream js(cfg);
    js << R"({"models": ["ease"], "recipes": ["none"], "lambdas": [20, 50],
              "selection": {"slice": "aoa", "metric": "ndcg", "k": 10},
              "k": [10]})";
  }
  std::string out2 = p.dir / "sweep2";
  REQUIRE(run("sweep --data " + p.data +
              " --models lae --recipes dan --config " + cfg + " --out " +
              out2) == 0);
  std::string table2 = slurp(fs::path(out2) / "sweep.tsv");
  CHECK(std::count(table2.begin(), table2.end(), '\n') == 1 + 2);
  CHECK(table2.find("ease") != std::string::npos);
  CHECK(table2.find("dan") == std::string::npos);

  std::string bad_cfg = p.dir / "bad.json";
  {
    std::ofstream js(bad_cfg);
    js << R"({"lambda_grid": [1]})";
  }
  CHECK(run("sweep --data " + p.data + " --config " + bad_cfg + " --out " +
            (p.dir / "sweep3")) == 2);
}

TEST_CASE("reruns are byte-identical") {
  Pipeline p;
  auto fit_eval = [&](const std::string& tag) {
    std::string model_dir = p.dir / ("model_" + tag);
    std::string eval_dir = p.dir / ("eval_" + tag);
    REQUIRE(run("fit --data " + p.data +
                " --model ease --recipe dan --alpha 0.4 --beta 0.9"
                " --lambda 1 --out " +
                model_dir) == 0);
    REQUIRE(run("evaluate --data " + p.data + " --model " + model_dir +
                "/model.bin --split test --k 5,20 --out " + eval_dir) == 0);
    return std::pair{slurp(fs::path(model_dir) / "model.bin"),
                     slurp(fs::path(eval_dir) / "report.tsv")};
  };
  auto [model_a, report_a] = fit_eval("a");
  auto [model_b, report_b] = fit_eval("b");
  CHECK(model_a == model_b);
  CHECK(report_a == report_b);

  // prepare is deterministic in the seed too
  std::string again = p.dir / "data_again";
  REQUIRE(run("prepare --input " + p.matrix +
              " --protocol strong --ratios 0.8,0.1,0.1 --foldin 0.75"
              " --seed 5 --homophily-sample 20000 --out " +
              again) == 0);
  CHECK(slurp(fs::path(p.data) / "train.mtx") ==
        slurp(fs::path(again) / "train.mtx"));
  CHECK(slurp(fs::path(p.data) / "stats.tsv") ==
        slurp(fs::path(again) / "stats.tsv"));
}

TEST_CASE("threads flag and environment agree on results") {
  Pipeline p;
  std::string flag_out = p.dir / "sw_flag";
  std::string env_out = p.dir / "sw_env";
  REQUIRE(run("sweep --data " + p.data +
              " --models lae --recipes sym --lambdas 0.5,1,2 --k 10"
              " --select-k 10 --threads 2 --out " +
              flag_out) == 0);
  std::string env_cmd = "LARE_THREADS=2 " + bin() + " sweep --data " + p.data +
                        " --models lae --recipes sym --lambdas 0.5,1,2"
                        " --k 10 --select-k 10 --out " +
                        env_out + " > /dev/null 2>&1";
  int rc = std::system(env_cmd.c_str());
  REQUIRE(rc != -1);
  REQUIRE(WEXITSTATUS(rc) == 0);
  CHECK(slurp(fs::path(flag_out) / "sweep.tsv") ==
        slurp(fs::path(env_out) / "sweep.tsv"));

  std::string bad_env = "LARE_THREADS=zero " + bin() + " sweep --data " +
                        p.data + " --models lae --recipes sym --lambdas 1"
                        " --out " +
                        (p.dir / "sw_bad") + " > /dev/null 2>&1";
  rc = std::system(bad_env.c_str());
  REQUIRE(rc != -1);
  CHECK(WEXITSTATUS(rc) == 2);
}
