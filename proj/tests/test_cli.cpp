// Drives the installed CLI binary end to end (gen-data, pretrain, run with
// interruption + resume, sweep over a tiny grid, plot, validate-solver).

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#ifndef RLMESH_CLI_PATH
#error "RLMESH_CLI_PATH must point at the rlmesh binary"
#endif

namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) {
        path = fs::temp_directory_path() / name;
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

int run_cli(const std::string& args) {
    std::string cmd = std::string(RLMESH_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return rc == -1 ? -1 : WEXITSTATUS(rc);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_tiny_config(const std::string& path, int stop_after = 0) {
    std::ofstream os(path);
    os << R"({
  "problem": {"kind": "lorenz96"},
  "run": {
    "method": "uniform",
    "iterations": 3,
    "instances_per_iteration": 3,
    "budget": 10,
    "pretrain_instances": 6,
    "train_instances": 24,
    "test_instances": 5,
    "proxy_holdout": 4,
    "seeds": [0],
    "master_seed": 99,
    "stop_after_iteration": )"
       << stop_after << R"(
  },
  "agent": {"hidden_width": 16, "updates_per_iteration": 4, "pretrain_epochs": 2,
            "batch_size": 8}
})";
}

}  // namespace

TEST_CASE("cli: help and unknown flags") {
    CHECK(run_cli("--help") == 0);
    CHECK(run_cli("run --nonsense") != 0);
    CHECK(run_cli("") != 0);
}

TEST_CASE("cli: gen-data validation failures name the offending key") {
    TempDir tmp("rlmesh_cli_badcfg");
    std::string cfg = tmp.str() + "/bad.json";
    {
        std::ofstream os(cfg);
        os << R"({"run": {"iterations": 0}})";
    }
    CHECK(run_cli("gen-data --config " + cfg + " --out " + tmp.str() + "/d") != 0);
    {
        std::ofstream os(cfg);
        os << R"({"mystery_section": {}})";
    }
    CHECK(run_cli("gen-data --config " + cfg + " --out " + tmp.str() + "/d") != 0);
}

TEST_CASE("cli: full pipeline, idempotence, interruption and resume") {
    TempDir tmp("rlmesh_cli_e2e");
    std::string cfg = tmp.str() + "/cfg.json";
    write_tiny_config(cfg);
    std::string data = tmp.str() + "/data";
    std::string runs_a = tmp.str() + "/runs_a";
    std::string runs_b = tmp.str() + "/runs_b";

    // run before corpus exists: nonzero with a remediation hint (exit code only here)
    CHECK(run_cli("run --config " + cfg + " --data " + data + " --out " + runs_a) != 0);

    REQUIRE(run_cli("gen-data --config " + cfg + " --out " + data) == 0);
    CHECK(run_cli("gen-data --config " + cfg + " --out " + data) != 0);  // no --force
    std::string corpus_before = read_file(data + "/lorenz96_corpus.bin");
    REQUIRE(run_cli("gen-data --config " + cfg + " --out " + data + " --force") == 0);
    CHECK(read_file(data + "/lorenz96_corpus.bin") == corpus_before);  // same seed, same bytes

    REQUIRE(run_cli("run --config " + cfg + " --data " + data + " --out " + runs_a) == 0);
    std::string curve = runs_a + "/lorenz96/uniform/seed_0/curve.csv";
    REQUIRE(fs::exists(curve));
    // header + K rows
    {
        std::ifstream in(curve);
        std::string line;
        int rows = -1;
        while (std::getline(in, line))
            if (!line.empty()) ++rows;
        CHECK(rows == 3);
    }

    // interrupted run in a fresh directory, then resumed without --force
    std::string cfg_stop = tmp.str() + "/cfg_stop.json";
    write_tiny_config(cfg_stop, /*stop_after=*/1);
    REQUIRE(run_cli("run --config " + cfg_stop + " --data " + data + " --out " + runs_b) == 0);
    {
        std::ifstream in(runs_b + "/lorenz96/uniform/seed_0/curve.csv");
        std::string line;
        int rows = -1;
        while (std::getline(in, line))
            if (!line.empty()) ++rows;
        CHECK(rows == 1);  // checkpointed after the first iteration
    }
    REQUIRE(run_cli("run --config " + cfg + " --data " + data + " --out " + runs_b) == 0);
    CHECK(read_file(runs_b + "/lorenz96/uniform/seed_0/curve.csv") == read_file(curve));

    // same seed, two runs: identical pretraining RMSE at k=0 across methods
    REQUIRE(run_cli("run --config " + cfg + " --method random --data " + data + " --out " +
                    runs_a) == 0);
    std::string mu = read_file(runs_a + "/lorenz96/uniform/seed_0/manifest.json");
    std::string mr = read_file(runs_a + "/lorenz96/random/seed_0/manifest.json");
    auto extract_pretrain = [](const std::string& text) {
        auto pos = text.find("pretrain_rmse");
        REQUIRE(pos != std::string::npos);
        auto colon = text.find(':', pos);
        auto end = text.find_first_of(",\n", colon);
        return text.substr(colon + 1, end - colon - 1);
    };
    CHECK(extract_pretrain(mu) == extract_pretrain(mr));

    // plot both figures
    REQUIRE(run_cli("plot --results " + runs_a + " --problem lorenz96 --out " + tmp.str() +
                    "/c.svg") == 0);
    CHECK(fs::exists(tmp.str() + "/c.svg"));
    REQUIRE(run_cli("plot --results " + runs_a + " --problem lorenz96 --overlay --method "
                    "uniform --data " + data + " --out " + tmp.str() + "/o.svg") == 0);
    CHECK(fs::exists(tmp.str() + "/o.svg"));
    CHECK(run_cli("plot --results " + tmp.str() + "/empty --problem lorenz96 --out " +
                  tmp.str() + "/x.svg") != 0);
}

TEST_CASE("cli: tiny sweep") {
    TempDir tmp("rlmesh_cli_sweep");
    std::string cfg = tmp.str() + "/cfg.json";
    {
        std::ofstream os(cfg);
        os << R"({
  "problem": {"kind": "lorenz96"},
  "run": {"method": "uniform", "iterations": 2, "instances_per_iteration": 3,
          "budget": 10, "pretrain_instances": 6, "train_instances": 24,
          "test_instances": 5, "proxy_holdout": 4, "seeds": [0], "master_seed": 5},
  "agent": {"hidden_width": 16, "updates_per_iteration": 2, "pretrain_epochs": 2,
            "batch_size": 8},
  "sweep": {"budgets": [6, 12], "total_points": 60, "mode": "fixed_total"}
})";
    }
    std::string data = tmp.str() + "/data";
    REQUIRE(run_cli("gen-data --config " + cfg + " --out " + data) == 0);
    REQUIRE(run_cli("sweep --config " + cfg + " --data " + data + " --out " + tmp.str() +
                    "/runs") == 0);
    CHECK(fs::exists(tmp.str() + "/runs/lorenz96/sweep/sweep_summary.csv"));
    CHECK(fs::exists(tmp.str() + "/runs/lorenz96/sweep/budget_6/uniform/seed_0/curve.csv"));
}

TEST_CASE("cli: validate-solver prints and exits zero") {
    TempDir tmp("rlmesh_cli_val");
    std::string cfg = tmp.str() + "/cfg.json";
    {
        std::ofstream os(cfg);
        os << R"({"problem": {"kind": "burgers"}})";
    }
    REQUIRE(run_cli("validate-solver --config " + cfg + " --instances 2 --out " + tmp.str() +
                    "/val.csv") == 0);
    CHECK(fs::exists(tmp.str() + "/val.csv"));
}
