#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "flcc/commands.hpp"
#include "flcc/csv.hpp"
#include "flcc/rng.hpp"

using namespace flcc;

namespace {

namespace fs = std::filesystem;

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempTree {
    fs::path root;
    TempTree() {
        root = fs::temp_directory_path() /
               ("flcc_cmd_" + std::to_string(splitmix64(std::random_device{}())));
        fs::create_directories(root);
    }
    ~TempTree() { fs::remove_all(root); }
    std::string path(const std::string& name) const { return (root / name).string(); }
};

LabeledDataset synthetic_dataset(int count, std::uint64_t seed) {
    LabeledDataset ds;
    ds.rows = ds.cols = 28;
    auto eng = make_engine(seed);
    std::uniform_int_distribution<int> pix(0, 50);
    std::uniform_int_distribution<int> lab(0, 9);
    for (int i = 0; i < count; ++i) {
        int y = lab(eng);
        for (int p = 0; p < 784; ++p)
            ds.pixels.push_back(
                static_cast<std::uint8_t>((p / 78 == y) ? 150 + pix(eng) : pix(eng)));
        ds.labels.push_back(static_cast<std::uint8_t>(y));
    }
    return ds;
}

// Writes toy IDX files and returns the config text pointing at them.
std::string stage_dataset(const TempTree& tmp) {
    save_idx(synthetic_dataset(300, 1), tmp.path("train_img.idx"), tmp.path("train_lab.idx"));
    save_idx(synthetic_dataset(80, 2), tmp.path("test_img.idx"), tmp.path("test_lab.idx"));
    std::ostringstream cfg;
    cfg << "data.train_images = " << tmp.path("train_img.idx") << "\n"
        << "data.train_labels = " << tmp.path("train_lab.idx") << "\n"
        << "data.test_images = " << tmp.path("test_img.idx") << "\n"
        << "data.test_labels = " << tmp.path("test_lab.idx") << "\n"
        << "data.min_samples = 20\n"
        << "data.max_samples = 30\n"
        << "geometry.layout = flower7\n"
        << "geometry.cell_radius = 25\n"
        << "geometry.fixed_nodes = 6\n"
        << "geometry.untrusted_fraction = 0.34\n"
        << "learn.arch = dense\n"
        << "learn.hidden = 8\n"
        << "fed.eval_samples = 40\n"
        << "fed.validation_samples = 40\n";
    return cfg.str();
}

}  // namespace

TEST_SUITE("commands") {

TEST_CASE("net-analyze with zero intensity gives unit curves") {
    TempTree tmp;
    ExperimentConfig cfg = parse_config_text(
        "net.lambdas = 0\n"
        "net.trials = 200\n"
        "net.t_db_min = -4\n"
        "net.t_db_max = 4\n"
        "net.t_db_step = 2\n"
        "channel.noise_power = 0\n");
    RunArtifacts art = cmd_net_analyze(cfg, tmp.path("net"));
    auto rows = read_csv(tmp.path("net") + "/ps_curves.csv");
    REQUIRE(rows.size() == 6);  // header + 5 grid points
    CHECK(rows[0] ==
          std::vector<std::string>{"T_dB", "lambda", "analytic_ps", "mc_ps", "mc_stderr",
                                   "capacity"});
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(std::stod(rows[i][2]) == 1.0);
        CHECK(std::stod(rows[i][3]) == 1.0);
    }
    CHECK(slurp(tmp.path("net") + "/ps_curves.svg").find("<svg") == 0);
}

TEST_CASE("net-analyze curves decrease in T and order by intensity") {
    TempTree tmp;
    ExperimentConfig cfg = parse_config_text(
        "net.lambdas = 0.001,0.01\n"
        "net.trials = 4000\n"
        "net.t_db_min = -5\n"
        "net.t_db_max = 10\n"
        "net.t_db_step = 5\n"
        "channel.noise_power = 0\n");
    cmd_net_analyze(cfg, tmp.path("net"));
    auto rows = read_csv(tmp.path("net") + "/ps_curves.csv");
    std::map<double, std::vector<std::pair<double, double>>> mc_by_lambda;
    for (std::size_t i = 1; i < rows.size(); ++i)
        mc_by_lambda[std::stod(rows[i][1])].emplace_back(std::stod(rows[i][0]),
                                                         std::stod(rows[i][3]));
    for (auto& [lambda, curve] : mc_by_lambda)
        for (std::size_t i = 1; i < curve.size(); ++i)
            CHECK(curve[i].second <= curve[i - 1].second);  // common draws: exact monotone
    auto low = mc_by_lambda.at(0.001);
    auto high = mc_by_lambda.at(0.01);
    for (std::size_t i = 0; i < low.size(); ++i) CHECK(high[i].second <= low[i].second);
}

TEST_CASE("net-analyze reruns are byte identical") {
    TempTree tmp;
    ExperimentConfig cfg = parse_config_text("net.trials = 500\nnet.t_db_step = 10\n");
    cmd_net_analyze(cfg, tmp.path("a"));
    cmd_net_analyze(cfg, tmp.path("b"));
    CHECK(slurp(tmp.path("a") + "/ps_curves.csv") == slurp(tmp.path("b") + "/ps_curves.csv"));
    CHECK(slurp(tmp.path("a") + "/resolved.cfg") == slurp(tmp.path("b") + "/resolved.cfg"));
}

TEST_CASE("fl-run with zero rounds writes headers only") {
    TempTree tmp;
    ExperimentConfig cfg = parse_config_text(stage_dataset(tmp) + "fed.rounds = 0\n");
    RunArtifacts art = cmd_fl_run(cfg, MacMode::Flcc, tmp.path("run0"));
    auto rounds = read_csv(tmp.path("run0") + "/rounds.csv");
    CHECK(rounds.size() == 1);  // header only
    CHECK(rounds[0][0] == "round");
    auto trust = read_csv(tmp.path("run0") + "/trust.csv");
    CHECK(trust.size() == 1);
    CHECK(fs::exists(tmp.path("run0") + "/model.flcc"));
    CHECK(fs::exists(tmp.path("run0") + "/resolved.cfg"));
}

TEST_CASE("fl-run produces coherent artifacts and is deterministic") {
    TempTree tmp;
    ExperimentConfig cfg = parse_config_text(stage_dataset(tmp) + "fed.rounds = 3\n");
    cmd_fl_run(cfg, MacMode::Flcc, tmp.path("r1"));
    cmd_fl_run(cfg, MacMode::Flcc, tmp.path("r2"));
    for (const char* f : {"rounds.csv", "trust.csv", "mac_trace.csv", "nodes.csv", "cells.csv",
                          "partition.csv", "resolved.cfg"})
        CHECK(slurp(tmp.path("r1") + "/" + f) == slurp(tmp.path("r2") + "/" + f));

    auto rounds = read_csv(tmp.path("r1") + "/rounds.csv");
    CHECK(rounds.size() == 4);
    auto nodes = read_csv(tmp.path("r1") + "/nodes.csv");
    CHECK(nodes.size() == 7);  // header + 6 fixed nodes
    int untrusted = 0;
    for (std::size_t i = 1; i < nodes.size(); ++i)
        if (nodes[i][4] == "untrusted") ++untrusted;
    CHECK(untrusted == 2);  // round(0.34 * 6)
    auto trace = read_csv(tmp.path("r1") + "/mac_trace.csv");
    CHECK(trace.size() == 1 + 3 * 6);  // header + rounds * nodes
}

TEST_CASE("baseline mode differs in trust handling but shares the layout") {
    TempTree tmp;
    ExperimentConfig cfg = parse_config_text(stage_dataset(tmp) + "fed.rounds = 2\n");
    cmd_fl_run(cfg, MacMode::Flcc, tmp.path("flcc"));
    cmd_fl_run(cfg, MacMode::Baseline, tmp.path("base"));
    CHECK(slurp(tmp.path("flcc") + "/nodes.csv") == slurp(tmp.path("base") + "/nodes.csv"));
    CHECK(slurp(tmp.path("flcc") + "/partition.csv") ==
          slurp(tmp.path("base") + "/partition.csv"));
    auto trust = read_csv(tmp.path("base") + "/trust.csv");
    for (std::size_t i = 1; i < trust.size(); ++i) CHECK(trust[i][2] == "0.5");
}

TEST_CASE("compare merges runs and reproduces the source values") {
    TempTree tmp;
    ExperimentConfig cfg = parse_config_text(stage_dataset(tmp) + "fed.rounds = 2\n");
    cmd_fl_run(cfg, MacMode::Flcc, tmp.path("runA"));
    RunArtifacts art = cmd_compare({tmp.path("runA"), tmp.path("runA")}, tmp.path("cmp"));
    auto merged = read_csv(tmp.path("cmp") + "/merged.csv");
    auto source = read_csv(tmp.path("runA") + "/rounds.csv");
    REQUIRE(merged.size() == 1 + 2 * (source.size() - 1));
    for (std::size_t i = 1; i < source.size(); ++i) {
        // both series carry the source values verbatim
        CHECK(merged[i][1] == source[i][0]);
        CHECK(merged[i][2] == source[i][3]);
        CHECK(merged[i][3] == source[i][4]);
        CHECK(merged[i + source.size() - 1][2] == source[i][3]);
    }
    CHECK(slurp(tmp.path("cmp") + "/compare.svg").find("<svg") == 0);
}

TEST_CASE("compare rejects missing run directories by name") {
    TempTree tmp;
    CHECK_THROWS_WITH_AS(cmd_compare({tmp.path("nope1"), tmp.path("nope2")}, tmp.path("cmp")),
                         doctest::Contains("nope1"), DataError);
    CHECK_THROWS_AS(cmd_compare({tmp.path("single")}, tmp.path("cmp")), InvalidParameter);
}

TEST_CASE("fl-run propagates dataset errors") {
    TempTree tmp;
    ExperimentConfig cfg;
    cfg.train_images = tmp.path("missing.idx");
    CHECK_THROWS_AS(cmd_fl_run(cfg, MacMode::Flcc, tmp.path("x")), DataError);
}

}  // TEST_SUITE
