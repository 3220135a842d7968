#include <random>

#include "doctest.h"
#include "flcc/config.hpp"
#include "flcc/rng.hpp"

using namespace flcc;

TEST_SUITE("config") {

TEST_CASE("empty file yields valid defaults") {
    ExperimentConfig cfg = parse_config_text("");
    CHECK(cfg.seed == 1);
    CHECK(cfg.alpha == 4.0);
    CHECK(cfg.rounds == 300);
    CHECK(cfg.lambdas == std::vector<double>{0.001, 0.01});
    CHECK(cfg.batch_size == 20);
    CHECK(cfg.learning_rate == 0.05);
    CHECK(cfg.trust_learning_rate == 0.2);
    CHECK(cfg.blacklist_threshold == 0.05);
    CHECK(cfg.min_samples == 100);
    CHECK(cfg.max_samples == 200);
}

TEST_CASE("comments, blanks and spacing are tolerated") {
    ExperimentConfig cfg = parse_config_text(
        "# header comment\n"
        "\n"
        "channel.alpha = 3.5   # trailing comment\n"
        "  mac.max_retries=6\n");
    CHECK(cfg.alpha == 3.5);
    CHECK(cfg.max_retries == 6);
}

TEST_CASE("alpha below two is rejected with key and line") {
    CHECK_THROWS_WITH_AS(parse_config_text("\nchannel.alpha = 1.5\n"),
                         doctest::Contains("channel.alpha (line 2)"), ConfigError);
}

TEST_CASE("unknown keys are rejected with the line number") {
    CHECK_THROWS_WITH_AS(parse_config_text("channel.alpa = 4\n"),
                         doctest::Contains("line 1: unknown key 'channel.alpa'"), ConfigError);
}

TEST_CASE("type mismatches are rejected") {
    CHECK_THROWS_WITH_AS(parse_config_text("mac.max_retries = soon\n"),
                         doctest::Contains("mac.max_retries"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("data.overlap = yes\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("channel.alpha 4\n"), ConfigError);
}

TEST_CASE("more invariant rejections") {
    CHECK_THROWS_AS(parse_config_text("learn.batch_size = 0\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("fed.trust_learning_rate = 0\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("fed.cloud_blend = 1.5\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("geometry.layout = hex\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("attack.kind = dos\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("data.min_samples = 50\ndata.max_samples = 40\n"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config_text("net.lambdas = 0.1,-0.2\n"), ConfigError);
}

TEST_CASE("round trip: serialize then reparse is the identity") {
    std::mt19937_64 eng(7);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::uniform_int_distribution<int> small(1, 40);
    for (int trial = 0; trial < 50; ++trial) {
        ExperimentConfig cfg;
        cfg.seed = eng();
        cfg.lambda = u01(eng) * 0.2;
        cfg.region_width = 10.0 + u01(eng) * 1000.0;
        cfg.cell_radius = 1.0 + u01(eng) * 100.0;
        cfg.num_channels = small(eng);
        cfg.untrusted_fraction = u01(eng);
        cfg.layout = trial % 2 ? "rect" : "flower7";
        cfg.alpha = 2.0 + u01(eng) * 4.0;
        cfg.noise_power = u01(eng) * 1e-6;
        cfg.sinr_threshold_db = -10.0 + u01(eng) * 40.0;
        cfg.active_probability = u01(eng);
        cfg.contention_window = small(eng);
        cfg.lambdas = {u01(eng), u01(eng) + 1.0};
        cfg.arch = trial % 2 ? "conv" : "dense";
        cfg.learning_rate = 0.001 + u01(eng);
        cfg.rounds = small(eng);
        cfg.epsilon = u01(eng) * 1e-3;
        cfg.hierarchy = trial % 3 ? "single" : "cell_cloud";
        cfg.cloud_blend = u01(eng);
        cfg.train_images = "some/path_" + std::to_string(trial) + ".idx";
        cfg.overlap = trial % 2 == 0;
        cfg.attack_kind = trial % 3 ? "label_flip" : "scaled_noise";
        cfg.attack_magnitude = u01(eng) * 3.0;

        std::string text = serialize_config(cfg);
        ExperimentConfig back = parse_config_text(text);
        CHECK(serialize_config(back) == text);
    }
}

TEST_CASE("derived module configs") {
    ExperimentConfig cfg = parse_config_text(
        "channel.sinr_threshold_db = 10\n"
        "learn.arch = dense\n"
        "fed.hierarchy = cell_cloud\n"
        "attack.kind = sign_flip\n");
    CHECK(cfg.channel_config().sinr_threshold == doctest::Approx(10.0));
    CHECK(cfg.model_arch().kind == ArchKind::Dense);
    CHECK(cfg.federation_config(true).hierarchy == Hierarchy::CellPlusCloud);
    CHECK(cfg.federation_config(false).trust_enabled == false);
    CHECK(cfg.attack_spec().kind == AttackKind::SignFlipGradient);
    CHECK(cfg.mac_config(MacMode::Baseline).mode == MacMode::Baseline);
}

TEST_CASE("missing config file raises a config error") {
    CHECK_THROWS_AS(parse_config_file("/nonexistent/flcc.cfg"), ConfigError);
}

TEST_CASE("negative or malformed seeds are rejected") {
    CHECK_THROWS_AS(parse_config_text("seed = -5\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("seed = 1.5\n"), ConfigError);
    CHECK(parse_config_text("seed = 18446744073709551615\n").seed ==
          18446744073709551615ULL);
}

}  // TEST_SUITE
