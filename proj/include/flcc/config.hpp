#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flcc/channel.hpp"
#include "flcc/data.hpp"
#include "flcc/federate.hpp"
#include "flcc/geometry.hpp"
#include "flcc/learn.hpp"
#include "flcc/mac.hpp"

namespace flcc {

/// Every knob of the simulator, parsed from line-oriented `key = value` text
/// with `#` comments and dotted section keys. Unknown keys are rejected;
/// validation errors cite key and line.
struct ExperimentConfig {
    std::uint64_t seed = 1;

    // geometry
    double lambda = 0.001;  // nodes per square meter
    double region_width = 500.0;
    double region_height = 500.0;
    double cell_radius = 100.0;
    int num_channels = 7;
    double untrusted_fraction = 0.0;
    std::string layout = "rect";  // rect | flower7
    int fixed_nodes = 0;          // > 0 pins the node count (PPP conditioned on it)
    double tx_power = 1.0;

    // channel
    double alpha = 4.0;
    double noise_power = 1e-9;
    double sinr_threshold_db = 0.0;
    double active_probability = 1.0;
    double min_distance = 1.0;

    // mac
    int contention_window = 16;
    int max_retries = 4;

    // net-analyze sweep
    double t_db_min = -10.0;
    double t_db_max = 30.0;
    double t_db_step = 2.0;
    std::vector<double> lambdas = {0.001, 0.01};
    int trials = 100000;
    double link_distance = 1.0;  // typical-link distance for the P_s sweep

    // learn
    std::string arch = "conv";  // conv | dense
    int hidden = 64;
    double learning_rate = 0.05;
    int batch_size = 20;

    // federation
    int rounds = 300;
    double epsilon = 1e-6;
    double trust_learning_rate = 0.2;
    double trust_initial = 0.5;
    double blacklist_threshold = 0.05;
    std::string hierarchy = "single";  // single | cell_cloud
    double cloud_blend = 0.5;
    int eval_samples = 1000;
    int validation_samples = 500;

    // data
    std::string train_images = "data/digits-train-images.idx3-ubyte";
    std::string train_labels = "data/digits-train-labels.idx1-ubyte";
    std::string test_images = "data/digits-test-images.idx3-ubyte";
    std::string test_labels = "data/digits-test-labels.idx1-ubyte";
    int min_samples = 100;
    int max_samples = 200;
    bool overlap = true;

    // attack
    std::string attack_kind = "label_flip";  // label_flip | sign_flip | scaled_noise
    double attack_magnitude = 1.0;

    Region region() const { return {region_width, region_height}; }
    ChannelConfig channel_config() const;
    MacConfig mac_config(MacMode mode) const;
    FederationConfig federation_config(bool trust_enabled) const;
    ModelArch model_arch() const;
    SgdConfig sgd_config() const { return {learning_rate, batch_size}; }
    PartitionSpec partition_spec() const { return {min_samples, max_samples, overlap}; }
    AttackSpec attack_spec() const;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);
std::string serialize_config(const ExperimentConfig& cfg);

}  // namespace flcc
