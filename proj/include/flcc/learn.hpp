#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "flcc/data.hpp"
#include "flcc/errors.hpp"

namespace flcc {

enum class ArchKind { Conv, Dense };

/// Classifier architecture. Conv: conv(filters x kernel x kernel, valid) ->
/// ReLU -> max-pool(pool) -> dense(class_count) -> softmax. Dense: input ->
/// hidden (ReLU, omitted when hidden == 0) -> class_count -> softmax.
struct ModelArch {
    ArchKind kind = ArchKind::Conv;
    int input_rows = 28;
    int input_cols = 28;
    int conv_filters = 8;
    int kernel = 3;
    int pool = 2;
    int hidden = 64;
    int class_count = 10;

    int input_size() const { return input_rows * input_cols; }
    int conv_out_rows() const { return input_rows - kernel + 1; }
    int conv_out_cols() const { return input_cols - kernel + 1; }
    int pooled_rows() const { return conv_out_rows() / pool; }
    int pooled_cols() const { return conv_out_cols() / pool; }
    int feature_size() const { return conv_filters * pooled_rows() * pooled_cols(); }
    std::size_t param_count() const;
    std::string describe() const;
    static ModelArch parse(const std::string& text);
    bool operator==(const ModelArch&) const = default;

    void validate() const;
};

/// Flat parameter vector plus its architecture.
struct ModelParams {
    std::vector<double> values;
    ModelArch arch;
};

struct SgdConfig {
    double learning_rate = 0.05;
    int batch_size = 20;
};

/// Normalized input batch (pixels scaled to [0,1]).
struct Batch {
    int input_size = 0;
    std::size_t count = 0;
    std::vector<double> x;  // count * input_size
    std::vector<int> y;
};

Batch make_batch(const LabeledDataset& ds);
Batch make_batch(const LabeledDataset& ds, const std::vector<std::size_t>& indices);

struct LocalUpdate {
    int node_id = -1;
    ModelParams params;            // weights after the local pass
    std::vector<double> gradient;  // full-set gradient at the final weights
    int sample_count = 0;
    int steps = 0;
};

struct EvalMetrics {
    double loss = 0.0;
    double accuracy = 0.0;
};

/// Glorot-uniform weights (uniform in +-sqrt(6/(fan_in+fan_out))), zero biases.
ModelParams init_model(const ModelArch& arch, std::uint64_t rng_seed);

/// Row-major class probabilities, one softmax row per batch sample.
std::vector<double> forward(const ModelParams& params, const Batch& batch);

/// Mean of -ln(p[true class]) with probabilities clamped to >= 1e-12.
double cross_entropy_loss(const std::vector<double>& probs, const std::vector<int>& labels,
                          int class_count);

/// Exact backpropagation gradient of the mean cross-entropy over the batch.
std::vector<double> gradient(const ModelParams& params, const Batch& batch);

/// values - learning_rate * gradient, elementwise.
ModelParams sgd_step(const ModelParams& params, const std::vector<double>& grad,
                     double learning_rate);

/// One local pass: floor(n / batch_size) minibatch steps over a shuffled copy
/// of the data (a single full-set step when n < batch_size), then the
/// full-set gradient at the final weights.
LocalUpdate local_train(const ModelParams& params, const LabeledDataset& dataset,
                        const SgdConfig& cfg, std::mt19937_64& rng);

EvalMetrics evaluate(const ModelParams& params, const LabeledDataset& dataset);

/// Flat binary checkpoint: magic "FLCC", version u32, param count u64,
/// arch string (u32 length + bytes), then little-endian 64-bit floats.
void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

}  // namespace flcc
