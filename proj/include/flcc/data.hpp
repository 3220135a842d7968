#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "flcc/errors.hpp"

namespace flcc {

/// Row-major byte images with integer class labels.
struct LabeledDataset {
    int rows = 0;
    int cols = 0;
    std::vector<std::uint8_t> pixels;  // size() == count * rows * cols
    std::vector<std::uint8_t> labels;

    std::size_t size() const { return labels.size(); }
    const std::uint8_t* image(std::size_t i) const { return pixels.data() + i * rows * cols; }
    LabeledDataset subset(const std::vector<std::size_t>& indices) const;
    LabeledDataset head(std::size_t n) const;
};

struct PartitionSpec {
    int min_samples = 100;
    int max_samples = 200;
    bool overlap_allowed = true;
};

enum class AttackKind { LabelFlip, SignFlipGradient, ScaledNoise };

struct AttackSpec {
    AttackKind kind = AttackKind::LabelFlip;
    double magnitude = 1.0;
};

/// Parse the big-endian IDX pair (images magic 0x00000803, labels 0x00000801).
/// Image dimensions come from the header; image and label counts must match.
LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path);

/// Re-serialize to IDX; load_idx(save_idx(ds)) reproduces the original bytes.
void save_idx(const LabeledDataset& ds, const std::string& images_path,
              const std::string& labels_path);

struct Partition {
    std::map<int, std::vector<std::size_t>> indices;
    std::map<int, LabeledDataset> datasets;
};

/// Per-node local datasets: sizes drawn uniformly in [min,max]; indices drawn
/// without replacement within a node, independently across nodes when overlap
/// is allowed, and from a global no-duplicates pool otherwise.
Partition partition(const LabeledDataset& dataset, const std::vector<int>& node_ids,
                    const PartitionSpec& spec, std::mt19937_64& rng);

/// LabelFlip: y -> (y+1) mod class_count applied to a local dataset before
/// training. Other attack kinds leave datasets untouched.
LabeledDataset apply_attack(const LabeledDataset& ds, const AttackSpec& attack,
                            std::mt19937_64& rng, int class_count = 10);

/// Update-level attacks on a submitted parameter vector:
///   SignFlipGradient reflects the trained params about the received global
///   model (w -> 2*global - w) and negates the reported gradient;
///   ScaledNoise adds N(0, magnitude^2) noise to the params.
void apply_attack(std::vector<double>& params, std::vector<double>& gradient,
                  const std::vector<double>& global_params, const AttackSpec& attack,
                  std::mt19937_64& rng);

void write_partition_csv(const std::string& path, const Partition& part);

}  // namespace flcc
