#include "flcc/data.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "flcc/csv.hpp"

namespace flcc {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::uint32_t read_u32_be(std::istream& in, const std::string& path, const std::string& field) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw DataError(path + ": truncated while reading " + field);
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

void write_u32_be(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<char*>(b), 4);
}

}  // namespace

LabeledDataset LabeledDataset::subset(const std::vector<std::size_t>& indices) const {
    LabeledDataset out;
    out.rows = rows;
    out.cols = cols;
    out.pixels.reserve(indices.size() * rows * cols);
    out.labels.reserve(indices.size());
    for (std::size_t i : indices) {
        const std::uint8_t* img = image(i);
        out.pixels.insert(out.pixels.end(), img, img + rows * cols);
        out.labels.push_back(labels[i]);
    }
    return out;
}

LabeledDataset LabeledDataset::head(std::size_t n) const {
    n = std::min(n, size());
    LabeledDataset out;
    out.rows = rows;
    out.cols = cols;
    out.pixels.assign(pixels.begin(), pixels.begin() + n * rows * cols);
    out.labels.assign(labels.begin(), labels.begin() + n);
    return out;
}

LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream imgs(images_path, std::ios::binary);
    if (!imgs) throw DataError("cannot open images file: " + images_path);
    std::uint32_t magic = read_u32_be(imgs, images_path, "images magic");
    if (magic != kImagesMagic)
        throw DataError(images_path + ": bad images magic (expected 0x00000803)");
    std::uint32_t count = read_u32_be(imgs, images_path, "image count");
    std::uint32_t rows = read_u32_be(imgs, images_path, "image rows");
    std::uint32_t cols = read_u32_be(imgs, images_path, "image cols");
    if (rows == 0 || cols == 0) throw DataError(images_path + ": zero image dimensions");

    LabeledDataset ds;
    ds.rows = static_cast<int>(rows);
    ds.cols = static_cast<int>(cols);
    ds.pixels.resize(std::size_t(count) * rows * cols);
    if (!imgs.read(reinterpret_cast<char*>(ds.pixels.data()), ds.pixels.size()))
        throw DataError(images_path + ": truncated pixel data");

    std::ifstream labs(labels_path, std::ios::binary);
    if (!labs) throw DataError("cannot open labels file: " + labels_path);
    magic = read_u32_be(labs, labels_path, "labels magic");
    if (magic != kLabelsMagic)
        throw DataError(labels_path + ": bad labels magic (expected 0x00000801)");
    std::uint32_t label_count = read_u32_be(labs, labels_path, "label count");
    if (label_count != count)
        throw DataError(labels_path + ": label count " + std::to_string(label_count) +
                        " does not match image count " + std::to_string(count));
    ds.labels.resize(label_count);
    if (label_count > 0 &&
        !labs.read(reinterpret_cast<char*>(ds.labels.data()), ds.labels.size()))
        throw DataError(labels_path + ": truncated label data");
    for (std::uint8_t y : ds.labels)
        if (y > 9) throw DataError(labels_path + ": label out of range [0,10)");
    return ds;
}

void save_idx(const LabeledDataset& ds, const std::string& images_path,
              const std::string& labels_path) {
    std::ofstream imgs(images_path, std::ios::binary);
    if (!imgs) throw DataError("cannot write images file: " + images_path);
    write_u32_be(imgs, kImagesMagic);
    write_u32_be(imgs, static_cast<std::uint32_t>(ds.size()));
    write_u32_be(imgs, static_cast<std::uint32_t>(ds.rows));
    write_u32_be(imgs, static_cast<std::uint32_t>(ds.cols));
    imgs.write(reinterpret_cast<const char*>(ds.pixels.data()), ds.pixels.size());

    std::ofstream labs(labels_path, std::ios::binary);
    if (!labs) throw DataError("cannot write labels file: " + labels_path);
    write_u32_be(labs, kLabelsMagic);
    write_u32_be(labs, static_cast<std::uint32_t>(ds.size()));
    labs.write(reinterpret_cast<const char*>(ds.labels.data()), ds.labels.size());
}

Partition partition(const LabeledDataset& dataset, const std::vector<int>& node_ids,
                    const PartitionSpec& spec, std::mt19937_64& rng) {
    if (spec.min_samples < 1 || spec.min_samples > spec.max_samples)
        throw InvalidParameter("partition: need 1 <= min_samples <= max_samples");
    if (static_cast<std::size_t>(spec.max_samples) > dataset.size())
        throw InvalidParameter("partition: max_samples exceeds dataset size");

    std::vector<int> ids = node_ids;
    std::sort(ids.begin(), ids.end());
    std::uniform_int_distribution<int> size_draw(spec.min_samples, spec.max_samples);
    std::map<int, int> sizes;
    std::size_t total = 0;
    for (int id : ids) {
        sizes[id] = size_draw(rng);
        total += sizes[id];
    }

    Partition out;
    if (spec.overlap_allowed) {
        // Independent per-node draws; nodes may share samples.
        for (int id : ids) {
            std::vector<std::size_t> pool(dataset.size());
            std::iota(pool.begin(), pool.end(), 0);
            for (int k = 0; k < sizes[id]; ++k) {
                std::uniform_int_distribution<std::size_t> pickd(k, pool.size() - 1);
                std::swap(pool[k], pool[pickd(rng)]);
            }
            pool.resize(sizes[id]);
            out.indices[id] = pool;
        }
    } else {
        if (total > dataset.size())
            throw DataError("partition: dataset has " + std::to_string(dataset.size()) +
                            " samples but " + std::to_string(total) +
                            " are required without overlap");
        std::vector<std::size_t> pool(dataset.size());
        std::iota(pool.begin(), pool.end(), 0);
        std::shuffle(pool.begin(), pool.end(), rng);
        std::size_t cursor = 0;
        for (int id : ids) {
            out.indices[id] = {pool.begin() + cursor, pool.begin() + cursor + sizes[id]};
            cursor += sizes[id];
        }
    }
    for (int id : ids) out.datasets[id] = dataset.subset(out.indices[id]);
    return out;
}

LabeledDataset apply_attack(const LabeledDataset& ds, const AttackSpec& attack,
                            std::mt19937_64& rng, int class_count) {
    (void)rng;
    if (attack.kind != AttackKind::LabelFlip) return ds;
    LabeledDataset out = ds;
    for (std::uint8_t& y : out.labels)
        y = static_cast<std::uint8_t>((y + 1) % class_count);
    return out;
}

void apply_attack(std::vector<double>& params, std::vector<double>& gradient,
                  const std::vector<double>& global_params, const AttackSpec& attack,
                  std::mt19937_64& rng) {
    if (attack.magnitude < 0.0) throw InvalidParameter("apply_attack: magnitude must be >= 0");
    switch (attack.kind) {
        case AttackKind::LabelFlip:
            return;  // data-level attack, nothing to do on the update
        case AttackKind::SignFlipGradient:
            if (params.size() != global_params.size())
                throw InvalidParameter("apply_attack: parameter size mismatch");
            for (std::size_t i = 0; i < params.size(); ++i)
                params[i] = 2.0 * global_params[i] - params[i];
            for (double& g : gradient) g = -g;
            return;
        case AttackKind::ScaledNoise: {
            if (attack.magnitude == 0.0) return;
            std::normal_distribution<double> noise(0.0, attack.magnitude);
            for (double& w : params) w += noise(rng);
            return;
        }
    }
}

void write_partition_csv(const std::string& path, const Partition& part) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "node_id,sample_index\n";
    for (const auto& [id, indices] : part.indices)
        for (std::size_t idx : indices) out << id << ',' << idx << '\n';
}

}  // namespace flcc
