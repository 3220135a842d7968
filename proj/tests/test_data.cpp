#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <limits>

#include "doctest.h"
#include "flcc/csv.hpp"
#include "flcc/data.hpp"
#include "flcc/rng.hpp"

using namespace flcc;

namespace {

namespace fs = std::filesystem;

std::string temp_path(const std::string& name) {
    return (fs::temp_directory_path() / name).string();
}

std::vector<char> slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

LabeledDataset tiny_dataset(int count, int rows = 4, int cols = 3) {
    LabeledDataset ds;
    ds.rows = rows;
    ds.cols = cols;
    for (int i = 0; i < count; ++i) {
        for (int p = 0; p < rows * cols; ++p)
            ds.pixels.push_back(static_cast<std::uint8_t>((i * 31 + p * 7) % 256));
        ds.labels.push_back(static_cast<std::uint8_t>(i % 10));
    }
    return ds;
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("idx round trip reproduces the original bytes") {
    LabeledDataset ds = tiny_dataset(13);
    std::string img1 = temp_path("flcc_rt1_images.idx");
    std::string lab1 = temp_path("flcc_rt1_labels.idx");
    save_idx(ds, img1, lab1);
    LabeledDataset parsed = load_idx(img1, lab1);
    CHECK(parsed.rows == ds.rows);
    CHECK(parsed.cols == ds.cols);
    CHECK(parsed.pixels == ds.pixels);
    CHECK(parsed.labels == ds.labels);
    std::string img2 = temp_path("flcc_rt2_images.idx");
    std::string lab2 = temp_path("flcc_rt2_labels.idx");
    save_idx(parsed, img2, lab2);
    CHECK(slurp(img1) == slurp(img2));
    CHECK(slurp(lab1) == slurp(lab2));
}

TEST_CASE("idx header dimensions are honored") {
    LabeledDataset ds = tiny_dataset(5, 7, 2);
    std::string img = temp_path("flcc_dims_images.idx");
    std::string lab = temp_path("flcc_dims_labels.idx");
    save_idx(ds, img, lab);
    LabeledDataset parsed = load_idx(img, lab);
    CHECK(parsed.rows == 7);
    CHECK(parsed.cols == 2);
    CHECK(parsed.size() == 5);
}

TEST_CASE("wrong magic in the labels file is rejected") {
    LabeledDataset ds = tiny_dataset(3);
    std::string img = temp_path("flcc_magic_images.idx");
    std::string lab = temp_path("flcc_magic_labels.idx");
    save_idx(ds, img, lab);
    // A labels file carrying the images magic must be refused.
    CHECK_THROWS_WITH_AS(load_idx(img, img), doctest::Contains("magic"), DataError);
}

TEST_CASE("truncated image data is rejected") {
    LabeledDataset ds = tiny_dataset(4);
    std::string img = temp_path("flcc_trunc_images.idx");
    std::string lab = temp_path("flcc_trunc_labels.idx");
    save_idx(ds, img, lab);
    auto bytes = slurp(img);
    std::ofstream cut(img, std::ios::binary);
    cut.write(bytes.data(), bytes.size() - 5);
    cut.close();
    CHECK_THROWS_WITH_AS(load_idx(img, lab), doctest::Contains("truncated"), DataError);
}

TEST_CASE("count mismatch between files is rejected") {
    LabeledDataset a = tiny_dataset(4);
    LabeledDataset b = tiny_dataset(6);
    std::string img_a = temp_path("flcc_mismatch_a_images.idx");
    std::string lab_a = temp_path("flcc_mismatch_a_labels.idx");
    std::string img_b = temp_path("flcc_mismatch_b_images.idx");
    std::string lab_b = temp_path("flcc_mismatch_b_labels.idx");
    save_idx(a, img_a, lab_a);
    save_idx(b, img_b, lab_b);
    CHECK_THROWS_WITH_AS(load_idx(img_a, lab_b), doctest::Contains("count"), DataError);
}

TEST_CASE("canonical corpus sizes when files are present") {
    // The canonical 60k/10k MNIST files are not redistributable here; the
    // check runs only when someone has dropped them under data/mnist/.
    std::string img, lab;
    for (const std::string prefix : {"data/mnist/", "../../data/mnist/"}) {
        if (fs::exists(prefix + "train-images-idx3-ubyte")) {
            img = prefix + "train-images-idx3-ubyte";
            lab = prefix + "train-labels-idx1-ubyte";
        }
    }
    if (img.empty() || !fs::exists(lab)) return;
    LabeledDataset ds = load_idx(img, lab);
    CHECK(ds.size() == 60000);
    CHECK(ds.rows == 28);
    CHECK(ds.cols == 28);
}

TEST_CASE("partition sizes stay in range and subsets match indices") {
    LabeledDataset ds = tiny_dataset(250);
    auto eng = make_engine(4, {kStreamPartition});
    PartitionSpec spec{100, 200, true};
    Partition part = partition(ds, {0, 1, 2, 3}, spec, eng);
    for (const auto& [id, idx] : part.indices) {
        CHECK(idx.size() >= 100);
        CHECK(idx.size() <= 200);
        std::set<std::size_t> uniq(idx.begin(), idx.end());
        CHECK(uniq.size() == idx.size());  // no duplicates within a node
        const LabeledDataset& local = part.datasets.at(id);
        REQUIRE(local.size() == idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i)
            CHECK(local.labels[i] == ds.labels[idx[i]]);
    }
}

TEST_CASE("single node without overlap can take the whole set") {
    LabeledDataset ds = tiny_dataset(40);
    auto eng = make_engine(5);
    PartitionSpec spec{40, 40, false};
    Partition part = partition(ds, {7}, spec, eng);
    CHECK(part.indices.at(7).size() == 40);
    std::set<std::size_t> uniq(part.indices.at(7).begin(), part.indices.at(7).end());
    CHECK(uniq.size() == 40);
}

TEST_CASE("no-overlap partition conserves samples and errors when short") {
    LabeledDataset ds = tiny_dataset(120);
    auto eng = make_engine(6);
    PartitionSpec spec{30, 40, false};
    Partition part = partition(ds, {0, 1, 2}, spec, eng);
    std::set<std::size_t> seen;
    for (const auto& [id, idx] : part.indices)
        for (std::size_t i : idx) CHECK(seen.insert(i).second);  // globally distinct

    auto eng2 = make_engine(7);
    PartitionSpec too_much{50, 50, false};
    CHECK_THROWS_AS(partition(ds, {0, 1, 2}, too_much, eng2), DataError);
}

TEST_CASE("partition size distribution is roughly uniform") {
    LabeledDataset ds = tiny_dataset(30);
    // Chi-square against uniform over [10, 19]: 10 bins, 1000 draws.
    const int kDraws = 1000;
    std::vector<int> counts(10, 0);
    for (int d = 0; d < kDraws; ++d) {
        auto eng = make_engine(800, {std::uint64_t(d)});
        Partition part = partition(ds, {0}, {10, 19, true}, eng);
        ++counts.at(part.indices.at(0).size() - 10);
    }
    double expected = kDraws / 10.0;
    double chi2 = 0.0;
    for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
    CHECK(chi2 < 27.88);  // 99.9th percentile of chi-square with 9 dof
}

TEST_CASE("label flip cycles with period ten") {
    LabeledDataset ds = tiny_dataset(20);
    auto eng = make_engine(8);
    AttackSpec flip{AttackKind::LabelFlip, 1.0};
    LabeledDataset once = apply_attack(ds, flip, eng);
    CHECK(once.labels != ds.labels);
    for (std::size_t i = 0; i < ds.size(); ++i)
        CHECK(once.labels[i] == (ds.labels[i] + 1) % 10);
    LabeledDataset twice = apply_attack(once, flip, eng);
    CHECK(twice.labels != ds.labels);
    LabeledDataset cycled = ds;
    for (int k = 0; k < 10; ++k) cycled = apply_attack(cycled, flip, eng);
    CHECK(cycled.labels == ds.labels);
    CHECK(cycled.pixels == ds.pixels);
}

TEST_CASE("sign flip at the global model is a fixed point") {
    std::vector<double> global = {1.0, -2.0, 3.0};
    std::vector<double> params = global;
    std::vector<double> grad = {0.5, 0.5, 0.5};
    auto eng = make_engine(9);
    apply_attack(params, grad, global, {AttackKind::SignFlipGradient, 1.0}, eng);
    CHECK(params == global);  // zero delta reflects to itself
    CHECK(grad == std::vector<double>{-0.5, -0.5, -0.5});

    std::vector<double> trained = {2.0, 0.0, 4.0};
    std::vector<double> grad2 = {1.0, 0.0, -1.0};
    apply_attack(trained, grad2, global, {AttackKind::SignFlipGradient, 1.0}, eng);
    CHECK(trained == std::vector<double>{0.0, -4.0, 2.0});
}

TEST_CASE("scaled noise with zero magnitude is the identity") {
    std::vector<double> params = {1.0, 2.0};
    std::vector<double> grad = {0.1, 0.2};
    auto eng = make_engine(10);
    apply_attack(params, grad, params, {AttackKind::ScaledNoise, 0.0}, eng);
    CHECK(params == std::vector<double>{1.0, 2.0});
    apply_attack(params, grad, params, {AttackKind::ScaledNoise, 0.5}, eng);
    CHECK(params != std::vector<double>{1.0, 2.0});
}

TEST_CASE("attacked datasets keep valid labels and dimensions") {
    LabeledDataset ds = tiny_dataset(50);
    auto eng = make_engine(11);
    LabeledDataset flipped = apply_attack(ds, {AttackKind::LabelFlip, 1.0}, eng);
    CHECK(flipped.rows == ds.rows);
    CHECK(flipped.cols == ds.cols);
    CHECK(flipped.size() == ds.size());
    for (std::uint8_t y : flipped.labels) CHECK(y < 10);
}

}  // TEST_SUITE

TEST_SUITE("data") {

TEST_CASE("double formatting round-trips and handles non-finite values") {
    auto roundtrip = [](double v) {
        std::string s = fmt_double(v);
        double back = 0.0;
        std::sscanf(s.c_str(), "%lf", &back);
        return back;
    };
    for (double v : {0.0, -10.0, 0.001, 1.0 / 3.0, 2.5e-17, -123456.789,
                     0.951849807369, 1e14, 1e16}) {
        CHECK(roundtrip(v) == v);
    }
    CHECK(fmt_double(-10.0) == "-10");
    CHECK(fmt_double(42.0) == "42");
    CHECK(fmt_double(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(fmt_double(-std::numeric_limits<double>::infinity()) == "-inf");
    CHECK(fmt_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
}

}  // TEST_SUITE
