#include "flcc/learn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

namespace flcc {

namespace {

constexpr double kProbClamp = 1e-12;

// Parameter slices, in layout order. Conv arch: conv weights, conv biases,
// dense weights, dense biases. Dense arch: w1, b1, (w2, b2 when hidden > 0).
struct Slices {
    std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0;  // offsets
    std::size_t w1_n = 0, b1_n = 0, w2_n = 0, b2_n = 0;
};

Slices slices_for(const ModelArch& a) {
    Slices s;
    if (a.kind == ArchKind::Conv) {
        s.w1_n = std::size_t(a.conv_filters) * a.kernel * a.kernel;
        s.b1_n = a.conv_filters;
        s.w2_n = std::size_t(a.class_count) * a.feature_size();
        s.b2_n = a.class_count;
    } else if (a.hidden > 0) {
        s.w1_n = std::size_t(a.hidden) * a.input_size();
        s.b1_n = a.hidden;
        s.w2_n = std::size_t(a.class_count) * a.hidden;
        s.b2_n = a.class_count;
    } else {
        s.w1_n = std::size_t(a.class_count) * a.input_size();
        s.b1_n = a.class_count;
    }
    s.w1 = 0;
    s.b1 = s.w1 + s.w1_n;
    s.w2 = s.b1 + s.b1_n;
    s.b2 = s.w2 + s.w2_n;
    return s;
}

void softmax_rows(std::vector<double>& logits, std::size_t count, int classes) {
    for (std::size_t i = 0; i < count; ++i) {
        double* row = logits.data() + i * classes;
        double m = row[0];
        for (int c = 1; c < classes; ++c) m = std::max(m, row[c]);
        double sum = 0.0;
        for (int c = 0; c < classes; ++c) {
            row[c] = std::exp(row[c] - m);
            sum += row[c];
        }
        for (int c = 0; c < classes; ++c) row[c] /= sum;
    }
}

// Forward pass with the intermediates backprop needs.
struct ConvCache {
    std::vector<double> relu;     // count * filters * conv_rows * conv_cols
    std::vector<double> pooled;   // count * feature_size
    std::vector<int> pool_arg;    // index into relu for each pooled unit
    std::vector<double> probs;    // count * classes
};

void conv_forward(const ModelParams& p, const Batch& batch, ConvCache& cache) {
    const ModelArch& a = p.arch;
    const Slices s = slices_for(a);
    const double* conv_w = p.values.data() + s.w1;
    const double* conv_b = p.values.data() + s.b1;
    const double* dense_w = p.values.data() + s.w2;
    const double* dense_b = p.values.data() + s.b2;
    const int cr = a.conv_out_rows(), cc = a.conv_out_cols();
    const int pr = a.pooled_rows(), pc = a.pooled_cols();
    const int feat = a.feature_size();
    const std::size_t relu_per = std::size_t(a.conv_filters) * cr * cc;

    cache.relu.assign(batch.count * relu_per, 0.0);
    cache.pooled.assign(batch.count * feat, 0.0);
    cache.pool_arg.assign(batch.count * feat, 0);
    std::vector<double> logits(batch.count * a.class_count, 0.0);

    for (std::size_t n = 0; n < batch.count; ++n) {
        const double* x = batch.x.data() + n * batch.input_size;
        double* relu = cache.relu.data() + n * relu_per;
        for (int f = 0; f < a.conv_filters; ++f) {
            const double* w = conv_w + std::size_t(f) * a.kernel * a.kernel;
            const double b = conv_b[f];
            double* out = relu + std::size_t(f) * cr * cc;
            for (int oy = 0; oy < cr; ++oy) {
                for (int ox = 0; ox < cc; ++ox) {
                    double acc = b;
                    for (int ky = 0; ky < a.kernel; ++ky) {
                        const double* xr = x + (oy + ky) * a.input_cols + ox;
                        const double* wr = w + ky * a.kernel;
                        for (int kx = 0; kx < a.kernel; ++kx) acc += wr[kx] * xr[kx];
                    }
                    out[oy * cc + ox] = acc > 0.0 ? acc : 0.0;
                }
            }
        }
        double* pooled = cache.pooled.data() + n * feat;
        int* arg = cache.pool_arg.data() + n * feat;
        for (int f = 0; f < a.conv_filters; ++f) {
            const double* plane = relu + std::size_t(f) * cr * cc;
            for (int py = 0; py < pr; ++py) {
                for (int px = 0; px < pc; ++px) {
                    int base = (py * a.pool) * cc + px * a.pool;
                    double best = plane[base];
                    int best_idx = base;
                    for (int dy = 0; dy < a.pool; ++dy) {
                        for (int dx = 0; dx < a.pool; ++dx) {
                            int idx = base + dy * cc + dx;
                            if (plane[idx] > best) {
                                best = plane[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    int j = (f * pr + py) * pc + px;
                    pooled[j] = best;
                    arg[j] = int(std::size_t(f) * cr * cc) + best_idx;
                }
            }
        }
        double* lrow = logits.data() + n * a.class_count;
        for (int c = 0; c < a.class_count; ++c) {
            const double* wr = dense_w + std::size_t(c) * feat;
            double acc = dense_b[c];
            for (int j = 0; j < feat; ++j) acc += wr[j] * pooled[j];
            lrow[c] = acc;
        }
    }
    softmax_rows(logits, batch.count, a.class_count);
    cache.probs = std::move(logits);
}

struct DenseCache {
    std::vector<double> hidden;  // count * hidden (post-ReLU), empty when hidden == 0
    std::vector<double> probs;
};

void dense_forward(const ModelParams& p, const Batch& batch, DenseCache& cache) {
    const ModelArch& a = p.arch;
    const Slices s = slices_for(a);
    std::vector<double> logits(batch.count * a.class_count, 0.0);
    if (a.hidden > 0) {
        const double* w1 = p.values.data() + s.w1;
        const double* b1 = p.values.data() + s.b1;
        const double* w2 = p.values.data() + s.w2;
        const double* b2 = p.values.data() + s.b2;
        cache.hidden.assign(batch.count * a.hidden, 0.0);
        for (std::size_t n = 0; n < batch.count; ++n) {
            const double* x = batch.x.data() + n * batch.input_size;
            double* h = cache.hidden.data() + n * a.hidden;
            for (int k = 0; k < a.hidden; ++k) {
                const double* wr = w1 + std::size_t(k) * a.input_size();
                double acc = b1[k];
                for (int j = 0; j < a.input_size(); ++j) acc += wr[j] * x[j];
                h[k] = acc > 0.0 ? acc : 0.0;
            }
            double* lrow = logits.data() + n * a.class_count;
            for (int c = 0; c < a.class_count; ++c) {
                const double* wr = w2 + std::size_t(c) * a.hidden;
                double acc = b2[c];
                for (int k = 0; k < a.hidden; ++k) acc += wr[k] * h[k];
                lrow[c] = acc;
            }
        }
    } else {
        const double* w = p.values.data() + s.w1;
        const double* b = p.values.data() + s.b1;
        for (std::size_t n = 0; n < batch.count; ++n) {
            const double* x = batch.x.data() + n * batch.input_size;
            double* lrow = logits.data() + n * a.class_count;
            for (int c = 0; c < a.class_count; ++c) {
                const double* wr = w + std::size_t(c) * a.input_size();
                double acc = b[c];
                for (int j = 0; j < a.input_size(); ++j) acc += wr[j] * x[j];
                lrow[c] = acc;
            }
        }
    }
    softmax_rows(logits, batch.count, a.class_count);
    cache.probs = std::move(logits);
}

}  // namespace

std::size_t ModelArch::param_count() const {
    const Slices s = slices_for(*this);
    return s.w1_n + s.b1_n + s.w2_n + s.b2_n;
}

void ModelArch::validate() const {
    if (input_rows < 1 || input_cols < 1) throw InvalidParameter("arch: bad input dims");
    if (class_count < 2) throw InvalidParameter("arch: class_count must be >= 2");
    if (kind == ArchKind::Conv) {
        if (conv_filters < 1 || kernel < 1 || pool < 1)
            throw InvalidParameter("arch: bad conv shape");
        if (conv_out_rows() < pool || conv_out_cols() < pool)
            throw InvalidParameter("arch: conv output smaller than pool window");
    } else if (hidden < 0) {
        throw InvalidParameter("arch: hidden must be >= 0");
    }
}

std::string ModelArch::describe() const {
    std::ostringstream os;
    if (kind == ArchKind::Conv)
        os << "conv," << input_rows << 'x' << input_cols << ",f" << conv_filters << ",k"
           << kernel << ",p" << pool << ",c" << class_count;
    else
        os << "dense," << input_rows << 'x' << input_cols << ",h" << hidden << ",c"
           << class_count;
    return os.str();
}

ModelArch ModelArch::parse(const std::string& text) {
    ModelArch a;
    std::stringstream ss(text);
    std::string tok;
    std::vector<std::string> parts;
    while (std::getline(ss, tok, ',')) parts.push_back(tok);
    auto dims = [](const std::string& t, int& r, int& c) {
        auto x = t.find('x');
        if (x == std::string::npos) throw DataError("bad arch dims: " + t);
        r = std::stoi(t.substr(0, x));
        c = std::stoi(t.substr(x + 1));
    };
    auto tagged = [](const std::string& t, char tag) {
        if (t.empty() || t[0] != tag) throw DataError("bad arch token: " + t);
        return std::stoi(t.substr(1));
    };
    if (parts.size() == 6 && parts[0] == "conv") {
        a.kind = ArchKind::Conv;
        dims(parts[1], a.input_rows, a.input_cols);
        a.conv_filters = tagged(parts[2], 'f');
        a.kernel = tagged(parts[3], 'k');
        a.pool = tagged(parts[4], 'p');
        a.class_count = tagged(parts[5], 'c');
    } else if (parts.size() == 4 && parts[0] == "dense") {
        a.kind = ArchKind::Dense;
        dims(parts[1], a.input_rows, a.input_cols);
        a.hidden = tagged(parts[2], 'h');
        a.class_count = tagged(parts[3], 'c');
    } else {
        throw DataError("unrecognized arch descriptor: " + text);
    }
    a.validate();
    return a;
}

Batch make_batch(const LabeledDataset& ds) {
    std::vector<std::size_t> all(ds.size());
    std::iota(all.begin(), all.end(), 0);
    return make_batch(ds, all);
}

Batch make_batch(const LabeledDataset& ds, const std::vector<std::size_t>& indices) {
    Batch b;
    b.input_size = ds.rows * ds.cols;
    b.count = indices.size();
    b.x.resize(b.count * b.input_size);
    b.y.resize(b.count);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const std::uint8_t* img = ds.image(indices[i]);
        double* dst = b.x.data() + i * b.input_size;
        for (int j = 0; j < b.input_size; ++j) dst[j] = img[j] / 255.0;
        b.y[i] = ds.labels[indices[i]];
    }
    return b;
}

ModelParams init_model(const ModelArch& arch, std::uint64_t rng_seed) {
    arch.validate();
    ModelParams p;
    p.arch = arch;
    p.values.assign(arch.param_count(), 0.0);
    std::mt19937_64 eng(rng_seed);
    const Slices s = slices_for(arch);
    auto fill_glorot = [&](std::size_t offset, std::size_t n, int fan_in, int fan_out) {
        double scale = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> u(-scale, scale);
        for (std::size_t i = 0; i < n; ++i) p.values[offset + i] = u(eng);
    };
    if (arch.kind == ArchKind::Conv) {
        fill_glorot(s.w1, s.w1_n, arch.kernel * arch.kernel,
                    arch.kernel * arch.kernel * arch.conv_filters);
        fill_glorot(s.w2, s.w2_n, arch.feature_size(), arch.class_count);
    } else if (arch.hidden > 0) {
        fill_glorot(s.w1, s.w1_n, arch.input_size(), arch.hidden);
        fill_glorot(s.w2, s.w2_n, arch.hidden, arch.class_count);
    } else {
        fill_glorot(s.w1, s.w1_n, arch.input_size(), arch.class_count);
    }
    return p;
}

std::vector<double> forward(const ModelParams& params, const Batch& batch) {
    params.arch.validate();
    if (batch.input_size != params.arch.input_size())
        throw InvalidParameter("forward: batch input size does not match architecture");
    if (params.values.size() != params.arch.param_count())
        throw InvalidParameter("forward: parameter vector has the wrong length");
    if (params.arch.kind == ArchKind::Conv) {
        ConvCache cache;
        conv_forward(params, batch, cache);
        return cache.probs;
    }
    DenseCache cache;
    dense_forward(params, batch, cache);
    return cache.probs;
}

double cross_entropy_loss(const std::vector<double>& probs, const std::vector<int>& labels,
                          int class_count) {
    if (labels.empty()) throw InvalidParameter("cross_entropy_loss: empty batch");
    if (probs.size() != labels.size() * std::size_t(class_count))
        throw InvalidParameter("cross_entropy_loss: probs/labels size mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        int y = labels[i];
        if (y < 0 || y >= class_count)
            throw InvalidParameter("cross_entropy_loss: label out of range");
        double p = std::max(probs[i * class_count + y], kProbClamp);
        total += -std::log(p);
    }
    return total / labels.size();
}

std::vector<double> gradient(const ModelParams& params, const Batch& batch) {
    const ModelArch& a = params.arch;
    if (batch.count == 0) throw InvalidParameter("gradient: empty batch");
    if (batch.input_size != a.input_size())
        throw InvalidParameter("gradient: batch input size does not match architecture");
    const Slices s = slices_for(a);
    std::vector<double> grad(params.values.size(), 0.0);
    const double inv_n = 1.0 / batch.count;

    if (a.kind == ArchKind::Conv) {
        ConvCache cache;
        conv_forward(params, batch, cache);
        const double* dense_w = params.values.data() + s.w2;
        double* g_conv_w = grad.data() + s.w1;
        double* g_conv_b = grad.data() + s.b1;
        double* g_dense_w = grad.data() + s.w2;
        double* g_dense_b = grad.data() + s.b2;
        const int cr = a.conv_out_rows(), cc = a.conv_out_cols();
        const int feat = a.feature_size();
        const std::size_t relu_per = std::size_t(a.conv_filters) * cr * cc;
        std::vector<double> dpool(feat);
        std::vector<double> drelu(relu_per);
        for (std::size_t n = 0; n < batch.count; ++n) {
            const double* probs = cache.probs.data() + n * a.class_count;
            const double* pooled = cache.pooled.data() + n * feat;
            const int* arg = cache.pool_arg.data() + n * feat;
            const double* relu = cache.relu.data() + n * relu_per;
            const double* x = batch.x.data() + n * batch.input_size;
            std::fill(dpool.begin(), dpool.end(), 0.0);
            for (int c = 0; c < a.class_count; ++c) {
                double dlogit = (probs[c] - (c == batch.y[n] ? 1.0 : 0.0)) * inv_n;
                g_dense_b[c] += dlogit;
                double* gw = g_dense_w + std::size_t(c) * feat;
                const double* wr = dense_w + std::size_t(c) * feat;
                for (int j = 0; j < feat; ++j) {
                    gw[j] += dlogit * pooled[j];
                    dpool[j] += dlogit * wr[j];
                }
            }
            std::fill(drelu.begin(), drelu.end(), 0.0);
            for (int j = 0; j < feat; ++j) drelu[arg[j]] += dpool[j];
            // ReLU gate, then accumulate into the conv kernel gradients.
            for (int f = 0; f < a.conv_filters; ++f) {
                const double* plane = relu + std::size_t(f) * cr * cc;
                const double* dplane = drelu.data() + std::size_t(f) * cr * cc;
                double* gw = g_conv_w + std::size_t(f) * a.kernel * a.kernel;
                double gb = 0.0;
                for (int oy = 0; oy < cr; ++oy) {
                    for (int ox = 0; ox < cc; ++ox) {
                        double d = dplane[oy * cc + ox];
                        if (d == 0.0 || plane[oy * cc + ox] <= 0.0) continue;
                        gb += d;
                        for (int ky = 0; ky < a.kernel; ++ky) {
                            const double* xr = x + (oy + ky) * a.input_cols + ox;
                            double* gwr = gw + ky * a.kernel;
                            for (int kx = 0; kx < a.kernel; ++kx) gwr[kx] += d * xr[kx];
                        }
                    }
                }
                g_conv_b[f] += gb;
            }
        }
        return grad;
    }

    DenseCache cache;
    dense_forward(params, batch, cache);
    if (a.hidden > 0) {
        const double* w2 = params.values.data() + s.w2;
        double* g_w1 = grad.data() + s.w1;
        double* g_b1 = grad.data() + s.b1;
        double* g_w2 = grad.data() + s.w2;
        double* g_b2 = grad.data() + s.b2;
        std::vector<double> dh(a.hidden);
        for (std::size_t n = 0; n < batch.count; ++n) {
            const double* probs = cache.probs.data() + n * a.class_count;
            const double* h = cache.hidden.data() + n * a.hidden;
            const double* x = batch.x.data() + n * batch.input_size;
            std::fill(dh.begin(), dh.end(), 0.0);
            for (int c = 0; c < a.class_count; ++c) {
                double dlogit = (probs[c] - (c == batch.y[n] ? 1.0 : 0.0)) * inv_n;
                g_b2[c] += dlogit;
                double* gw = g_w2 + std::size_t(c) * a.hidden;
                const double* wr = w2 + std::size_t(c) * a.hidden;
                for (int k = 0; k < a.hidden; ++k) {
                    gw[k] += dlogit * h[k];
                    dh[k] += dlogit * wr[k];
                }
            }
            for (int k = 0; k < a.hidden; ++k) {
                if (h[k] <= 0.0 || dh[k] == 0.0) continue;
                g_b1[k] += dh[k];
                double* gw = g_w1 + std::size_t(k) * a.input_size();
                for (int j = 0; j < a.input_size(); ++j) gw[j] += dh[k] * x[j];
            }
        }
    } else {
        double* g_w = grad.data() + s.w1;
        double* g_b = grad.data() + s.b1;
        for (std::size_t n = 0; n < batch.count; ++n) {
            const double* probs = cache.probs.data() + n * a.class_count;
            const double* x = batch.x.data() + n * batch.input_size;
            for (int c = 0; c < a.class_count; ++c) {
                double dlogit = (probs[c] - (c == batch.y[n] ? 1.0 : 0.0)) * inv_n;
                g_b[c] += dlogit;
                double* gw = g_w + std::size_t(c) * a.input_size();
                for (int j = 0; j < a.input_size(); ++j) gw[j] += dlogit * x[j];
            }
        }
    }
    return grad;
}

ModelParams sgd_step(const ModelParams& params, const std::vector<double>& grad,
                     double learning_rate) {
    if (grad.size() != params.values.size())
        throw InvalidParameter("sgd_step: gradient length mismatch");
    for (double g : grad)
        if (!std::isfinite(g)) throw NumericalError("sgd_step: non-finite gradient entry");
    ModelParams out = params;
    for (std::size_t i = 0; i < out.values.size(); ++i)
        out.values[i] -= learning_rate * grad[i];
    return out;
}

LocalUpdate local_train(const ModelParams& params, const LabeledDataset& dataset,
                        const SgdConfig& cfg, std::mt19937_64& rng) {
    if (cfg.learning_rate < 0.0) throw InvalidParameter("local_train: learning_rate must be >= 0");
    if (cfg.batch_size < 1) throw InvalidParameter("local_train: batch_size must be >= 1");
    if (dataset.size() == 0) throw InvalidParameter("local_train: empty dataset");

    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    const int n = static_cast<int>(dataset.size());
    const int steps = std::max(1, n / cfg.batch_size);
    const int batch = n < cfg.batch_size ? n : cfg.batch_size;

    LocalUpdate upd;
    upd.params = params;
    upd.sample_count = n;
    upd.steps = steps;
    for (int m = 0; m < steps; ++m) {
        std::vector<std::size_t> idx(order.begin() + std::size_t(m) * batch,
                                     order.begin() + std::size_t(m) * batch + batch);
        Batch b = make_batch(dataset, idx);
        upd.params = sgd_step(upd.params, gradient(upd.params, b), cfg.learning_rate);
    }
    upd.gradient = gradient(upd.params, make_batch(dataset));
    return upd;
}

EvalMetrics evaluate(const ModelParams& params, const LabeledDataset& dataset) {
    if (dataset.size() == 0) throw InvalidParameter("evaluate: empty dataset");
    Batch b = make_batch(dataset);
    std::vector<double> probs = forward(params, b);
    EvalMetrics m;
    m.loss = cross_entropy_loss(probs, b.y, params.arch.class_count);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < b.count; ++i) {
        const double* row = probs.data() + i * params.arch.class_count;
        int best = 0;
        for (int c = 1; c < params.arch.class_count; ++c)
            if (row[c] > row[best]) best = c;
        if (best == b.y[i]) ++correct;
    }
    m.accuracy = static_cast<double>(correct) / b.count;
    return m;
}

void save_checkpoint(const ModelParams& params, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    out.write("FLCC", 4);
    auto write_u32 = [&](std::uint32_t v) {
        unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
        out.write(reinterpret_cast<char*>(b), 4);
    };
    auto write_u64 = [&](std::uint64_t v) {
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        out.write(reinterpret_cast<char*>(b), 8);
    };
    write_u32(1);  // version
    write_u64(params.values.size());
    std::string arch = params.arch.describe();
    write_u32(static_cast<std::uint32_t>(arch.size()));
    out.write(arch.data(), arch.size());
    for (double v : params.values) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        write_u64(bits);
    }
}

ModelParams load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "FLCC", 4) != 0)
        throw DataError(path + ": bad checkpoint magic");
    auto read_u32 = [&]() {
        unsigned char b[4];
        if (!in.read(reinterpret_cast<char*>(b), 4)) throw DataError(path + ": truncated");
        return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
               (std::uint32_t(b[3]) << 24);
    };
    auto read_u64 = [&]() {
        unsigned char b[8];
        if (!in.read(reinterpret_cast<char*>(b), 8)) throw DataError(path + ": truncated");
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
        return v;
    };
    std::uint32_t version = read_u32();
    if (version != 1) throw DataError(path + ": unsupported checkpoint version");
    std::uint64_t count = read_u64();
    std::uint32_t arch_len = read_u32();
    std::string arch_text(arch_len, '\0');
    if (!in.read(arch_text.data(), arch_len)) throw DataError(path + ": truncated arch string");
    ModelParams p;
    p.arch = ModelArch::parse(arch_text);
    if (p.arch.param_count() != count)
        throw DataError(path + ": parameter count does not match architecture");
    p.values.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        std::uint64_t bits = read_u64();
        std::memcpy(&p.values[i], &bits, 8);
    }
    return p;
}

}  // namespace flcc
