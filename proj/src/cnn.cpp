#include "spectra/cnn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

namespace spectra {

namespace {

// Uniform in [0,1) straight from the engine bits; the standard library
// distributions are implementation-defined, this is reproducible
// everywhere mt19937_64 is.
double uniform01(std::mt19937_64& rng) { return (rng() >> 11) * 0x1.0p-53; }

void he_uniform_fill(std::vector<double>& w, int fan_in, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / fan_in);
    for (double& v : w) v = (2.0 * uniform01(rng) - 1.0) * limit;
}

} // namespace

ConvParams::ConvParams(int out_ch, int in_ch, int kh_, int kw_)
    : out_channels(out_ch), in_channels(in_ch), kh(kh_), kw(kw_),
      kernels(static_cast<std::size_t>(out_ch) * in_ch * kh_ * kw_, 0.0), biases(out_ch, 0.0) {
    if (kh_ % 2 == 0 || kw_ % 2 == 0)
        throw ShapeMismatch("ConvParams: kernel sides must be odd");
}

Tensor3 conv_forward(const Tensor3& x, const ConvParams& p) {
    if (x.channels() != p.in_channels)
        throw ChannelMismatch("conv_forward: input has " + std::to_string(x.channels()) +
                              " channels, kernels expect " + std::to_string(p.in_channels));
    const int h = x.height(), w = x.width();
    const int ph = p.kh / 2, pw = p.kw / 2;
    Tensor3 out(p.out_channels, h, w);
    for (int o = 0; o < p.out_channels; ++o) {
        for (int r = 0; r < h; ++r) {
            for (int c = 0; c < w; ++c) {
                double acc = p.biases[o];
                for (int i = 0; i < p.in_channels; ++i) {
                    for (int u = 0; u < p.kh; ++u) {
                        const int rr = r + u - ph;
                        if (rr < 0 || rr >= h) continue;
                        for (int v = 0; v < p.kw; ++v) {
                            const int cc = c + v - pw;
                            if (cc < 0 || cc >= w) continue;
                            acc += x.at(i, rr, cc) * p.k(o, i, u, v);
                        }
                    }
                }
                out.at(o, r, c) = acc;
            }
        }
    }
    return out;
}

Tensor3 relu(const Tensor3& x) {
    Tensor3 out(x.channels(), x.height(), x.width());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::max(0.0, x[i]);
    return out;
}

PoolResult maxpool2(const Tensor3& x) {
    if (x.height() % 2 != 0 || x.width() % 2 != 0)
        throw OddDimension("maxpool2: dimensions must be even, got " +
                           std::to_string(x.height()) + "x" + std::to_string(x.width()));
    const int oh = x.height() / 2, ow = x.width() / 2;
    PoolResult res{Tensor3(x.channels(), oh, ow), {}};
    res.argmax.resize(res.output.size());
    std::size_t out_i = 0;
    for (int ch = 0; ch < x.channels(); ++ch) {
        for (int r = 0; r < oh; ++r) {
            for (int c = 0; c < ow; ++c) {
                double best = -std::numeric_limits<double>::infinity();
                std::size_t best_idx = 0;
                for (int dr = 0; dr < 2; ++dr) {
                    for (int dc = 0; dc < 2; ++dc) {
                        const int rr = 2 * r + dr, cc = 2 * c + dc;
                        const std::size_t idx =
                            (static_cast<std::size_t>(ch) * x.height() + rr) * x.width() + cc;
                        if (x[idx] > best) { // strict: first-in-order wins ties
                            best = x[idx];
                            best_idx = idx;
                        }
                    }
                }
                res.output[out_i] = best;
                res.argmax[out_i] = best_idx;
                ++out_i;
            }
        }
    }
    return res;
}

Tensor3 dropout(const Tensor3& x, double p, Mode mode, std::mt19937_64& rng,
                std::vector<double>* mask_out) {
    if (p < 0.0 || p >= 1.0)
        throw InvalidRate("dropout: rate must lie in [0,1), got " + std::to_string(p));
    Tensor3 out(x.channels(), x.height(), x.width());
    if (mask_out) mask_out->assign(x.size(), 1.0);
    if (mode == Mode::eval || p == 0.0) {
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i];
        return out;
    }
    const double keep_scale = 1.0 / (1.0 - p);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double scale = (uniform01(rng) < p) ? 0.0 : keep_scale;
        out[i] = x[i] * scale;
        if (mask_out) (*mask_out)[i] = scale;
    }
    return out;
}

std::vector<double> dense_forward(const std::vector<double>& x, const DenseParams& p) {
    if (static_cast<int>(x.size()) != p.in_features)
        throw ShapeMismatch("dense_forward: input size " + std::to_string(x.size()) +
                            " vs expected " + std::to_string(p.in_features));
    std::vector<double> out(p.out_features);
    for (int o = 0; o < p.out_features; ++o) {
        double acc = p.biases[o];
        for (int i = 0; i < p.in_features; ++i) acc += p.w(o, i) * x[i];
        out[o] = acc;
    }
    return out;
}

std::vector<double> softmax(const std::vector<double>& logits) {
    if (logits.empty()) throw ShapeMismatch("softmax: empty input");
    const double zmax = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - zmax);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
}

double cross_entropy(const std::vector<double>& probs, int true_class) {
    if (true_class < 0 || true_class >= static_cast<int>(probs.size()))
        throw IndexOutOfRange("cross_entropy: class " + std::to_string(true_class) +
                              " out of range for " + std::to_string(probs.size()) + " probs");
    return -std::log(std::max(probs[true_class], 1e-12));
}

void sgd_step(std::vector<double>& params, const std::vector<double>& grads, double eta) {
    if (params.size() != grads.size())
        throw ShapeMismatch("sgd_step: " + std::to_string(params.size()) + " params vs " +
                            std::to_string(grads.size()) + " grads");
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= eta * grads[i];
}

void CnnGradients::accumulate(const CnnGradients& other, double scale) {
    auto axpy = [scale](std::vector<double>& acc, const std::vector<double>& inc) {
        if (acc.empty()) acc.assign(inc.size(), 0.0);
        for (std::size_t i = 0; i < inc.size(); ++i) acc[i] += scale * inc[i];
    };
    axpy(conv1_k, other.conv1_k);
    axpy(conv1_b, other.conv1_b);
    axpy(conv2_k, other.conv2_k);
    axpy(conv2_b, other.conv2_b);
    axpy(dense_w, other.dense_w);
    axpy(dense_b, other.dense_b);
}

MicroCnn::MicroCnn(int input_height, int input_width, int conv1_filters, int conv2_filters,
                   double dropout_rate, std::uint64_t seed)
    : input_h_(input_height), input_w_(input_width), dropout_p_(dropout_rate), seed_(seed),
      conv1_(conv1_filters, 1, 3, 3), conv2_(conv2_filters, conv1_filters, 3, 3),
      dropout_rng_(seed ^ 0x9e3779b97f4a7c15ULL) {
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        throw InvalidRate("MicroCnn: dropout rate must lie in [0,1)");
    if (input_height % 4 != 0 || input_width % 4 != 0)
        throw OddDimension("MicroCnn: input dimensions must be divisible by 4 (two 2x2 pools)");

    const int flat = conv2_filters * (input_height / 4) * (input_width / 4);
    dense_ = DenseParams(kClasses, flat);

    std::mt19937_64 rng(seed);
    he_uniform_fill(conv1_.kernels, conv1_.in_channels * conv1_.kh * conv1_.kw, rng);
    he_uniform_fill(conv2_.kernels, conv2_.in_channels * conv2_.kh * conv2_.kw, rng);
    he_uniform_fill(dense_.weights, dense_.in_features, rng);
    // biases stay zero
}

std::vector<double> MicroCnn::forward(const Tensor3& x, Mode mode) {
    if (x.channels() != 1 || x.height() != input_h_ || x.width() != input_w_)
        throw ShapeMismatch("MicroCnn::forward: expected 1x" + std::to_string(input_h_) + "x" +
                            std::to_string(input_w_) + " input");

    cache_.input = x;
    cache_.z1 = conv_forward(x, conv1_);
    cache_.a1 = relu(cache_.z1);
    PoolResult pool1 = maxpool2(cache_.a1);
    cache_.p1 = std::move(pool1.output);
    cache_.pool1_argmax = std::move(pool1.argmax);

    cache_.z2 = conv_forward(cache_.p1, conv2_);
    cache_.a2 = relu(cache_.z2);
    PoolResult pool2 = maxpool2(cache_.a2);
    cache_.p2 = std::move(pool2.output);
    cache_.pool2_argmax = std::move(pool2.argmax);

    Tensor3 dropped = dropout(cache_.p2, dropout_p_, mode, dropout_rng_, &cache_.dropout_mask);
    cache_.flat_dropped.assign(dropped.data().begin(), dropped.data().end());

    cache_.probs = softmax(dense_forward(cache_.flat_dropped, dense_));
    cache_.valid = true;
    return cache_.probs;
}

CnnGradients MicroCnn::backward(int true_class) {
    if (!cache_.valid)
        throw StaleIntermediates("backward: no recorded forward pass");
    if (true_class < 0 || true_class >= kClasses)
        throw IndexOutOfRange("backward: class " + std::to_string(true_class) + " out of range");

    CnnGradients g;

    // softmax + cross-entropy collapse to p - onehot at the logits.
    std::vector<double> dlogits = cache_.probs;
    dlogits[true_class] -= 1.0;

    g.dense_w.assign(dense_.weights.size(), 0.0);
    g.dense_b = dlogits;
    std::vector<double> dflat(dense_.in_features, 0.0);
    for (int o = 0; o < dense_.out_features; ++o) {
        for (int i = 0; i < dense_.in_features; ++i) {
            g.dense_w[static_cast<std::size_t>(o) * dense_.in_features + i] =
                dlogits[o] * cache_.flat_dropped[i];
            dflat[i] += dense_.w(o, i) * dlogits[o];
        }
    }
    for (int i = 0; i < dense_.in_features; ++i) dflat[i] *= cache_.dropout_mask[i];

    // unpool 2 -> relu 2 gate
    Tensor3 da2(cache_.a2.channels(), cache_.a2.height(), cache_.a2.width());
    for (std::size_t i = 0; i < cache_.pool2_argmax.size(); ++i)
        da2[cache_.pool2_argmax[i]] += dflat[i];
    Tensor3 dz2(da2.channels(), da2.height(), da2.width());
    for (std::size_t i = 0; i < dz2.size(); ++i) dz2[i] = cache_.z2[i] > 0.0 ? da2[i] : 0.0;

    auto conv_backward = [](const Tensor3& input, const Tensor3& dout, const ConvParams& p,
                            std::vector<double>& dk, std::vector<double>& db, Tensor3* dinput) {
        const int h = input.height(), w = input.width();
        const int ph = p.kh / 2, pw = p.kw / 2;
        dk.assign(p.kernels.size(), 0.0);
        db.assign(p.biases.size(), 0.0);
        for (int o = 0; o < p.out_channels; ++o) {
            for (int r = 0; r < h; ++r)
                for (int c = 0; c < w; ++c) db[o] += dout.at(o, r, c);
            for (int i = 0; i < p.in_channels; ++i) {
                for (int u = 0; u < p.kh; ++u) {
                    for (int v = 0; v < p.kw; ++v) {
                        double acc = 0.0;
                        for (int r = 0; r < h; ++r) {
                            const int rr = r + u - ph;
                            if (rr < 0 || rr >= h) continue;
                            for (int c = 0; c < w; ++c) {
                                const int cc = c + v - pw;
                                if (cc < 0 || cc >= w) continue;
                                acc += input.at(i, rr, cc) * dout.at(o, r, c);
                            }
                        }
                        dk[((static_cast<std::size_t>(o) * p.in_channels + i) * p.kh + u) * p.kw +
                           v] = acc;
                    }
                }
            }
        }
        if (dinput) {
            *dinput = Tensor3(p.in_channels, h, w);
            for (int i = 0; i < p.in_channels; ++i) {
                for (int a = 0; a < h; ++a) {
                    for (int b = 0; b < w; ++b) {
                        double acc = 0.0;
                        for (int o = 0; o < p.out_channels; ++o) {
                            for (int u = 0; u < p.kh; ++u) {
                                const int r = a + ph - u;
                                if (r < 0 || r >= h) continue;
                                for (int v = 0; v < p.kw; ++v) {
                                    const int c = b + pw - v;
                                    if (c < 0 || c >= w) continue;
                                    acc += dout.at(o, r, c) * p.k(o, i, u, v);
                                }
                            }
                        }
                        dinput->at(i, a, b) = acc;
                    }
                }
            }
        }
    };

    Tensor3 dp1;
    conv_backward(cache_.p1, dz2, conv2_, g.conv2_k, g.conv2_b, &dp1);

    // unpool 1 -> relu 1 gate
    Tensor3 da1(cache_.a1.channels(), cache_.a1.height(), cache_.a1.width());
    for (std::size_t i = 0; i < cache_.pool1_argmax.size(); ++i)
        da1[cache_.pool1_argmax[i]] += dp1[i];
    Tensor3 dz1(da1.channels(), da1.height(), da1.width());
    for (std::size_t i = 0; i < dz1.size(); ++i) dz1[i] = cache_.z1[i] > 0.0 ? da1[i] : 0.0;

    conv_backward(cache_.input, dz1, conv1_, g.conv1_k, g.conv1_b, nullptr);
    return g;
}

void MicroCnn::apply(const CnnGradients& grads, double eta) {
    sgd_step(conv1_.kernels, grads.conv1_k, eta);
    sgd_step(conv1_.biases, grads.conv1_b, eta);
    sgd_step(conv2_.kernels, grads.conv2_k, eta);
    sgd_step(conv2_.biases, grads.conv2_b, eta);
    sgd_step(dense_.weights, grads.dense_w, eta);
    sgd_step(dense_.biases, grads.dense_b, eta);
    cache_.valid = false; // parameters moved, intermediates are stale
}

std::vector<EpochStats> MicroCnn::train(const std::vector<std::pair<Tensor3, int>>& dataset,
                                        const TrainConfig& cfg) {
    if (dataset.empty()) throw EmptyDataset("train: empty dataset");
    if (!(cfg.learning_rate >= 0.0)) throw InvalidRate("train: learning rate must be >= 0");

    std::mt19937_64 shuffle_rng(cfg.seed);
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<EpochStats> trace;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        // Fisher-Yates with explicit draws; std::shuffle is
        // implementation-defined.
        for (std::size_t i = order.size() - 1; i > 0; --i) {
            const std::size_t j = shuffle_rng() % (i + 1);
            std::swap(order[i], order[j]);
        }

        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            CnnGradients batch;
            const double inv = 1.0 / static_cast<double>(end - start);
            for (std::size_t k = start; k < end; ++k) {
                const auto& [img, label] = dataset[order[k]];
                forward(img, Mode::train);
                batch.accumulate(backward(label), inv);
            }
            apply(batch, cfg.learning_rate);
        }

        // Clean eval pass for the trace.
        double loss_sum = 0.0;
        int correct = 0;
        for (const auto& [img, label] : dataset) {
            const std::vector<double> probs = forward(img, Mode::eval);
            loss_sum += cross_entropy(probs, label);
            const int pred = static_cast<int>(
                std::max_element(probs.begin(), probs.end()) - probs.begin());
            if (pred == label) ++correct;
        }
        cache_.valid = false;
        trace.push_back({epoch, loss_sum / static_cast<double>(dataset.size()),
                         static_cast<double>(correct) / static_cast<double>(dataset.size())});
    }
    return trace;
}

namespace {

constexpr const char* kModelMagic = "spectra-microcnn 1";

void write_array(std::ostream& out, const char* name, const std::vector<double>& v) {
    out << name << ' ' << v.size() << '\n';
    char buf[32];
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", v[i]);
        out << buf << (i + 1 == v.size() ? '\n' : ' ');
    }
    if (v.empty()) out << '\n';
}

std::vector<double> read_array(std::istream& in, const std::string& expect_name) {
    std::string name;
    std::size_t n = 0;
    if (!(in >> name >> n) || name != expect_name)
        throw ParseError("model file: expected array " + expect_name);
    std::vector<double> v(n);
    for (double& x : v)
        if (!(in >> x)) throw ParseError("model file: truncated array " + expect_name);
    return v;
}

} // namespace

void MicroCnn::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure("cannot open for writing: " + path.string());
    out << kModelMagic << '\n';
    out << "input " << input_h_ << ' ' << input_w_ << '\n';
    out << "conv1 " << conv1_.out_channels << ' ' << conv1_.in_channels << ' ' << conv1_.kh << ' '
        << conv1_.kw << '\n';
    out << "conv2 " << conv2_.out_channels << ' ' << conv2_.in_channels << ' ' << conv2_.kh << ' '
        << conv2_.kw << '\n';
    out << "dense " << dense_.out_features << ' ' << dense_.in_features << '\n';
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", dropout_p_);
    out << "dropout " << buf << '\n';
    out << "seed " << seed_ << '\n';
    write_array(out, "conv1_k", conv1_.kernels);
    write_array(out, "conv1_b", conv1_.biases);
    write_array(out, "conv2_k", conv2_.kernels);
    write_array(out, "conv2_b", conv2_.biases);
    write_array(out, "dense_w", dense_.weights);
    write_array(out, "dense_b", dense_.biases);
    if (!out) throw IoFailure("write failed: " + path.string());
}

MicroCnn MicroCnn::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileNotFound("no such model file: " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kModelMagic)
        throw ParseError("model file: bad header in " + path.string());

    std::string tag;
    int ih, iw, c1o, c1i, c1h, c1w, c2o, c2i, c2h, c2w, dout, din;
    double p;
    std::uint64_t seed;
    if (!(in >> tag >> ih >> iw) || tag != "input") throw ParseError("model file: bad input line");
    if (!(in >> tag >> c1o >> c1i >> c1h >> c1w) || tag != "conv1")
        throw ParseError("model file: bad conv1 line");
    if (!(in >> tag >> c2o >> c2i >> c2h >> c2w) || tag != "conv2")
        throw ParseError("model file: bad conv2 line");
    if (!(in >> tag >> dout >> din) || tag != "dense")
        throw ParseError("model file: bad dense line");
    if (!(in >> tag >> p) || tag != "dropout") throw ParseError("model file: bad dropout line");
    if (!(in >> tag >> seed) || tag != "seed") throw ParseError("model file: bad seed line");

    MicroCnn net(ih, iw, c1o, c2o, p, seed);
    if (net.conv1_.in_channels != c1i || net.conv1_.kh != c1h || net.conv1_.kw != c1w ||
        net.conv2_.in_channels != c2i || net.dense_.out_features != dout ||
        net.dense_.in_features != din)
        throw ParseError("model file: inconsistent shapes in " + path.string());

    net.conv1_.kernels = read_array(in, "conv1_k");
    net.conv1_.biases = read_array(in, "conv1_b");
    net.conv2_.kernels = read_array(in, "conv2_k");
    net.conv2_.biases = read_array(in, "conv2_b");
    net.dense_.weights = read_array(in, "dense_w");
    net.dense_.biases = read_array(in, "dense_b");
    if (net.conv1_.kernels.size() != static_cast<std::size_t>(c1o) * c1i * c1h * c1w ||
        net.dense_.weights.size() != static_cast<std::size_t>(dout) * din)
        throw ParseError("model file: array sizes disagree with shapes");
    return net;
}

void write_trace_csv(const std::vector<EpochStats>& trace, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure("cannot open for writing: " + path.string());
    out << "epoch,loss,accuracy\n";
    char buf[64];
    for (const EpochStats& row : trace) {
        std::snprintf(buf, sizeof buf, "%d,%.9f,%.6f\n", row.epoch, row.loss, row.accuracy);
        out << buf;
    }
    if (!out) throw IoFailure("write failed: " + path.string());
}

} // namespace spectra
