#ifndef SPECTRA_CNN_HPP
#define SPECTRA_CNN_HPP

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "spectra/error.hpp"

namespace spectra {

/// Channel-major activation block: data[c][h][w] flattened row-major.
class Tensor3 {
public:
    Tensor3() = default;

    Tensor3(int channels, int height, int width, double fill = 0.0)
        : channels_(channels), height_(height), width_(width),
          data_(static_cast<std::size_t>(channels) * height * width, fill) {
        if (channels < 1 || height < 1 || width < 1)
            throw ShapeMismatch("Tensor3: dimensions must be >= 1");
    }

    int channels() const { return channels_; }
    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t size() const { return data_.size(); }

    double& at(int c, int r, int col) {
        return data_[(static_cast<std::size_t>(c) * height_ + r) * width_ + col];
    }
    double at(int c, int r, int col) const {
        return data_[(static_cast<std::size_t>(c) * height_ + r) * width_ + col];
    }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

private:
    int channels_ = 0, height_ = 0, width_ = 0;
    std::vector<double> data_;
};

/// Kernels [out_ch][in_ch][kh][kw] plus per-output-channel biases.
/// Kernel sides must be odd (same-padding symmetry).
struct ConvParams {
    int out_channels = 0, in_channels = 0, kh = 0, kw = 0;
    std::vector<double> kernels; // out*in*kh*kw, row-major
    std::vector<double> biases;  // out

    ConvParams() = default;
    ConvParams(int out_ch, int in_ch, int kh_, int kw_);

    double& k(int o, int i, int r, int c) {
        return kernels[((static_cast<std::size_t>(o) * in_channels + i) * kh + r) * kw + c];
    }
    double k(int o, int i, int r, int c) const {
        return kernels[((static_cast<std::size_t>(o) * in_channels + i) * kh + r) * kw + c];
    }
};

/// Dense weights [out][in] plus biases.
struct DenseParams {
    int out_features = 0, in_features = 0;
    std::vector<double> weights; // out*in, row-major
    std::vector<double> biases;  // out

    DenseParams() = default;
    DenseParams(int out_f, int in_f)
        : out_features(out_f), in_features(in_f),
          weights(static_cast<std::size_t>(out_f) * in_f, 0.0), biases(out_f, 0.0) {}

    double& w(int o, int i) { return weights[static_cast<std::size_t>(o) * in_features + i]; }
    double w(int o, int i) const { return weights[static_cast<std::size_t>(o) * in_features + i]; }
};

// ---- free layer operations ----

/// Cross-correlation with zero same-padding, stride 1 (no kernel flip;
/// the frequency-domain module uses true convolution).
Tensor3 conv_forward(const Tensor3& x, const ConvParams& p);

/// Elementwise max(0, v).
Tensor3 relu(const Tensor3& x);

/// Non-overlapping 2x2 max pooling; ties go to the first element in
/// row-major window order. The argmax map (flat input indices) drives
/// the backward routing.
struct PoolResult {
    Tensor3 output;
    std::vector<std::size_t> argmax; // one flat input index per output element
};
PoolResult maxpool2(const Tensor3& x);

enum class Mode { train, eval };

/// Inverted dropout: train mode zeroes each element with probability p
/// and scales survivors by 1/(1-p); eval mode is the identity. Draw
/// order is row-major and deterministic for a given engine state.
/// The returned mask holds the applied per-element scale.
Tensor3 dropout(const Tensor3& x, double p, Mode mode, std::mt19937_64& rng,
                std::vector<double>* mask_out = nullptr);

/// Affine map Wx + b (the logits).
std::vector<double> dense_forward(const std::vector<double>& x, const DenseParams& p);

/// Numerically stable softmax: exp(z - max z) / sum.
std::vector<double> softmax(const std::vector<double>& logits);

/// -log(probs[true_class]) with probs clamped below at 1e-12.
double cross_entropy(const std::vector<double>& probs, int true_class);

/// theta <- theta - eta * grad, elementwise.
void sgd_step(std::vector<double>& params, const std::vector<double>& grads, double eta);

// ---- the network ----

struct CnnGradients {
    std::vector<double> conv1_k, conv1_b;
    std::vector<double> conv2_k, conv2_b;
    std::vector<double> dense_w, dense_b;

    void accumulate(const CnnGradients& other, double scale);
};

struct TrainConfig {
    double learning_rate = 0.05;
    int epochs = 10;
    int batch_size = 8;
    std::uint64_t seed = 0;
};

struct EpochStats {
    int epoch;
    double loss;
    double accuracy;
};

/// Two conv blocks and a dense head:
/// conv - relu - maxpool - conv - relu - maxpool - flatten - (dropout) -
/// dense - softmax. Output dimension is the class count (4). Exercises
/// the layer equations at desk scale; makes no claim of matching the
/// reference architectures.
class MicroCnn {
public:
    static constexpr int kClasses = 4;

    /// He-uniform weights, zero biases, seeded.
    MicroCnn(int input_height, int input_width, int conv1_filters, int conv2_filters,
             double dropout_rate, std::uint64_t seed);

    int input_height() const { return input_h_; }
    int input_width() const { return input_w_; }
    double dropout_rate() const { return dropout_p_; }

    /// Runs the stack and records the intermediates backward() needs.
    std::vector<double> forward(const Tensor3& x, Mode mode);

    /// Exact reverse-mode gradients of the cross-entropy loss for the
    /// most recent forward(). Throws StaleIntermediates without one.
    CnnGradients backward(int true_class);

    /// Applies one SGD update; invalidates recorded intermediates.
    void apply(const CnnGradients& grads, double eta);

    /// Seeded-shuffled minibatch SGD. Each epoch ends with a clean
    /// eval-mode pass over the dataset for the loss/accuracy trace.
    std::vector<EpochStats> train(const std::vector<std::pair<Tensor3, int>>& dataset,
                                  const TrainConfig& cfg);

    /// Shape-tagged text format with a versioned header; doubles are
    /// written with round-trip precision.
    void save(const std::filesystem::path& path) const;
    static MicroCnn load(const std::filesystem::path& path);

    const ConvParams& conv1() const { return conv1_; }
    const ConvParams& conv2() const { return conv2_; }
    const DenseParams& dense() const { return dense_; }
    ConvParams& conv1() { return conv1_; }
    ConvParams& conv2() { return conv2_; }
    DenseParams& dense() { return dense_; }

private:
    int input_h_, input_w_;
    double dropout_p_;
    std::uint64_t seed_;
    ConvParams conv1_, conv2_;
    DenseParams dense_;
    std::mt19937_64 dropout_rng_;

    // Recorded forward intermediates (argmax maps, dropout mask, ...).
    struct Cache {
        bool valid = false;
        Tensor3 input;
        Tensor3 z1, a1, p1, z2, a2, p2;
        std::vector<std::size_t> pool1_argmax, pool2_argmax;
        std::vector<double> dropout_mask;
        std::vector<double> flat_dropped;
        std::vector<double> probs;
    } cache_;
};

/// Writes the per-epoch trace as CSV `epoch,loss,accuracy` (LF, UTF-8).
void write_trace_csv(const std::vector<EpochStats>& trace, const std::filesystem::path& path);

} // namespace spectra

#endif
