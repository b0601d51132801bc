#ifndef SPECTRA_ENHANCE_HPP
#define SPECTRA_ENHANCE_HPP

#include <filesystem>
#include <string>

#include "spectra/dft.hpp"
#include "spectra/grid.hpp"

namespace spectra {

enum class FilterKind { ideal, gaussian, butterworth };

FilterKind filter_kind_from_string(const std::string& s);
std::string to_string(FilterKind kind);

/// Real-valued transfer function over the centered frequency grid.
/// Values lie in [0,1]; low-pass masks are exactly 1 at DC.
class FilterMask {
public:
    FilterMask(int height, int width, std::vector<double> data, FilterKind kind, double cutoff,
               int order)
        : height_(height), width_(width), kind_(kind), cutoff_(cutoff), order_(order),
          data_(std::move(data)) {}

    int height() const { return height_; }
    int width() const { return width_; }
    FilterKind kind() const { return kind_; }
    double cutoff() const { return cutoff_; }
    int order() const { return order_; }

    double at(int u, int v) const { return data_[static_cast<std::size_t>(u) * width_ + v]; }
    double operator[](std::size_t i) const { return data_[i]; }
    const std::vector<double>& data() const { return data_; }
    std::size_t size() const { return data_.size(); }

private:
    int height_, width_;
    FilterKind kind_;
    double cutoff_;
    int order_;
    std::vector<double> data_;
};

/// Full configuration of the enhancement pipeline. The tonal defaults
/// are neutral; the filter defaults to a gaussian low-pass at 0.3.
struct EnhanceConfig {
    FilterKind filter = FilterKind::gaussian;
    double cutoff = 0.3;       // normalized radius in (0,1]
    int order = 2;             // butterworth only
    double alpha = 1.0;        // detail gain, >= 0
    double pre_smooth_sigma = 0.0; // pixels; 0 disables pre-smoothing
    double brightness = 0.0;   // beta in [-1,1]
    double contrast = 1.0;     // gamma > 0
    bool equalize = false;

    void validate() const;

    /// Flat `key = value` text serialization, one key per line; keys
    /// match the CLI flags.
    std::string to_kv() const;
    static EnhanceConfig from_kv(const std::string& text);
    static EnhanceConfig from_kv_file(const std::filesystem::path& path);
};

/// Centered low-pass mask over the normalized radial distance
/// d(u,v) = sqrt((du/(H/2))^2 + (dv/(W/2))^2) from DC.
/// ideal: 1 if d <= cutoff; gaussian: exp(-d^2/(2 cutoff^2));
/// butterworth: 1/(1 + (d/cutoff)^(2 order)).
FilterMask build_lowpass(int height, int width, FilterKind kind, double cutoff, int order = 2);

/// Per-bin complement 1 - L.
FilterMask highpass_from_lowpass(const FilterMask& lp);

/// forward -> center -> multiply -> uncenter -> inverse. Output is not
/// renormalized.
ImageGrid apply_filter(const ImageGrid& img, const FilterMask& mask);

/// Circular convolution via frequency-domain multiplication. The kernel
/// is zero-padded to the image shape, anchored at (0,0).
ImageGrid convolve_freq(const ImageGrid& img, const ImageGrid& kernel);

/// Image-sized gaussian kernel with its center wrapped around (0,0),
/// normalized to unit sum, so convolve_freq smooths without shifting.
ImageGrid gaussian_kernel_wrapped(int height, int width, double sigma);

/// Affine map of [min,max] onto [0,1]; constant inputs map to all 0.5.
ImageGrid normalize_minmax(const ImageGrid& img);

/// v' = clamp(gamma*(v - 0.5) + 0.5 + beta, 0, 1).
ImageGrid adjust_brightness_contrast(const ImageGrid& img, double beta, double gamma);

/// 256-level histogram equalization with the classic CDF remap;
/// constant images pass through unchanged.
ImageGrid histogram_equalize(const ImageGrid& img);

/// The full pipeline: optional pre-smooth, unsharp-mask recombination
/// with the subtracted low-pass component, min-max normalization,
/// optional equalization, brightness/contrast. Output lies in [0,1].
ImageGrid enhance(const ImageGrid& img, const EnhanceConfig& cfg);

} // namespace spectra

#endif
