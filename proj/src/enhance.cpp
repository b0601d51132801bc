#include "spectra/enhance.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include "spectra/image_io.hpp"

namespace spectra {

FilterKind filter_kind_from_string(const std::string& s) {
    if (s == "ideal") return FilterKind::ideal;
    if (s == "gaussian") return FilterKind::gaussian;
    if (s == "butterworth") return FilterKind::butterworth;
    throw ParseError("unknown filter kind: " + s);
}

std::string to_string(FilterKind kind) {
    switch (kind) {
    case FilterKind::ideal: return "ideal";
    case FilterKind::gaussian: return "gaussian";
    case FilterKind::butterworth: return "butterworth";
    }
    return "?";
}

void EnhanceConfig::validate() const {
    if (!(cutoff > 0.0 && cutoff <= 1.0))
        throw InvalidCutoff("cutoff must lie in (0,1], got " + std::to_string(cutoff));
    if (alpha < 0.0) throw ParseError("alpha must be >= 0");
    if (pre_smooth_sigma < 0.0) throw ParseError("pre_smooth must be >= 0");
    if (!(contrast > 0.0)) throw InvalidGamma("contrast must be > 0");
    if (brightness < -1.0 || brightness > 1.0) throw ParseError("brightness must lie in [-1,1]");
    if (order < 1) throw ParseError("order must be >= 1");
}

std::string EnhanceConfig::to_kv() const {
    std::ostringstream out;
    out.precision(17);
    out << "filter = " << to_string(filter) << '\n'
        << "cutoff = " << cutoff << '\n'
        << "order = " << order << '\n'
        << "alpha = " << alpha << '\n'
        << "pre_smooth = " << pre_smooth_sigma << '\n'
        << "brightness = " << brightness << '\n'
        << "contrast = " << contrast << '\n'
        << "equalize = " << (equalize ? "true" : "false") << '\n';
    return out.str();
}

EnhanceConfig EnhanceConfig::from_kv(const std::string& text) {
    EnhanceConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("config line " + std::to_string(lineno) + ": expected key = value");
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        try {
            if (key == "filter") cfg.filter = filter_kind_from_string(val);
            else if (key == "cutoff") cfg.cutoff = std::stod(val);
            else if (key == "order") cfg.order = std::stoi(val);
            else if (key == "alpha") cfg.alpha = std::stod(val);
            else if (key == "pre_smooth") cfg.pre_smooth_sigma = std::stod(val);
            else if (key == "brightness") cfg.brightness = std::stod(val);
            else if (key == "contrast") cfg.contrast = std::stod(val);
            else if (key == "equalize") cfg.equalize = (val == "true" || val == "1");
            else throw ParseError("config line " + std::to_string(lineno) + ": unknown key " + key);
        } catch (const std::invalid_argument&) {
            throw ParseError("config line " + std::to_string(lineno) + ": bad value for " + key);
        }
    }
    cfg.validate();
    return cfg;
}

EnhanceConfig EnhanceConfig::from_kv_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FileNotFound("no such config file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_kv(buf.str());
}

FilterMask build_lowpass(int height, int width, FilterKind kind, double cutoff, int order) {
    if (height < 1 || width < 1)
        throw ShapeMismatch("build_lowpass: dimensions must be >= 1");
    if (!(cutoff > 0.0 && cutoff <= 1.0))
        throw InvalidCutoff("build_lowpass: cutoff must lie in (0,1], got " +
                            std::to_string(cutoff));

    const int cu = height / 2, cv = width / 2;
    const double half_h = height / 2.0, half_w = width / 2.0;
    std::vector<double> data(static_cast<std::size_t>(height) * width);
    for (int u = 0; u < height; ++u) {
        const double du = (height == 1) ? 0.0 : (u - cu) / half_h;
        for (int v = 0; v < width; ++v) {
            const double dv = (width == 1) ? 0.0 : (v - cv) / half_w;
            const double d = std::sqrt(du * du + dv * dv);
            double value = 0.0;
            switch (kind) {
            case FilterKind::ideal:
                value = (d <= cutoff) ? 1.0 : 0.0;
                break;
            case FilterKind::gaussian:
                value = std::exp(-(d * d) / (2.0 * cutoff * cutoff));
                break;
            case FilterKind::butterworth:
                value = 1.0 / (1.0 + std::pow(d / cutoff, 2.0 * order));
                break;
            }
            data[static_cast<std::size_t>(u) * width + v] = value;
        }
    }
    return FilterMask(height, width, std::move(data), kind, cutoff, order);
}

FilterMask highpass_from_lowpass(const FilterMask& lp) {
    std::vector<double> data(lp.size());
    for (std::size_t i = 0; i < lp.size(); ++i) data[i] = 1.0 - lp[i];
    return FilterMask(lp.height(), lp.width(), std::move(data), lp.kind(), lp.cutoff(),
                      lp.order());
}

ImageGrid apply_filter(const ImageGrid& img, const FilterMask& mask) {
    if (img.height() != mask.height() || img.width() != mask.width())
        throw ShapeMismatch("apply_filter: image " + std::to_string(img.height()) + "x" +
                            std::to_string(img.width()) + " vs mask " +
                            std::to_string(mask.height()) + "x" + std::to_string(mask.width()));
    Spectrum spec = center(dft_forward(img));
    for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= mask[i];
    return dft_inverse(uncenter(spec));
}

ImageGrid convolve_freq(const ImageGrid& img, const ImageGrid& kernel) {
    if (kernel.height() > img.height() || kernel.width() > img.width())
        throw KernelTooLarge("convolve_freq: kernel " + std::to_string(kernel.height()) + "x" +
                             std::to_string(kernel.width()) + " exceeds image " +
                             std::to_string(img.height()) + "x" + std::to_string(img.width()));
    ImageGrid padded(img.height(), img.width(), 0.0);
    for (int r = 0; r < kernel.height(); ++r)
        for (int c = 0; c < kernel.width(); ++c) padded.at(r, c) = kernel.at(r, c);

    Spectrum fi = dft_forward(img);
    Spectrum fk = dft_forward(padded);
    for (std::size_t i = 0; i < fi.size(); ++i) fi[i] *= fk[i];
    return dft_inverse(fi);
}

ImageGrid gaussian_kernel_wrapped(int height, int width, double sigma) {
    ImageGrid k(height, width);
    double sum = 0.0;
    for (int r = 0; r < height; ++r) {
        const double dr = std::min(r, height - r);
        for (int c = 0; c < width; ++c) {
            const double dc = std::min(c, width - c);
            const double v = std::exp(-(dr * dr + dc * dc) / (2.0 * sigma * sigma));
            k.at(r, c) = v;
            sum += v;
        }
    }
    for (auto& v : k.data()) v /= sum;
    return k;
}

ImageGrid normalize_minmax(const ImageGrid& img) {
    const auto [mn_it, mx_it] = std::minmax_element(img.data().begin(), img.data().end());
    const double mn = *mn_it, mx = *mx_it;
    ImageGrid out(img.height(), img.width());
    if (mx - mn < 1e-12) {
        std::fill(out.data().begin(), out.data().end(), 0.5);
        return out;
    }
    const double inv = 1.0 / (mx - mn);
    for (std::size_t i = 0; i < img.size(); ++i) out[i] = (img[i] - mn) * inv;
    return out;
}

ImageGrid adjust_brightness_contrast(const ImageGrid& img, double beta, double gamma) {
    if (!(gamma > 0.0))
        throw InvalidGamma("adjust_brightness_contrast: gamma must be > 0, got " +
                           std::to_string(gamma));
    if (beta == 0.0 && gamma == 1.0) return img; // exact identity, no rounding noise
    ImageGrid out(img.height(), img.width());
    for (std::size_t i = 0; i < img.size(); ++i)
        out[i] = std::clamp(gamma * (img[i] - 0.5) + 0.5 + beta, 0.0, 1.0);
    return out;
}

ImageGrid histogram_equalize(const ImageGrid& img) {
    constexpr int kLevels = 256;
    std::array<std::size_t, kLevels> hist = {};
    std::vector<int> levels(img.size());
    for (std::size_t i = 0; i < img.size(); ++i) {
        const int level = quantize_u8(img[i]); // same rule as the file boundary
        levels[i] = level;
        ++hist[level];
    }

    int lo = 0, hi = kLevels - 1;
    while (hist[lo] == 0) ++lo;
    while (hist[hi] == 0) --hi;
    if (lo == hi) return img; // constant image

    const double total = static_cast<double>(img.size());
    std::array<double, kLevels> cdf;
    std::size_t running = 0;
    for (int k = 0; k < kLevels; ++k) {
        running += hist[k];
        cdf[k] = running / total;
    }
    const double cdf_min = cdf[lo]; // smallest nonzero CDF value

    std::array<double, kLevels> remap;
    for (int k = 0; k < kLevels; ++k)
        remap[k] = std::clamp((cdf[k] - cdf_min) / (1.0 - cdf_min), 0.0, 1.0);

    ImageGrid out(img.height(), img.width());
    for (std::size_t i = 0; i < img.size(); ++i) out[i] = remap[levels[i]];
    return out;
}

ImageGrid enhance(const ImageGrid& img, const EnhanceConfig& cfg) {
    cfg.validate();

    ImageGrid work = img;
    if (cfg.pre_smooth_sigma > 0.0)
        work = convolve_freq(work, gaussian_kernel_wrapped(work.height(), work.width(),
                                                           cfg.pre_smooth_sigma));

    const FilterMask lp = build_lowpass(work.height(), work.width(), cfg.filter, cfg.cutoff,
                                        cfg.order);
    const ImageGrid detail = apply_filter(work, highpass_from_lowpass(lp));

    ImageGrid recombined(work.height(), work.width());
    for (std::size_t i = 0; i < work.size(); ++i)
        recombined[i] = work[i] + cfg.alpha * detail[i];

    ImageGrid out = normalize_minmax(recombined);
    if (cfg.equalize) out = histogram_equalize(out);
    return adjust_brightness_contrast(out, cfg.brightness, cfg.contrast);
}

} // namespace spectra
