#include "spectra/dft.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>

namespace spectra {

namespace {

using cplx = std::complex<double>;

constexpr double kPi = std::numbers::pi;

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

int next_pow2(int n) {
    int m = 1;
    while (m < n) m <<= 1;
    return m;
}

// Explicit complex product. The operator* of std::complex routes through
// __muldc3 for non-finite handling, which dominates the butterfly cost.
inline cplx cmul(cplx a, cplx b) {
    return {a.real() * b.real() - a.imag() * b.imag(),
            a.real() * b.imag() + a.imag() * b.real()};
}

// Radix-2 power-of-two kernel with a shared twiddle table:
// tw[j] = e^{-2 pi i j / n} for j < n/2; stage `len` reads it at stride n/len.
class PowTwoFft {
public:
    explicit PowTwoFft(int n) : n_(n), tw_(static_cast<std::size_t>(std::max(1, n / 2))) {
        for (int j = 0; j < n / 2; ++j) {
            const double ang = -2.0 * kPi * j / n;
            tw_[j] = cplx(std::cos(ang), std::sin(ang));
        }
    }

    // sign = -1 forward, +1 inverse (unnormalized either way).
    void run(cplx* a, int sign) const {
        const int n = n_;
        for (int i = 1, j = 0; i < n; ++i) {
            int bit = n >> 1;
            for (; j & bit; bit >>= 1) j ^= bit;
            j ^= bit;
            if (i < j) std::swap(a[i], a[j]);
        }
        for (int len = 2; len <= n; len <<= 1) {
            const int half = len / 2;
            const int stride = n / len;
            for (int i = 0; i < n; i += len) {
                for (int j = 0; j < half; ++j) {
                    const cplx w = sign < 0 ? tw_[j * stride] : std::conj(tw_[j * stride]);
                    const cplx u = a[i + j];
                    const cplx v = cmul(a[i + j + half], w);
                    a[i + j] = u + v;
                    a[i + j + half] = u - v;
                }
            }
        }
    }

private:
    int n_;
    std::vector<cplx> tw_;
};

// One-dimensional transform plan for a fixed length. Powers of two go
// through radix-2 directly; any other length is reduced to a padded
// power-of-two convolution via Bluestein's chirp-z identity
//   X_k = conj(w_k) * sum_n (x_n conj(w_n)) w_{k-n},  w_m = e^{i pi m^2 / n}.
class Fft1d {
public:
    explicit Fft1d(int n) : n_(n) {
        if (is_pow2(n_)) {
            pow2_.emplace(n_);
            return;
        }
        m_ = next_pow2(2 * n_ - 1);
        pow2_.emplace(m_);
        chirp_.resize(n_);
        for (int i = 0; i < n_; ++i) {
            // i^2 mod 2n keeps the twiddle argument small and exact.
            long long q = (static_cast<long long>(i) * i) % (2LL * n_);
            double ang = kPi * static_cast<double>(q) / n_;
            chirp_[i] = cplx(std::cos(ang), std::sin(ang));
        }
        bhat_.assign(m_, cplx(0.0, 0.0));
        bhat_[0] = chirp_[0];
        for (int i = 1; i < n_; ++i) bhat_[i] = bhat_[m_ - i] = chirp_[i];
        pow2_->run(bhat_.data(), -1);
        work_.resize(m_);
    }

    int length() const { return n_; }

    // sign = -1 forward, +1 inverse; no normalization.
    void transform(cplx* a, int sign) {
        if (n_ == 1) return;
        if (is_pow2(n_)) {
            pow2_->run(a, sign);
            return;
        }
        // Bluestein. The tables bake in w_m for the forward direction;
        // the inverse transform is conj(forward(conj(x))).
        if (sign > 0) {
            for (int i = 0; i < n_; ++i) a[i] = std::conj(a[i]);
            transform(a, -1);
            for (int i = 0; i < n_; ++i) a[i] = std::conj(a[i]);
            return;
        }
        std::fill(work_.begin() + n_, work_.end(), cplx(0.0, 0.0));
        for (int i = 0; i < n_; ++i) work_[i] = cmul(a[i], std::conj(chirp_[i]));
        pow2_->run(work_.data(), -1);
        for (int i = 0; i < m_; ++i) work_[i] = cmul(work_[i], bhat_[i]);
        pow2_->run(work_.data(), +1);
        const double scale = 1.0 / m_;
        for (int i = 0; i < n_; ++i) a[i] = cmul(std::conj(chirp_[i]), work_[i] * scale);
    }

private:
    int n_;
    int m_ = 0;
    std::optional<PowTwoFft> pow2_;
    std::vector<cplx> chirp_;
    std::vector<cplx> bhat_;
    std::vector<cplx> work_;
};

// Row-column decomposition over the 2D grid, in place.
void fft_2d(std::vector<cplx>& data, int height, int width, int sign) {
    Fft1d row_plan(width);
    for (int r = 0; r < height; ++r)
        row_plan.transform(data.data() + static_cast<std::size_t>(r) * width, sign);

    Fft1d col_plan(height);
    std::vector<cplx> col(height);
    for (int c = 0; c < width; ++c) {
        for (int r = 0; r < height; ++r) col[r] = data[static_cast<std::size_t>(r) * width + c];
        col_plan.transform(col.data(), sign);
        for (int r = 0; r < height; ++r) data[static_cast<std::size_t>(r) * width + c] = col[r];
    }
}

} // namespace

Spectrum dft_forward(const ImageGrid& img) {
    const int h = img.height(), w = img.width();
    std::vector<cplx> data(img.size());
    for (std::size_t i = 0; i < img.size(); ++i) data[i] = cplx(img[i], 0.0);
    fft_2d(data, h, w, -1);
    return Spectrum(h, w, std::move(data), /*dc_centered=*/false);
}

ImageGrid dft_inverse(const Spectrum& spec) {
    if (spec.dc_centered())
        throw AlreadyCentered("dft_inverse: spectrum must be uncentered (call uncenter first)");
    const int h = spec.height(), w = spec.width();
    std::vector<cplx> data = spec.data();
    fft_2d(data, h, w, +1);

    const double scale = 1.0 / (static_cast<double>(h) * w);
    double max_re = 0.0, max_im = 0.0;
    for (const cplx& z : data) {
        max_re = std::max(max_re, std::abs(z.real()));
        max_im = std::max(max_im, std::abs(z.imag()));
    }
    if (max_im > 1e-6 * std::max(max_re, 1e-300))
        throw NonrealResult("dft_inverse: imaginary residue " + std::to_string(max_im * scale) +
                            " exceeds 1e-6 of max real magnitude (asymmetric spectrum?)");

    ImageGrid out(h, w);
    for (std::size_t i = 0; i < data.size(); ++i) out[i] = data[i].real() * scale;
    return out;
}

Spectrum dft_naive(const ImageGrid& img) {
    const long long n = static_cast<long long>(img.height()) * img.width();
    if (n > 4096)
        throw SizeExceeded("dft_naive: " + std::to_string(n) + " bins exceeds the 4096 oracle guard");
    const int h = img.height(), w = img.width();
    Spectrum out(h, w, /*dc_centered=*/false);
    for (int u = 0; u < h; ++u) {
        for (int v = 0; v < w; ++v) {
            cplx acc(0.0, 0.0);
            for (int x = 0; x < h; ++x) {
                // e_x * e_y, accumulated x-first then y (separable form).
                const double ax = -2.0 * kPi * static_cast<double>(u) * x / h;
                const cplx ex(std::cos(ax), std::sin(ax));
                for (int y = 0; y < w; ++y) {
                    const double ay = -2.0 * kPi * static_cast<double>(v) * y / w;
                    const cplx ey(std::cos(ay), std::sin(ay));
                    acc += img.at(x, y) * ex * ey;
                }
            }
            out.at(u, v) = acc;
        }
    }
    return out;
}

ImageGrid magnitude(const Spectrum& spec) {
    ImageGrid out(spec.height(), spec.width());
    for (std::size_t i = 0; i < spec.size(); ++i)
        out[i] = std::hypot(spec[i].real(), spec[i].imag());
    return out;
}

ImageGrid phase(const Spectrum& spec) {
    ImageGrid out(spec.height(), spec.width());
    for (std::size_t i = 0; i < spec.size(); ++i) {
        const cplx z = spec[i];
        out[i] = (z.real() == 0.0 && z.imag() == 0.0) ? 0.0 : std::atan2(z.imag(), z.real());
    }
    return out;
}

namespace {

Spectrum shift_quadrants(const Spectrum& spec, int row_shift, int col_shift, bool out_centered) {
    const int h = spec.height(), w = spec.width();
    Spectrum out(h, w, out_centered);
    for (int u = 0; u < h; ++u) {
        const int ru = (u + row_shift) % h;
        for (int v = 0; v < w; ++v)
            out.at(ru, (v + col_shift) % w) = spec.at(u, v);
    }
    return out;
}

} // namespace

Spectrum center(const Spectrum& spec) {
    if (spec.dc_centered())
        throw AlreadyCentered("center: spectrum is already centered");
    return shift_quadrants(spec, spec.height() / 2, spec.width() / 2, true);
}

Spectrum uncenter(const Spectrum& spec) {
    if (!spec.dc_centered())
        throw AlreadyUncentered("uncenter: spectrum is already uncentered");
    const int h = spec.height(), w = spec.width();
    return shift_quadrants(spec, h - h / 2, w - w / 2, false);
}

double conjugate_symmetry_error(const Spectrum& spec) {
    const int h = spec.height(), w = spec.width();
    double worst = 0.0;
    for (int u = 0; u < h; ++u)
        for (int v = 0; v < w; ++v)
            worst = std::max(worst,
                             std::abs(spec.at(u, v) - std::conj(spec.at((h - u) % h, (w - v) % w))));
    return worst;
}

} // namespace spectra
