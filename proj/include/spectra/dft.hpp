#ifndef SPECTRA_DFT_HPP
#define SPECTRA_DFT_HPP

#include <complex>
#include <vector>

#include "spectra/grid.hpp"

namespace spectra {

/// 2D complex frequency field, row-major. Produced uncentered (DC at
/// bin (0,0)); center()/uncenter() swap quadrants so radial masks can
/// be expressed around the middle of the grid.
class Spectrum {
public:
    using cplx = std::complex<double>;

    Spectrum() = default;

    Spectrum(int height, int width, bool dc_centered = false)
        : height_(height), width_(width), dc_centered_(dc_centered),
          data_(static_cast<std::size_t>(check_dims(height, width))) {}

    Spectrum(int height, int width, std::vector<cplx> data, bool dc_centered = false)
        : height_(height), width_(width), dc_centered_(dc_centered), data_(std::move(data)) {
        check_dims(height, width);
        if (data_.size() != static_cast<std::size_t>(height) * width)
            throw ShapeMismatch("Spectrum: data length does not match height*width");
    }

    int height() const { return height_; }
    int width() const { return width_; }
    bool dc_centered() const { return dc_centered_; }
    std::size_t size() const { return data_.size(); }

    cplx& at(int u, int v) { return data_[static_cast<std::size_t>(u) * width_ + v]; }
    cplx at(int u, int v) const { return data_[static_cast<std::size_t>(u) * width_ + v]; }

    cplx& operator[](std::size_t i) { return data_[i]; }
    cplx operator[](std::size_t i) const { return data_[i]; }

    std::vector<cplx>& data() { return data_; }
    const std::vector<cplx>& data() const { return data_; }

private:
    static long long check_dims(int height, int width) {
        if (height < 1 || width < 1)
            throw ShapeMismatch("Spectrum: height and width must be >= 1");
        return static_cast<long long>(height) * width;
    }

    int height_ = 0;
    int width_ = 0;
    bool dc_centered_ = false;
    std::vector<cplx> data_;
};

/// Forward 2D DFT, unnormalized: F(u,v) = sum_x sum_y I(x,y) e^{-i2pi(ux/H + vy/W)}.
/// Row index x pairs with u over H, column index y with v over W.
/// Arbitrary sizes run at FFT speed (radix-2 for powers of two,
/// Bluestein chirp-z otherwise); the image is never zero-padded.
Spectrum dft_forward(const ImageGrid& img);

/// Inverse 2D DFT carrying the 1/(HW) factor. The spectrum must be
/// uncentered. Throws NonrealResult if the imaginary residue exceeds
/// 1e-6 times the max real magnitude (corrupted/asymmetric spectrum).
ImageGrid dft_inverse(const Spectrum& spec);

/// Direct O(H^2 W^2) evaluation of the forward definition. Reference
/// oracle for dft_forward; guarded to height*width <= 4096.
Spectrum dft_naive(const ImageGrid& img);

/// Per-bin sqrt(Re^2 + Im^2). Not range-normalized.
ImageGrid magnitude(const Spectrum& spec);

/// Per-bin atan2(Im, Re) in (-pi, pi]; the bin 0+0i maps to 0.
ImageGrid phase(const Spectrum& spec);

/// Quadrant swap placing DC at (floor(H/2), floor(W/2)). Requires an
/// uncentered spectrum.
Spectrum center(const Spectrum& spec);

/// Exact inverse of center() for any size, odd or even. Requires a
/// centered spectrum.
Spectrum uncenter(const Spectrum& spec);

/// Max absolute deviation from conjugate symmetry
/// F(u,v) = conj(F((H-u) mod H, (W-v) mod W)); 0 for spectra of real images.
double conjugate_symmetry_error(const Spectrum& spec);

} // namespace spectra

#endif
