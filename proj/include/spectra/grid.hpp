#ifndef SPECTRA_GRID_HPP
#define SPECTRA_GRID_HPP

#include <cstddef>
#include <vector>

#include "spectra/error.hpp"

namespace spectra {

/// 2D real-valued intensity field, row-major. Values are dimensionless;
/// images loaded from disk live in [0, 1], intermediate pipeline results
/// may leave that range until renormalized.
class ImageGrid {
public:
    ImageGrid() = default;

    ImageGrid(int height, int width, double fill = 0.0)
        : height_(height), width_(width),
          data_(static_cast<std::size_t>(check_dims(height, width)), fill) {}

    ImageGrid(int height, int width, std::vector<double> data)
        : height_(height), width_(width), data_(std::move(data)) {
        check_dims(height, width);
        if (data_.size() != static_cast<std::size_t>(height) * width)
            throw ShapeMismatch("ImageGrid: data length does not match height*width");
    }

    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t size() const { return data_.size(); }

    double& at(int row, int col) { return data_[static_cast<std::size_t>(row) * width_ + col]; }
    double at(int row, int col) const { return data_[static_cast<std::size_t>(row) * width_ + col]; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const ImageGrid& other) const {
        return height_ == other.height_ && width_ == other.width_;
    }

private:
    static long long check_dims(int height, int width) {
        if (height < 1 || width < 1)
            throw ShapeMismatch("ImageGrid: height and width must be >= 1");
        return static_cast<long long>(height) * width;
    }

    int height_ = 0;
    int width_ = 0;
    std::vector<double> data_;
};

} // namespace spectra

#endif
