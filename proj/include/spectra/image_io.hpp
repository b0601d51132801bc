#ifndef SPECTRA_IMAGE_IO_HPP
#define SPECTRA_IMAGE_IO_HPP

#include <array>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "spectra/grid.hpp"

namespace spectra {

/// The four diagnostic classes, in their fixed index order.
struct ClassLabel {
    int index = 0; // 0..3
    const std::string& name() const;

    static constexpr int kCount = 4;
    static const std::array<std::string, kCount>& names();

    /// Matches a directory or label string against the canonical names,
    /// ignoring case, spaces, and underscores ("Mild_Demented" ==
    /// "MildDemented" == "mild demented"). Returns -1 when no match.
    static int match(const std::string& raw);

    bool operator==(const ClassLabel&) const = default;
};

enum class Split { train, test };

/// Every decodable image under a class-layout directory, with labels.
/// Immutable after construction; entries sorted by path.
class DatasetManifest {
public:
    struct Entry {
        std::filesystem::path path;
        ClassLabel label;
    };

    DatasetManifest(Split split, std::vector<Entry> entries)
        : split_(split), entries_(std::move(entries)) {}

    Split split() const { return split_; }
    const std::vector<Entry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

    /// CSV with header `path,label_index,label_name`, LF endings, UTF-8.
    void write_csv(const std::filesystem::path& path) const;

private:
    Split split_;
    std::vector<Entry> entries_;
};

/// Loads an 8-bit PNG or JPEG as a grayscale grid in [0,1]. Color inputs
/// are reduced by BT.601 luminance (0.299 R + 0.587 G + 0.114 B) before
/// the division by 255.
ImageGrid load_grayscale(const std::filesystem::path& path);

/// Writes an 8-bit grayscale PNG. Quantization is round(v*255),
/// half away from zero, clamped to [0,255].
void save_grayscale(const ImageGrid& img, const std::filesystem::path& path);

/// Quantization rule used by save_grayscale, exposed for reuse.
unsigned char quantize_u8(double v);

/// Scans a directory whose subdirectories are the four class names
/// (case/space/underscore-insensitive) and lists every decodable image.
DatasetManifest scan_dataset(const std::filesystem::path& root, Split split);

/// Bilinear resample (align-corners=false convention). Used to bring
/// scans down to the micro-CNN input size.
ImageGrid resize_bilinear(const ImageGrid& img, int out_height, int out_width);

} // namespace spectra

#endif
