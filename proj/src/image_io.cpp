#include "spectra/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

#include <jpeglib.h>
#include <png.h>
#include <csetjmp>

namespace spectra {

namespace fs = std::filesystem;

const std::array<std::string, ClassLabel::kCount>& ClassLabel::names() {
    static const std::array<std::string, kCount> kNames = {
        "NonDemented", "VeryMildDemented", "MildDemented", "ModerateDemented"};
    return kNames;
}

const std::string& ClassLabel::name() const { return names()[index]; }

namespace {

std::string fold_name(const std::string& raw) {
    std::string out;
    out.reserve(raw.size());
    for (char c : raw) {
        if (c == ' ' || c == '_' || c == '-') continue;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

} // namespace

int ClassLabel::match(const std::string& raw) {
    const std::string folded = fold_name(raw);
    for (int i = 0; i < kCount; ++i)
        if (folded == fold_name(names()[i])) return i;
    return -1;
}

unsigned char quantize_u8(double v) {
    double q = std::floor(v * 255.0 + 0.5); // round half up
    q = std::clamp(q, 0.0, 255.0);
    return static_cast<unsigned char>(q);
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const fs::path& path, const char* mode, bool for_read) {
    if (for_read && !fs::exists(path))
        throw FileNotFound("no such file: " + path.string());
    FilePtr f(std::fopen(path.string().c_str(), mode));
    if (!f) {
        if (for_read) throw FileNotFound("cannot open: " + path.string());
        throw IoFailure("cannot open for writing: " + path.string());
    }
    return f;
}

ImageGrid gray_from_rgb8(const std::vector<unsigned char>& rgb, int h, int w) {
    ImageGrid out(h, w);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double r = rgb[3 * i + 0], g = rgb[3 * i + 1], b = rgb[3 * i + 2];
        out[i] = (0.299 * r + 0.587 * g + 0.114 * b) / 255.0;
    }
    return out;
}

// ---- PNG ----

struct PngReadGuard {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngReadGuard() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    }
};

ImageGrid load_png(const fs::path& path) {
    FilePtr f = open_file(path, "rb", true);

    unsigned char sig[8];
    if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8))
        throw DecodeFailure("not a PNG file: " + path.string());

    PngReadGuard g;
    g.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!g.png) throw DecodeFailure("libpng init failed: " + path.string());
    g.info = png_create_info_struct(g.png);
    if (!g.info) throw DecodeFailure("libpng init failed: " + path.string());

    if (setjmp(png_jmpbuf(g.png)))
        throw DecodeFailure("corrupt PNG: " + path.string());

    png_init_io(g.png, f.get());
    png_set_sig_bytes(g.png, 8);
    png_read_info(g.png, g.info);

    const int bit_depth = png_get_bit_depth(g.png, g.info);
    if (bit_depth != 8)
        throw UnsupportedBitDepth(std::to_string(bit_depth) + "-bit PNG not supported (need 8): " +
                                  path.string());

    // Normalize every color type to 8-bit RGB.
    const int color_type = png_get_color_type(g.png, g.info);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(g.png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(g.png);
    if (png_get_valid(g.png, g.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(g.png);
    png_set_strip_alpha(g.png);
    png_read_update_info(g.png, g.info);

    const int h = static_cast<int>(png_get_image_height(g.png, g.info));
    const int w = static_cast<int>(png_get_image_width(g.png, g.info));
    if (png_get_rowbytes(g.png, g.info) != static_cast<std::size_t>(w) * 3)
        throw DecodeFailure("unexpected PNG row layout: " + path.string());

    std::vector<unsigned char> rgb(static_cast<std::size_t>(h) * w * 3);
    std::vector<png_bytep> rows(h);
    for (int r = 0; r < h; ++r) rows[r] = rgb.data() + static_cast<std::size_t>(r) * w * 3;
    png_read_image(g.png, rows.data());
    png_read_end(g.png, nullptr);

    return gray_from_rgb8(rgb, h, w);
}

// ---- JPEG ----

struct JpegErrorMgr {
    jpeg_error_mgr pub;
    std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* mgr = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
    std::longjmp(mgr->jump, 1);
}

ImageGrid load_jpeg(const fs::path& path) {
    FilePtr f = open_file(path, "rb", true);

    jpeg_decompress_struct cinfo;
    JpegErrorMgr jerr;
    cinfo.err = jpeg_std_error(&jerr.pub);
    jerr.pub.error_exit = jpeg_error_exit;
    if (setjmp(jerr.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw DecodeFailure("corrupt JPEG: " + path.string());
    }

    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, f.get());
    jpeg_read_header(&cinfo, TRUE);
    if (cinfo.data_precision != 8) {
        int precision = cinfo.data_precision;
        jpeg_destroy_decompress(&cinfo);
        throw UnsupportedBitDepth(std::to_string(precision) +
                                  "-bit JPEG not supported (need 8): " + path.string());
    }
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);

    const int h = static_cast<int>(cinfo.output_height);
    const int w = static_cast<int>(cinfo.output_width);
    std::vector<unsigned char> rgb(static_cast<std::size_t>(h) * w * 3);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = rgb.data() + static_cast<std::size_t>(cinfo.output_scanline) * w * 3;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);

    return gray_from_rgb8(rgb, h, w);
}

bool has_jpeg_magic(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    unsigned char m[2] = {0, 0};
    in.read(reinterpret_cast<char*>(m), 2);
    return in.gcount() == 2 && m[0] == 0xFF && m[1] == 0xD8;
}

bool has_png_magic(const fs::path& path) {
    static const unsigned char kSig[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
    std::ifstream in(path, std::ios::binary);
    unsigned char m[8] = {};
    in.read(reinterpret_cast<char*>(m), 8);
    return in.gcount() == 8 && std::memcmp(m, kSig, 8) == 0;
}

} // namespace

ImageGrid load_grayscale(const fs::path& path) {
    if (!fs::exists(path)) throw FileNotFound("no such file: " + path.string());
    if (has_png_magic(path)) return load_png(path);
    if (has_jpeg_magic(path)) return load_jpeg(path);
    throw DecodeFailure("neither PNG nor JPEG: " + path.string());
}

void save_grayscale(const ImageGrid& img, const fs::path& path) {
    FilePtr f = open_file(path, "wb", false);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoFailure("libpng init failed: " + path.string());
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoFailure("libpng init failed: " + path.string());
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoFailure("PNG write failed: " + path.string());
    }

    png_init_io(png, f.get());
    png_set_IHDR(png, info, img.width(), img.height(), 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<unsigned char> row(img.width());
    for (int r = 0; r < img.height(); ++r) {
        for (int c = 0; c < img.width(); ++c) row[c] = quantize_u8(img.at(r, c));
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

DatasetManifest scan_dataset(const fs::path& root, Split split) {
    if (!fs::is_directory(root))
        throw MissingClassDirectory("dataset root is not a directory: " + root.string());

    // One directory per class, matched with folded names.
    std::array<fs::path, ClassLabel::kCount> class_dirs;
    std::array<bool, ClassLabel::kCount> found = {};
    for (const auto& entry : fs::directory_iterator(root)) {
        if (!entry.is_directory()) continue;
        int idx = ClassLabel::match(entry.path().filename().string());
        if (idx >= 0) {
            class_dirs[idx] = entry.path();
            found[idx] = true;
        }
    }
    for (int i = 0; i < ClassLabel::kCount; ++i)
        if (!found[i])
            throw MissingClassDirectory("class directory missing under " + root.string() + ": " +
                                        ClassLabel::names()[i]);

    std::vector<DatasetManifest::Entry> entries;
    for (int i = 0; i < ClassLabel::kCount; ++i) {
        for (const auto& entry : fs::recursive_directory_iterator(class_dirs[i])) {
            if (!entry.is_regular_file()) continue;
            const fs::path& p = entry.path();
            if (!has_png_magic(p) && !has_jpeg_magic(p)) continue;
            entries.push_back({p, ClassLabel{i}});
        }
    }
    if (entries.empty()) throw EmptyDataset("no decodable images under " + root.string());

    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.path.string() < b.path.string(); });
    return DatasetManifest(split, std::move(entries));
}

void DatasetManifest::write_csv(const fs::path& path) const {
    std::ofstream out(path, std::ios::binary); // binary keeps LF endings everywhere
    if (!out) throw IoFailure("cannot open for writing: " + path.string());
    out << "path,label_index,label_name\n";
    for (const Entry& e : entries_)
        out << e.path.generic_string() << ',' << e.label.index << ',' << e.label.name() << '\n';
    if (!out) throw IoFailure("write failed: " + path.string());
}

ImageGrid resize_bilinear(const ImageGrid& img, int out_height, int out_width) {
    if (out_height < 1 || out_width < 1)
        throw ShapeMismatch("resize_bilinear: output dimensions must be >= 1");
    if (out_height == img.height() && out_width == img.width()) return img;

    ImageGrid out(out_height, out_width);
    const double sy = static_cast<double>(img.height()) / out_height;
    const double sx = static_cast<double>(img.width()) / out_width;
    for (int r = 0; r < out_height; ++r) {
        const double fy = std::clamp((r + 0.5) * sy - 0.5, 0.0, img.height() - 1.0);
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, img.height() - 1);
        const double wy = fy - y0;
        for (int c = 0; c < out_width; ++c) {
            const double fx = std::clamp((c + 0.5) * sx - 0.5, 0.0, img.width() - 1.0);
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, img.width() - 1);
            const double wx = fx - x0;
            const double top = img.at(y0, x0) * (1.0 - wx) + img.at(y0, x1) * wx;
            const double bot = img.at(y1, x0) * (1.0 - wx) + img.at(y1, x1) * wx;
            out.at(r, c) = top * (1.0 - wy) + bot * wy;
        }
    }
    return out;
}

} // namespace spectra
