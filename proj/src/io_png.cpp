#include "sdwarp/io_png.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

#include "sdwarp/common.hpp"

namespace sdwarp {

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

[[noreturn]] void fail(const std::string& what, const std::string& path) {
    throw FormatError(what + ": " + path);
}

}  // namespace

void write_gray_png(const std::string& path, const GrayImage& img) {
    if (img.bit_depth != 8 && img.bit_depth != 16) fail("write_gray_png: bad bit depth", path);
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) fail("write_gray_png: cannot open", path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail("write_gray_png: libpng error", path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), img.bit_depth, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<uint8_t> row(static_cast<size_t>(img.width) * (img.bit_depth == 16 ? 2 : 1));
    for (int64_t y = 0; y < img.height; ++y) {
        if (img.bit_depth == 16) {
            for (int64_t x = 0; x < img.width; ++x) {
                const uint16_t v = img.pixels[static_cast<size_t>(y * img.width + x)];
                row[static_cast<size_t>(2 * x)] = static_cast<uint8_t>(v >> 8);
                row[static_cast<size_t>(2 * x + 1)] = static_cast<uint8_t>(v & 0xff);
            }
        } else {
            for (int64_t x = 0; x < img.width; ++x)
                row[static_cast<size_t>(x)] =
                    static_cast<uint8_t>(img.pixels[static_cast<size_t>(y * img.width + x)]);
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

GrayImage read_gray_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) fail("read_gray_png: cannot open", path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail("read_gray_png: libpng error", path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);
    GrayImage img;
    img.width = png_get_image_width(png, info);
    img.height = png_get_image_height(png, info);
    img.bit_depth = png_get_bit_depth(png, info);
    if (png_get_color_type(png, info) != PNG_COLOR_TYPE_GRAY) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail("read_gray_png: not grayscale", path);
    }
    if (img.bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    img.pixels.resize(static_cast<size_t>(img.width * img.height));
    std::vector<uint8_t> row(static_cast<size_t>(img.width) * (img.bit_depth == 16 ? 2 : 1));
    for (int64_t y = 0; y < img.height; ++y) {
        png_read_row(png, row.data(), nullptr);
        if (img.bit_depth == 16)
            for (int64_t x = 0; x < img.width; ++x)
                img.pixels[static_cast<size_t>(y * img.width + x)] = static_cast<uint16_t>(
                    (row[static_cast<size_t>(2 * x)] << 8) | row[static_cast<size_t>(2 * x + 1)]);
        else
            for (int64_t x = 0; x < img.width; ++x)
                img.pixels[static_cast<size_t>(y * img.width + x)] = row[static_cast<size_t>(x)];
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void write_rgb_png(const std::string& path, const RgbImage& img) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) fail("write_rgb_png: cannot open", path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail("write_rgb_png: libpng error", path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int64_t y = 0; y < img.height; ++y)
        png_write_row(png, const_cast<png_bytep>(img.pixels.data() + y * img.width * 3));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

RgbImage read_rgb_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) fail("read_rgb_png: cannot open", path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail("read_rgb_png: libpng error", path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);
    RgbImage img;
    img.width = png_get_image_width(png, info);
    img.height = png_get_image_height(png, info);
    if (png_get_color_type(png, info) != PNG_COLOR_TYPE_RGB ||
        png_get_bit_depth(png, info) != 8) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail("read_rgb_png: expected 8-bit RGB", path);
    }
    img.pixels.resize(static_cast<size_t>(img.width * img.height * 3));
    for (int64_t y = 0; y < img.height; ++y)
        png_read_row(png, img.pixels.data() + y * img.width * 3, nullptr);
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

namespace {

constexpr char kTenMagic[7] = {'S', 'D', 'T', 'E', 'N', '1', '\n'};

template <typename T>
void write_tensor_impl(const std::string& path, const Tensor<T>& t, uint8_t dtype) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError("write_tensor: cannot open " + path);
    os.write(kTenMagic, sizeof(kTenMagic));
    os.put(static_cast<char>(dtype));
    os.put(static_cast<char>(t.rank()));
    for (int i = 0; i < t.rank(); ++i) {
        const uint32_t d = static_cast<uint32_t>(t.dim(i));
        uint8_t b[4] = {static_cast<uint8_t>(d & 0xff), static_cast<uint8_t>((d >> 8) & 0xff),
                        static_cast<uint8_t>((d >> 16) & 0xff),
                        static_cast<uint8_t>((d >> 24) & 0xff)};
        os.write(reinterpret_cast<char*>(b), 4);
    }
    // Host is little-endian x86; payload written verbatim.
    os.write(reinterpret_cast<const char*>(t.data()),
             static_cast<std::streamsize>(sizeof(T) * static_cast<size_t>(t.numel())));
    if (!os) throw FormatError("write_tensor: short write " + path);
}

template <typename T>
Tensor<T> read_tensor_impl(const std::string& path, uint8_t expect_dtype) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("read_tensor: cannot open " + path);
    char magic[7];
    is.read(magic, 7);
    if (!is || std::memcmp(magic, kTenMagic, 7) != 0)
        throw FormatError("read_tensor: bad magic in " + path);
    const int dtype = is.get();
    const int ndim = is.get();
    if (dtype != expect_dtype) throw FormatError("read_tensor: dtype mismatch in " + path);
    if (ndim < 1 || ndim > 8) throw FormatError("read_tensor: bad rank in " + path);
    std::vector<int64_t> shape(static_cast<size_t>(ndim));
    for (int i = 0; i < ndim; ++i) {
        uint8_t b[4];
        is.read(reinterpret_cast<char*>(b), 4);
        shape[static_cast<size_t>(i)] =
            static_cast<int64_t>(b[0] | (b[1] << 8) | (b[2] << 16) | (uint32_t(b[3]) << 24));
    }
    Tensor<T> t(shape);
    is.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(sizeof(T) * static_cast<size_t>(t.numel())));
    if (!is) throw FormatError("read_tensor: truncated payload in " + path);
    return t;
}

}  // namespace

void write_tensor_f32(const std::string& path, const Tensor<float>& t) {
    write_tensor_impl(path, t, 1);
}
Tensor<float> read_tensor_f32(const std::string& path) { return read_tensor_impl<float>(path, 1); }
void write_tensor_i32(const std::string& path, const Tensor<int32_t>& t) {
    write_tensor_impl(path, t, 3);
}
Tensor<int32_t> read_tensor_i32(const std::string& path) {
    return read_tensor_impl<int32_t>(path, 3);
}

RgbImage tensor_to_rgb(const Tensor<float>& chw) {
    if (chw.rank() != 3 || chw.dim(0) != 3) throw ArgumentError("tensor_to_rgb: expects [3,h,w]");
    RgbImage img;
    img.height = chw.dim(1);
    img.width = chw.dim(2);
    img.pixels.resize(static_cast<size_t>(img.height * img.width * 3));
    for (int64_t y = 0; y < img.height; ++y)
        for (int64_t x = 0; x < img.width; ++x)
            for (int64_t c = 0; c < 3; ++c) {
                const double v = (static_cast<double>(chw.at3(c, y, x)) + 1.0) * 0.5 * 255.0;
                img.pixels[static_cast<size_t>((y * img.width + x) * 3 + c)] =
                    static_cast<uint8_t>(std::clamp(v + 0.5, 0.0, 255.0));
            }
    return img;
}

}  // namespace sdwarp
