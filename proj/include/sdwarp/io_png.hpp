#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdwarp/tensor.hpp"

namespace sdwarp {

// Grayscale PNG, 8- or 16-bit. Values are raw sample values.
struct GrayImage {
    int64_t height = 0, width = 0;
    int bit_depth = 8;  // 8 or 16
    std::vector<uint16_t> pixels;
};

// 8-bit RGB PNG.
struct RgbImage {
    int64_t height = 0, width = 0;
    std::vector<uint8_t> pixels;  // rgbrgb...
};

void write_gray_png(const std::string& path, const GrayImage& img);
GrayImage read_gray_png(const std::string& path);
void write_rgb_png(const std::string& path, const RgbImage& img);
RgbImage read_rgb_png(const std::string& path);

// Raw little-endian tensor container (".ten"):
//   magic "SDTEN1\n" | u8 dtype (1=f32, 2=f64, 3=i32) | u8 ndim |
//   ndim x u32 dims | payload (row-major, little-endian)
void write_tensor_f32(const std::string& path, const Tensor<float>& t);
Tensor<float> read_tensor_f32(const std::string& path);
void write_tensor_i32(const std::string& path, const Tensor<int32_t>& t);
Tensor<int32_t> read_tensor_i32(const std::string& path);

// Maps [-1,1] to [0,255] for visualization renders.
RgbImage tensor_to_rgb(const Tensor<float>& chw);

}  // namespace sdwarp
