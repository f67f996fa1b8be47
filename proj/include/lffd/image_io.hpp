#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "lffd/tensor.hpp"

namespace lffd {

// Decoded 8-bit image, interleaved RGB, row-major.
struct Image8 {
    int h = 0, w = 0;
    std::vector<std::uint8_t> rgb;
};

// PNG (.png), JPEG (.jpg/.jpeg), or the headerless raw fixture format
// (.raw: square interleaved RGB8, side = sqrt(bytes/3)). Grayscale and
// palette inputs come back as RGB. Throws DecodeError / IoError.
Image8 decode_image(const std::filesystem::path& path);

// 3 x H x W float tensor with values 0..255, channel order R, G, B.
Tensor<float> to_chw(const Image8& img);

// Bilinear resampling of a 3 x H x W tensor; identical extents pass the
// input through unchanged.
Tensor<float> resize_bilinear(const Tensor<float>& chw, int out_h, int out_w);

Tensor<float> decode_and_resize(const std::filesystem::path& path, int target_hw);

// Divides by 255 in place: [0,255] -> [0,1].
void normalize_pixels(Tensor<float>& t);

} // namespace lffd
