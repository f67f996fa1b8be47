#include "lffd/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>

#include <jpeglib.h>
#include <png.h>

#include "lffd/errors.hpp"

namespace lffd {

namespace {

Image8 decode_png(const std::filesystem::path& path) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
        std::string msg = image.message;
        png_image_free(&image);
        throw DecodeError("cannot decode '" + path.string() + "': " + msg);
    }
    image.format = PNG_FORMAT_RGB;
    Image8 img;
    img.h = static_cast<int>(image.height);
    img.w = static_cast<int>(image.width);
    img.rgb.resize(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, img.rgb.data(), 0, nullptr)) {
        std::string msg = image.message;
        png_image_free(&image);
        throw DecodeError("cannot decode '" + path.string() + "': " + msg);
    }
    return img;
}

struct JpegErrorTrap {
    jpeg_error_mgr mgr;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_error_trap(j_common_ptr cinfo) {
    auto* trap = reinterpret_cast<JpegErrorTrap*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, trap->message);
    std::longjmp(trap->jump, 1);
}

Image8 decode_jpeg(const std::filesystem::path& path) {
    std::FILE* file = std::fopen(path.string().c_str(), "rb");
    if (!file) throw IoError("cannot open '" + path.string() + "'");
    jpeg_decompress_struct cinfo;
    JpegErrorTrap trap;
    cinfo.err = jpeg_std_error(&trap.mgr);
    trap.mgr.error_exit = jpeg_error_trap;
    Image8 img;
    if (setjmp(trap.jump)) {
        jpeg_destroy_decompress(&cinfo);
        std::fclose(file);
        throw DecodeError("cannot decode '" + path.string() + "': " + trap.message);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, file);
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB; // grayscale inputs replicate to 3 channels
    jpeg_start_decompress(&cinfo);
    img.h = static_cast<int>(cinfo.output_height);
    img.w = static_cast<int>(cinfo.output_width);
    img.rgb.resize(static_cast<std::size_t>(img.h) * img.w * 3);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = img.rgb.data() + static_cast<std::size_t>(cinfo.output_scanline) * img.w * 3;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    std::fclose(file);
    return img;
}

Image8 decode_raw(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
    if (bytes.empty() || bytes.size() % 3 != 0)
        throw DecodeError("'" + path.string() + "' is not a raw RGB image");
    const auto side = static_cast<std::size_t>(
        std::llround(std::sqrt(static_cast<double>(bytes.size() / 3))));
    if (side == 0 || side * side * 3 != bytes.size())
        throw DecodeError("'" + path.string() + "' is not a square raw RGB image");
    Image8 img;
    img.h = img.w = static_cast<int>(side);
    img.rgb = std::move(bytes);
    return img;
}

std::string lower_extension(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext;
}

} // namespace

Image8 decode_image(const std::filesystem::path& path) {
    const std::string ext = lower_extension(path);
    if (ext == ".png") return decode_png(path);
    if (ext == ".jpg" || ext == ".jpeg") return decode_jpeg(path);
    if (ext == ".raw") return decode_raw(path);
    throw DecodeError("unsupported image format '" + ext + "' for '" + path.string() + "'");
}

Tensor<float> to_chw(const Image8& img) {
    Tensor<float> t(Shape{3, img.h, img.w});
    const std::int64_t plane = static_cast<std::int64_t>(img.h) * img.w;
    float* out = t.data();
    for (std::int64_t p = 0; p < plane; ++p) {
        out[p] = static_cast<float>(img.rgb[static_cast<std::size_t>(p * 3)]);
        out[plane + p] = static_cast<float>(img.rgb[static_cast<std::size_t>(p * 3 + 1)]);
        out[2 * plane + p] = static_cast<float>(img.rgb[static_cast<std::size_t>(p * 3 + 2)]);
    }
    return t;
}

Tensor<float> resize_bilinear(const Tensor<float>& chw, int out_h, int out_w) {
    if (chw.rank() != 3) throw ShapeError("resize expects a CxHxW tensor, got " + shape_str(chw.shape()));
    if (out_h < 1 || out_w < 1) throw ShapeError("resize target must be positive");
    const int c = chw.dim(0), h = chw.dim(1), w = chw.dim(2);
    if (h == out_h && w == out_w) return chw;
    Tensor<float> out(Shape{c, out_h, out_w});
    const double scale_y = static_cast<double>(h) / out_h;
    const double scale_x = static_cast<double>(w) / out_w;
    for (int ci = 0; ci < c; ++ci) {
        const float* src = chw.data() + static_cast<std::int64_t>(ci) * h * w;
        float* dst = out.data() + static_cast<std::int64_t>(ci) * out_h * out_w;
        for (int oy = 0; oy < out_h; ++oy) {
            double sy = (oy + 0.5) * scale_y - 0.5;
            sy = std::clamp(sy, 0.0, static_cast<double>(h - 1));
            const int y0 = static_cast<int>(sy);
            const int y1 = std::min(y0 + 1, h - 1);
            const double fy = sy - y0;
            for (int ox = 0; ox < out_w; ++ox) {
                double sx = (ox + 0.5) * scale_x - 0.5;
                sx = std::clamp(sx, 0.0, static_cast<double>(w - 1));
                const int x0 = static_cast<int>(sx);
                const int x1 = std::min(x0 + 1, w - 1);
                const double fx = sx - x0;
                const double top = (1.0 - fx) * src[static_cast<std::int64_t>(y0) * w + x0] +
                                   fx * src[static_cast<std::int64_t>(y0) * w + x1];
                const double bottom = (1.0 - fx) * src[static_cast<std::int64_t>(y1) * w + x0] +
                                      fx * src[static_cast<std::int64_t>(y1) * w + x1];
                dst[static_cast<std::int64_t>(oy) * out_w + ox] =
                    static_cast<float>((1.0 - fy) * top + fy * bottom);
            }
        }
    }
    return out;
}

Tensor<float> decode_and_resize(const std::filesystem::path& path, int target_hw) {
    return resize_bilinear(to_chw(decode_image(path)), target_hw, target_hw);
}

void normalize_pixels(Tensor<float>& t) {
    float* p = t.data();
    for (std::int64_t i = 0; i < t.numel(); ++i) p[i] = p[i] / 255.0f;
}

} // namespace lffd
