#include "ale/image_io.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <memory>

#include "ale/errors.hpp"

namespace ale {
namespace {

struct MemReader {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t pos;
};

void mem_read(png_structp png, png_bytep out, png_size_t n) {
  auto* r = static_cast<MemReader*>(png_get_io_ptr(png));
  if (r->pos + n > r->size) {
    png_error(png, "read past end of PNG buffer");
    return;
  }
  std::memcpy(out, r->data + r->pos, n);
  r->pos += n;
}

void mem_write(png_structp png, png_bytep in, png_size_t n) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), in, in + n);
}

void mem_flush(png_structp) {}

// Decodes any 8/16-bit PNG into packed 8-bit gray rows.
struct GrayPixels {
  int height = 0;
  int width  = 0;
  std::vector<std::uint8_t> rows;  // height * width
};

GrayPixels read_gray(png_structp png, png_infop info) {
  png_read_info(png, info);

  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int color     = png_get_color_type(png, info);
  const int depth     = png_get_bit_depth(png, info);

  if (w == 0 || h == 0) throw IoError("PNG has zero dimension");

  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (depth == 16) png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  // One or three 8-bit channels remain after the transforms above. RGB is
  // reduced here with fixed integer weights on the coded values; libpng's
  // own reduction would route through its gamma tables.
  const int channels = png_get_channels(png, info);
  if (channels != 1 && channels != 3)
    throw IoError("unsupported PNG channel layout");

  GrayPixels out;
  out.height = static_cast<int>(h);
  out.width  = static_cast<int>(w);
  out.rows.resize(static_cast<std::size_t>(h) * w);

  const std::size_t rowbytes = png_get_rowbytes(png, info);
  if (rowbytes < static_cast<std::size_t>(w) * channels)
    throw IoError("unexpected PNG row size");
  std::vector<std::uint8_t> rowbuf(rowbytes);
  for (png_uint_32 y = 0; y < h; ++y) {
    png_read_row(png, rowbuf.data(), nullptr);
    std::uint8_t* dst = out.rows.data() + static_cast<std::size_t>(y) * w;
    if (channels == 1) {
      std::memcpy(dst, rowbuf.data(), w);
    } else {
      for (png_uint_32 x = 0; x < w; ++x) {
        const std::uint8_t* p = rowbuf.data() + 3 * x;
        dst[x] = static_cast<std::uint8_t>(
            (299u * p[0] + 587u * p[1] + 114u * p[2] + 500u) / 1000u);
      }
    }
  }
  png_read_end(png, nullptr);
  return out;
}

GrayPixels decode_gray(const std::uint8_t* data, std::size_t size,
                       const std::string& what) {
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng init failed");
  }

  MemReader reader{data, size, 0};
  GrayPixels out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("failed to decode PNG: " + what);
  }
  png_set_read_fn(png, &reader, mem_read);
  out = read_gray(png, info);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

GrayPixels decode_gray_file(const std::string& path) {
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> f(
      std::fopen(path.c_str(), "rb"), &std::fclose);
  if (!f) throw IoError("cannot open " + path);
  std::vector<std::uint8_t> bytes;
  std::uint8_t buf[65536];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, f.get())) > 0)
    bytes.insert(bytes.end(), buf, buf + n);
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0)
    throw IoError(path + " is not a PNG file");
  return decode_gray(bytes.data(), bytes.size(), path);
}

std::vector<std::uint8_t> encode_gray(const std::uint8_t* rows, int height,
                                      int width) {
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng init failed");
  }

  std::vector<std::uint8_t> out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed to encode PNG");
  }
  png_set_write_fn(png, &out, mem_write, mem_flush);
  png_set_compression_level(png, 6);
  png_set_filter(png, 0, PNG_FILTER_NONE);
  png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) {
    png_write_row(png, const_cast<png_bytep>(
                           rows + static_cast<std::size_t>(y) * width));
  }
  png_write_end(png, info);
  png_destroy_write_struct(&png, &info);
  return out;
}

Image gray_to_image(const GrayPixels& g) {
  Image img(g.height, g.width);
  for (int y = 0; y < g.height; ++y)
    for (int x = 0; x < g.width; ++x)
      img(y, x) =
          static_cast<Scalar>(g.rows[static_cast<std::size_t>(y) * g.width + x]) /
          Scalar(255);
  return img;
}

MaskImage gray_to_mask(const GrayPixels& g) {
  MaskImage m(g.height, g.width);
  for (int y = 0; y < g.height; ++y)
    for (int x = 0; x < g.width; ++x)
      m(y, x) = g.rows[static_cast<std::size_t>(y) * g.width + x] ? 1 : 0;
  return m;
}

std::vector<std::uint8_t> image_to_gray_bytes(const Image& img) {
  std::vector<std::uint8_t> rows(
      static_cast<std::size_t>(img.rows()) * img.cols());
  for (int y = 0; y < img.rows(); ++y)
    for (int x = 0; x < img.cols(); ++x) {
      const Scalar v = std::min(Scalar(1), std::max(Scalar(0), img(y, x)));
      rows[static_cast<std::size_t>(y) * img.cols() + x] =
          static_cast<std::uint8_t>(std::lround(v * Scalar(255)));
    }
  return rows;
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> f(
      std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!f) throw IoError("cannot write " + path);
  if (std::fwrite(bytes.data(), 1, bytes.size(), f.get()) != bytes.size())
    throw IoError("short write to " + path);
}

}  // namespace

Image load_image_png(const std::string& path) {
  return gray_to_image(decode_gray_file(path));
}

MaskImage load_mask_png(const std::string& path) {
  return gray_to_mask(decode_gray_file(path));
}

void save_image_png(const std::string& path, const Image& img) {
  write_file(path, encode_image_png(img));
}

void save_mask_png(const std::string& path, const MaskImage& mask) {
  write_file(path, encode_mask_png(mask));
}

std::vector<std::uint8_t> encode_image_png(const Image& img) {
  const auto rows = image_to_gray_bytes(img);
  return encode_gray(rows.data(), static_cast<int>(img.rows()),
                     static_cast<int>(img.cols()));
}

std::vector<std::uint8_t> encode_mask_png(const MaskImage& mask) {
  std::vector<std::uint8_t> rows(
      static_cast<std::size_t>(mask.rows()) * mask.cols());
  for (int y = 0; y < mask.rows(); ++y)
    for (int x = 0; x < mask.cols(); ++x)
      rows[static_cast<std::size_t>(y) * mask.cols() + x] =
          mask(y, x) ? 255 : 0;
  return encode_gray(rows.data(), static_cast<int>(mask.rows()),
                     static_cast<int>(mask.cols()));
}

Image decode_image_png(const std::vector<std::uint8_t>& bytes) {
  return gray_to_image(decode_gray(bytes.data(), bytes.size(), "buffer"));
}

MaskImage decode_mask_png(const std::vector<std::uint8_t>& bytes) {
  return gray_to_mask(decode_gray(bytes.data(), bytes.size(), "buffer"));
}

}  // namespace ale
