#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "satgan/file_util.hpp"
#include "satgan/io.hpp"

namespace satgan {
namespace {

struct ErrorSink {
  char message[256] = "libpng error";
};

void on_error(png_structp png, png_const_charp msg) {
  auto* sink = static_cast<ErrorSink*>(png_get_error_ptr(png));
  std::snprintf(sink->message, sizeof sink->message, "%s", msg);
  std::longjmp(png_jmpbuf(png), 1);
}

void on_warning(png_structp, png_const_charp) {}

struct MemoryReader {
  const unsigned char* data;
  std::size_t size;
  std::size_t pos;
};

void read_bytes(png_structp png, png_bytep out, png_size_t n) {
  auto* r = static_cast<MemoryReader*>(png_get_io_ptr(png));
  if (r->pos + n > r->size) png_error(png, "truncated file");
  std::memcpy(out, r->data + r->pos, n);
  r->pos += n;
}

void write_bytes(png_structp png, png_bytep in, png_size_t n) {
  auto* out = static_cast<std::vector<unsigned char>*>(png_get_io_ptr(png));
  out->insert(out->end(), in, in + n);
}

void flush_bytes(png_structp) {}

// Plain C-style bodies: nothing with a destructor lives across setjmp.
bool encode(const std::uint16_t* codes, png_uint_32 h, png_uint_32 w, std::vector<unsigned char>* out,
            ErrorSink* sink) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, sink, on_error, on_warning);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_set_write_fn(png, out, write_bytes, flush_bytes);
  png_set_IHDR(png, info, w, h, 16, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_set_swap(png);  // host order in, big-endian on disk
  for (png_uint_32 r = 0; r < h; ++r) {
    png_write_row(png, reinterpret_cast<png_const_bytep>(codes + static_cast<std::size_t>(r) * w));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

enum class DecodeStatus { ok, failed, unsupported };

struct Decoded {
  png_uint_32 height = 0;
  png_uint_32 width = 0;
  int bit_depth = 0;
  int color_type = 0;
};

DecodeStatus decode(MemoryReader* reader, std::vector<std::uint16_t>* codes, Decoded* meta, ErrorSink* sink) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, sink, on_error, on_warning);
  if (!png) return DecodeStatus::failed;
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return DecodeStatus::failed;
  }
  png_set_read_fn(png, reader, read_bytes);
  png_read_info(png, info);
  meta->height = png_get_image_height(png, info);
  meta->width = png_get_image_width(png, info);
  meta->bit_depth = png_get_bit_depth(png, info);
  meta->color_type = png_get_color_type(png, info);
  if (meta->bit_depth != 16 || meta->color_type != PNG_COLOR_TYPE_GRAY) {
    png_destroy_read_struct(&png, &info, nullptr);
    return DecodeStatus::unsupported;
  }
  png_set_swap(png);
  const int passes = png_set_interlace_handling(png);
  png_read_update_info(png, info);
  codes->resize(static_cast<std::size_t>(meta->height) * meta->width);
  for (int pass = 0; pass < passes; ++pass) {
    for (png_uint_32 r = 0; r < meta->height; ++r) {
      png_read_row(png, reinterpret_cast<png_bytep>(codes->data() + static_cast<std::size_t>(r) * meta->width),
                   nullptr);
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return DecodeStatus::ok;
}

}  // namespace

std::uint16_t encode_pixel(real v) {
  if (!(v >= 0 && v <= 1)) throw std::invalid_argument("pixel value " + std::to_string(v) + " outside [0,1]");
  return static_cast<std::uint16_t>(std::lround(static_cast<double>(v) * 65535.0));
}

real decode_pixel(std::uint16_t code) { return to_pixel_grid(static_cast<real>(code / 65535.0)); }

void write_png16(const std::string& path, const Tensor& image) {
  int h = 0;
  int w = 0;
  if (image.rank() == 3 && image.dim(0) == 1) {
    h = image.dim(1);
    w = image.dim(2);
  } else if (image.rank() == 2) {
    h = image.dim(0);
    w = image.dim(1);
  } else {
    throw std::invalid_argument("write_png16: expected [1,H,W] or [H,W], got " + shape_string(image.shape()));
  }
  if (h < 1 || w < 1) throw std::invalid_argument("write_png16: empty image");
  std::vector<std::uint16_t> codes;
  codes.reserve(image.numel());
  for (real v : image.data()) codes.push_back(encode_pixel(v));
  std::vector<unsigned char> bytes;
  ErrorSink sink;
  if (!encode(codes.data(), static_cast<png_uint_32>(h), static_cast<png_uint_32>(w), &bytes, &sink)) {
    throw IoError(path + ": " + sink.message);
  }
  write_file_atomic(path, std::string(bytes.begin(), bytes.end()));
}

Tensor read_png16(const std::string& path) {
  std::string bytes;
  try {
    bytes = read_file(path);
  } catch (const std::exception& e) {
    throw IoError(e.what());
  }
  if (bytes.size() < 8 || png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) != 0) {
    throw IoError(path + ": not a PNG file");
  }
  MemoryReader reader{reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(), 0};
  std::vector<std::uint16_t> codes;
  Decoded meta;
  ErrorSink sink;
  switch (decode(&reader, &codes, &meta, &sink)) {
    case DecodeStatus::failed:
      throw IoError(path + ": " + sink.message);
    case DecodeStatus::unsupported:
      throw IoError(path + ": expected 16-bit grayscale, got bit depth " + std::to_string(meta.bit_depth) +
                    " color type " + std::to_string(meta.color_type));
    case DecodeStatus::ok:
      break;
  }
  std::vector<real> values;
  values.reserve(codes.size());
  for (std::uint16_t c : codes) values.push_back(decode_pixel(c));
  return Tensor(Shape{1, static_cast<int>(meta.height), static_cast<int>(meta.width)}, std::move(values));
}

}  // namespace satgan
