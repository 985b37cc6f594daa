#include "orbseg/mask_codec.hpp"

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <memory>
#include <vector>

#include "orbseg/error.hpp"

namespace orbseg {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

File open_file(const std::string& path, const char* mode) {
  File f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError("cannot open '" + path + "'");
  return f;
}

// libpng reports errors by longjmp. These wrappers keep every object with a
// destructor outside the setjmp frame and turn failures into a message.
struct PngWriteJob {
  std::FILE* file;
  int width, height, color_type;
  const png_color* palette;
  int palette_size;
  const std::uint8_t* data;
  int row_bytes;
};

void on_png_warning(png_structp, png_const_charp) {}

void on_png_error(png_structp png, png_const_charp msg) {
  auto* buf = static_cast<char*>(png_get_error_ptr(png));
  std::snprintf(buf, 256, "%s", msg);
  png_longjmp(png, 1);
}

bool run_write(const PngWriteJob& job, char* error) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, error, on_png_error, on_png_warning);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_init_io(png, job.file);
  png_set_compression_level(png, 6);
  png_set_IHDR(png, info, job.width, job.height, 8, job.color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  if (job.palette) png_set_PLTE(png, info, job.palette, job.palette_size);
  png_write_info(png, info);
  for (int y = 0; y < job.height; ++y) {
    png_write_row(png, job.data + static_cast<std::size_t>(y) * job.row_bytes);
  }
  png_write_end(png, info);
  png_destroy_write_struct(&png, &info);
  return true;
}

struct PngImage {
  int width = 0, height = 0, color_type = 0, bit_depth = 0;
  std::vector<png_color> palette;
  std::vector<std::uint8_t> data;  // unpacked to one byte per sample
  int channels = 0;
};

// Decoding runs in two phases so the pixel buffer can be sized (outside the
// setjmp frame) once the header is known.
struct PngReader {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReader() { png_destroy_read_struct(&png, &info, nullptr); }
};

bool read_header(PngReader& r, std::FILE* f, PngImage& out, char* error) {
  r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, error, on_png_error, on_png_warning);
  if (!r.png) return false;
  r.info = png_create_info_struct(r.png);
  if (!r.info || setjmp(png_jmpbuf(r.png))) return false;
  png_init_io(r.png, f);
  png_read_info(r.png, r.info);
  out.width = static_cast<int>(png_get_image_width(r.png, r.info));
  out.height = static_cast<int>(png_get_image_height(r.png, r.info));
  out.color_type = png_get_color_type(r.png, r.info);
  out.bit_depth = png_get_bit_depth(r.png, r.info);
  if (out.color_type == PNG_COLOR_TYPE_PALETTE) {
    png_colorp pal = nullptr;
    int n = 0;
    if (png_get_PLTE(r.png, r.info, &pal, &n) & PNG_INFO_PLTE) out.palette.assign(pal, pal + n);
  }
  if (out.bit_depth < 8) png_set_packing(r.png);
  if (out.bit_depth == 16) png_set_strip_16(r.png);
  png_read_update_info(r.png, r.info);
  out.channels = png_get_channels(r.png, r.info);
  return true;
}

bool read_rows(PngReader& r, PngImage& img) {
  if (setjmp(png_jmpbuf(r.png))) return false;
  const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
  for (int y = 0; y < img.height; ++y) png_read_row(r.png, img.data.data() + y * stride, nullptr);
  png_read_end(r.png, nullptr);
  return true;
}

PngImage read_png(const std::string& path) {
  File f = open_file(path, "rb");
  unsigned char sig[8] = {};
  if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw FormatError("'" + path + "' is not a PNG file");
  }
  std::rewind(f.get());
  char error[256] = "unknown libpng error";
  PngReader reader;
  PngImage img;
  if (!read_header(reader, f.get(), img, error)) throw FormatError("'" + path + "': " + error);
  img.data.resize(static_cast<std::size_t>(img.width) * img.height * img.channels);
  if (!read_rows(reader, img)) throw FormatError("'" + path + "': " + error);
  return img;
}

void write_png(const std::string& path, const PngWriteJob& job_template) {
  File f = open_file(path, "wb");
  PngWriteJob job = job_template;
  job.file = f.get();
  char error[256] = "unknown libpng error";
  if (!run_write(job, error)) throw IoError("'" + path + "': " + error);
  if (std::fflush(f.get()) != 0) throw IoError("write failed for '" + path + "'");
}

std::string rgb_text(Rgb8 c) {
  return "(" + std::to_string(c.r) + "," + std::to_string(c.g) + "," + std::to_string(c.b) + ")";
}

}  // namespace

void validate_mask(const CategoricalMask& mask, const ClassTaxonomy& taxonomy) {
  if (mask.width < 1 || mask.height < 1) throw PreconditionError("mask must be at least 1x1");
  if (mask.data.size() != mask.pixel_count()) throw PreconditionError("mask buffer size does not match dimensions");
  for (std::size_t i = 0; i < mask.data.size(); ++i) {
    if (mask.data[i] >= taxonomy.size()) {
      throw PreconditionError("mask value " + std::to_string(mask.data[i]) + " at (" +
                              std::to_string(i / mask.width) + ", " + std::to_string(i % mask.width) +
                              ") is not a class index (K = " + std::to_string(taxonomy.size()) + ")");
    }
  }
}

void encode_mask(const CategoricalMask& mask, const ClassTaxonomy& taxonomy, const std::string& path) {
  validate_mask(mask, taxonomy);
  std::vector<png_color> palette;
  for (const ClassDef& c : taxonomy.classes()) {
    palette.push_back({c.display_color.r, c.display_color.g, c.display_color.b});
  }
  write_png(path, {nullptr, mask.width, mask.height, PNG_COLOR_TYPE_PALETTE, palette.data(),
                   static_cast<int>(palette.size()), mask.data.data(), mask.width});
}

CategoricalMask decode_mask(const std::string& path, const ClassTaxonomy& taxonomy) {
  PngImage img = read_png(path);
  if (img.color_type != PNG_COLOR_TYPE_PALETTE || img.channels != 1) {
    throw FormatError("'" + path + "' is not an indexed-color PNG");
  }
  if (img.bit_depth != 8) throw FormatError("'" + path + "' is not 8-bit indexed");
  const std::size_t checked = std::min(img.palette.size(), taxonomy.size());
  for (std::size_t k = 0; k < checked; ++k) {
    const Rgb8 file_color{img.palette[k].red, img.palette[k].green, img.palette[k].blue};
    if (file_color != taxonomy.display_color(static_cast<ClassIndex>(k))) {
      throw FormatError("'" + path + "': palette mismatch at entry " + std::to_string(k) + ": file has " +
                        rgb_text(file_color) + ", taxonomy has " +
                        rgb_text(taxonomy.display_color(static_cast<ClassIndex>(k))));
    }
  }
  CategoricalMask mask;
  mask.width = img.width;
  mask.height = img.height;
  mask.data = std::move(img.data);
  for (std::size_t i = 0; i < mask.data.size(); ++i) {
    if (mask.data[i] >= taxonomy.size()) {
      throw FormatError("'" + path + "': index " + std::to_string(mask.data[i]) + " at pixel " + std::to_string(i) +
                        " is not a class index");
    }
  }
  return mask;
}

CategoricalMask rgb_to_mask(const RgbImage& rgb, const ClassTaxonomy& taxonomy) {
  CategoricalMask mask(rgb.width, rgb.height);
  for (int row = 0; row < rgb.height; ++row) {
    for (int col = 0; col < rgb.width; ++col) {
      const Rgb8 c = rgb.at(row, col);
      try {
        mask.set(row, col, taxonomy.color_to_index(c));
      } catch (const PreconditionError&) {
        throw PreconditionError("unknown color " + rgb_text(c) + " at (row " + std::to_string(row) + ", col " +
                                std::to_string(col) + ")");
      }
    }
  }
  return mask;
}

RgbImage mask_to_rgb(const CategoricalMask& mask, const ClassTaxonomy& taxonomy) {
  RgbImage rgb(mask.width, mask.height);
  for (int row = 0; row < mask.height; ++row) {
    for (int col = 0; col < mask.width; ++col) rgb.set(row, col, taxonomy.display_color(mask.at(row, col)));
  }
  return rgb;
}

void write_rgb_png(const RgbImage& image, const std::string& path) {
  if (image.width < 1 || image.height < 1 || image.data.size() != image.pixel_count() * 3) {
    throw PreconditionError("invalid RGB image");
  }
  write_png(path, {nullptr, image.width, image.height, PNG_COLOR_TYPE_RGB, nullptr, 0, image.data.data(),
                   image.width * 3});
}

RgbImage read_rgb_png(const std::string& path) {
  PngImage img = read_png(path);
  if (img.color_type != PNG_COLOR_TYPE_RGB || img.channels != 3) {
    throw FormatError("'" + path + "' is not an 8-bit RGB PNG");
  }
  RgbImage out;
  out.width = img.width;
  out.height = img.height;
  out.data = std::move(img.data);
  return out;
}

}  // namespace orbseg
