#pragma once

#include <string>

#include "orbseg/image.hpp"
#include "orbseg/taxonomy.hpp"

namespace orbseg {

// Throws PreconditionError if any value is >= taxonomy.size() or the buffer
// size disagrees with the dimensions.
void validate_mask(const CategoricalMask& mask, const ClassTaxonomy& taxonomy);

// Writes an 8-bit palette PNG: palette entry k is the display color of class k
// and the index data equals mask.data byte for byte. Validation happens before
// the file is opened.
void encode_mask(const CategoricalMask& mask, const ClassTaxonomy& taxonomy, const std::string& path);

// Reads an 8-bit palette PNG back verbatim. Palette entries present in the file
// must match the taxonomy colors; indices must be < K.
CategoricalMask decode_mask(const std::string& path, const ClassTaxonomy& taxonomy);

// Pixel-wise exact color lookup. Errors cite the (row, col) of the first
// off-palette pixel.
CategoricalMask rgb_to_mask(const RgbImage& rgb, const ClassTaxonomy& taxonomy);
// Paints each class with its display color.
RgbImage mask_to_rgb(const CategoricalMask& mask, const ClassTaxonomy& taxonomy);

// 8-bit truecolor RGB PNG for rendered frames.
void write_rgb_png(const RgbImage& image, const std::string& path);
RgbImage read_rgb_png(const std::string& path);

}  // namespace orbseg
