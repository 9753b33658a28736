#pragma once

#include <string>

#include "trc/tensor.hpp"

namespace trc {

//! Reads an 8-bit PNG into an H x W x 3 tensor scaled to [0,1]. Palette,
//! grayscale, and alpha inputs are normalized to RGB on the way in; files that
//! are not PNGs or exceed sane dimensions throw.
DenseTensor load_image(const std::string& path);

//! Writes an H x W x 3 tensor as an 8-bit RGB PNG, clamping to [0,1] and
//! rounding to the nearest of 256 levels. load(save(load(p))) is bit-identical
//! to load(p).
void save_image(const DenseTensor& t, const std::string& path);

//! Pure reshape to a higher order under the flat linearization; element count
//! must be preserved. detensorize undoes it exactly.
DenseTensor tensorize(const DenseTensor& t, const Shape& target);
DenseTensor detensorize(const DenseTensor& t, const Shape& original);

//! High-order target shape for common image sizes:
//!   256 x 256 x 3 -> 4x4x4x4x4x4x4x4x3
//!   600 x 600 x 3 -> 6x10x10x6x10x10x3
//!    64 x  64 x 3 -> 4x4x4x4x4x4x3
//! Unknown sizes throw.
Shape tensorize_preset(const Shape& image_shape);

}  // namespace trc
