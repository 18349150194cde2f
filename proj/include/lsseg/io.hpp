#pragma once

#include <stdexcept>
#include <string>

#include "lsseg/grid.hpp"

namespace lsseg {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// FGRD: "FGRD", version 0x01, u32le height, u32le width, then h*w float32le row-major.
void write_fgrd(const std::string& path, const Grid& g);
Grid read_fgrd(const std::string& path);

// PGM P5, maxval 255. Values are scaled to [0,1] on read.
void write_pgm(const std::string& path, const Grid& g);
Grid read_pgm(const std::string& path);
/// Reads a PGM and binarizes at >127 (i.e. >0.5 after scaling).
Grid read_pgm_mask(const std::string& path);

/// Accepts either format, dispatching on the file magic.
Grid read_image(const std::string& path);

// PPM P6 grayscale render with a red mask overlay (alpha 0.4) or a 1-px contour.
void write_ppm_overlay(const std::string& path, const Grid& image, const Grid& mask,
                       bool contour_only);

}  // namespace lsseg
