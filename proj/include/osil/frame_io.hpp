#pragma once

#include <iosfwd>
#include <string>

#include "osil/camera.hpp"

namespace osil {

// ============================================================================
// Binary RGB-D frame container (.osrf)
//
//   magic   "OSRF"            4 bytes
//   version u32 LE            currently 1
//   width   u32 LE
//   height  u32 LE
//   intrinsics 6 x f64 LE     fx, fy, cx, cy, width, height
//   depth   f32 LE row-major  width*height
//   color   u8 x 3            width*height*3
//   instance u16 LE           width*height
//
// Round trips are bit-exact.
// ============================================================================

inline constexpr std::uint32_t kFrameFormatVersion = 1;

void write_frame(std::ostream& os, const RgbdFrame& frame);
RgbdFrame read_frame(std::istream& is);

void write_frame_file(const std::string& path, const RgbdFrame& frame);
RgbdFrame read_frame_file(const std::string& path);

}  // namespace osil
