#include "osil/frame_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "osil/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "frame container I/O assumes a little-endian host");

namespace osil {

namespace {

constexpr char kMagic[4] = {'O', 'S', 'R', 'F'};

template <typename T>
void write_raw(std::ostream& os, const T* data, std::size_t n) {
  os.write(reinterpret_cast<const char*>(data),
           static_cast<std::streamsize>(n * sizeof(T)));
}

template <typename T>
void read_raw(std::istream& is, T* data, std::size_t n) {
  is.read(reinterpret_cast<char*>(data),
          static_cast<std::streamsize>(n * sizeof(T)));
  if (!is) throw Error(ErrorCode::IoError, "frame: truncated stream");
}

}  // namespace

void write_frame(std::ostream& os, const RgbdFrame& frame) {
  const Intrinsics& k = frame.intrinsics;
  const std::size_t n =
      static_cast<std::size_t>(k.width) * static_cast<std::size_t>(k.height);
  if (frame.depth.size() != n || frame.color.size() != n * 3 ||
      frame.instance.size() != n)
    throw Error(ErrorCode::InvalidArgument, "frame: layer size mismatch");

  os.write(kMagic, 4);
  const std::uint32_t header[3] = {kFrameFormatVersion,
                                   static_cast<std::uint32_t>(k.width),
                                   static_cast<std::uint32_t>(k.height)};
  write_raw(os, header, 3);
  const double intr[6] = {k.fx, k.fy, k.cx, k.cy,
                          static_cast<double>(k.width),
                          static_cast<double>(k.height)};
  write_raw(os, intr, 6);
  write_raw(os, frame.depth.data(), n);
  write_raw(os, frame.color.data(), n * 3);
  write_raw(os, frame.instance.data(), n);
  if (!os) throw Error(ErrorCode::IoError, "frame: write failed");
}

RgbdFrame read_frame(std::istream& is) {
  char magic[4];
  read_raw(is, magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw Error(ErrorCode::IoError, "frame: bad magic");
  std::uint32_t header[3];
  read_raw(is, header, 3);
  if (header[0] != kFrameFormatVersion)
    throw Error(ErrorCode::IoError, "frame: unsupported version");
  double intr[6];
  read_raw(is, intr, 6);

  RgbdFrame frame;
  frame.intrinsics.fx = intr[0];
  frame.intrinsics.fy = intr[1];
  frame.intrinsics.cx = intr[2];
  frame.intrinsics.cy = intr[3];
  frame.intrinsics.width = static_cast<int>(header[1]);
  frame.intrinsics.height = static_cast<int>(header[2]);
  if (frame.intrinsics.width <= 0 || frame.intrinsics.height <= 0 ||
      intr[4] != header[1] || intr[5] != header[2])
    throw Error(ErrorCode::IoError, "frame: inconsistent dimensions");

  const std::size_t n = static_cast<std::size_t>(frame.intrinsics.width) *
                        static_cast<std::size_t>(frame.intrinsics.height);
  frame.depth.resize(n);
  frame.color.resize(n * 3);
  frame.instance.resize(n);
  read_raw(is, frame.depth.data(), n);
  read_raw(is, frame.color.data(), n * 3);
  read_raw(is, frame.instance.data(), n);
  return frame;
}

void write_frame_file(const std::string& path, const RgbdFrame& frame) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::IoError, "frame: cannot open " + path);
  write_frame(os, frame);
}

RgbdFrame read_frame_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::IoError, "frame: cannot open " + path);
  return read_frame(is);
}

}  // namespace osil
