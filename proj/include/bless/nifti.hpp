#pragma once

// Minimal NIfTI-1 reader: single-file .nii or gzipped .nii.gz, enough to
// pull lesion masks and statistic volumes into the native volume format.
// Handles the byte-swapped case (dim[0] outside 1..7), integer and float
// datatypes, and scl_slope/scl_inter rescaling.

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "bless/io.hpp"

namespace bless {
namespace detail {

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open: " + path);
  in.seekg(0, std::ios::end);
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(in.tellg()));
  in.seekg(0);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!in) throw config_error("read failed: " + path);
  return buf;
}

inline std::vector<std::uint8_t> gunzip_bytes(const std::vector<std::uint8_t>& in,
                                              const std::string& what) {
  z_stream zs;
  std::memset(&zs, 0, sizeof(zs));
  if (inflateInit2(&zs, 15 + 16) != Z_OK)
    throw config_error("zlib init failed for " + what);
  std::vector<std::uint8_t> out;
  out.resize(std::max<std::size_t>(in.size() * 4, 1 << 20));
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  std::size_t written = 0;
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    if (written == out.size()) out.resize(out.size() * 2);
    zs.next_out = out.data() + written;
    zs.avail_out = static_cast<uInt>(out.size() - written);
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw config_error("corrupt gzip stream in " + what);
    }
    written = out.size() - zs.avail_out;
  }
  inflateEnd(&zs);
  out.resize(written);
  return out;
}

template <typename T>
T swap_bytes(T v) {
  T out;
  const std::uint8_t* src = reinterpret_cast<const std::uint8_t*>(&v);
  std::uint8_t* dst = reinterpret_cast<std::uint8_t*>(&out);
  for (std::size_t i = 0; i < sizeof(T); ++i) dst[i] = src[sizeof(T) - 1 - i];
  return out;
}

}  // namespace detail

// volume with doubles, frames = trailing dimension when 4-d
inline Volume read_nifti(const std::string& path) {
  std::vector<std::uint8_t> raw = detail::read_file_bytes(path);
  if (raw.size() >= 2 && raw[0] == 0x1f && raw[1] == 0x8b)
    raw = detail::gunzip_bytes(raw, path);
  if (raw.size() < 352) throw config_error("not a nifti file (too short): " + path);

  auto rd_i16 = [&](std::size_t off, bool swap) {
    std::int16_t v;
    std::memcpy(&v, raw.data() + off, 2);
    return swap ? detail::swap_bytes(v) : v;
  };
  auto rd_i32 = [&](std::size_t off, bool swap) {
    std::int32_t v;
    std::memcpy(&v, raw.data() + off, 4);
    return swap ? detail::swap_bytes(v) : v;
  };
  auto rd_f32 = [&](std::size_t off, bool swap) {
    float v;
    std::memcpy(&v, raw.data() + off, 4);
    return swap ? detail::swap_bytes(v) : v;
  };

  bool swap = false;
  std::int16_t ndim = rd_i16(40, false);
  if (ndim < 1 || ndim > 7) {
    swap = true;
    ndim = rd_i16(40, true);
    if (ndim < 1 || ndim > 7) throw config_error("bad nifti dim[0]: " + path);
  }
  if (rd_i32(0, swap) != 348) throw config_error("bad nifti header size: " + path);
  if (std::memcmp(raw.data() + 344, "n+1", 3) != 0 &&
      std::memcmp(raw.data() + 344, "ni1", 3) != 0)
    throw config_error("missing nifti magic: " + path);
  if (std::memcmp(raw.data() + 344, "ni1", 3) == 0)
    throw config_error("two-file nifti (.hdr/.img) not supported: " + path);

  std::vector<std::int64_t> dims(ndim);
  for (int i = 0; i < ndim; ++i) {
    dims[i] = rd_i16(40 + 2 * (i + 1), swap);
    if (dims[i] < 1) throw config_error("bad nifti dimension: " + path);
  }
  if (ndim > 4) throw config_error("nifti with more than 4 dimensions: " + path);
  const std::int16_t datatype = rd_i16(70, swap);
  double slope = rd_f32(112, swap), inter = rd_f32(116, swap);
  if (slope == 0.0) slope = 1.0;
  const double voff = rd_f32(108, swap);
  const std::size_t offset = static_cast<std::size_t>(voff < 352.0 ? 352.0 : voff);

  std::int64_t nvox = 1;
  for (int i = 0; i < std::min<int>(ndim, 3); ++i) nvox *= dims[i];
  const std::int64_t frames = ndim == 4 ? dims[3] : 1;
  const std::int64_t total = nvox * frames;

  Volume v;
  v.dims.assign(dims.begin(), dims.begin() + std::min<int>(ndim, 3));
  v.count = static_cast<std::uint32_t>(frames);
  v.dtype = 1;
  v.f64.resize(total);

  auto fill = [&](auto sample_type, std::size_t width) {
    using T = decltype(sample_type);
    if (offset + width * total > raw.size())
      throw config_error("truncated nifti payload: " + path);
    for (std::int64_t i = 0; i < total; ++i) {
      T x;
      std::memcpy(&x, raw.data() + offset + width * i, width);
      if (swap) x = detail::swap_bytes(x);
      v.f64[i] = slope * static_cast<double>(x) + inter;
    }
  };
  switch (datatype) {
    case 2: fill(std::uint8_t{}, 1); break;
    case 4: fill(std::int16_t{}, 2); break;
    case 8: fill(std::int32_t{}, 4); break;
    case 16: fill(float{}, 4); break;
    case 64: fill(double{}, 8); break;
    case 256: fill(std::int8_t{}, 1); break;
    case 512: fill(std::uint16_t{}, 2); break;
    case 768: fill(std::uint32_t{}, 4); break;
    default:
      throw config_error("unsupported nifti datatype " + std::to_string(datatype) +
                         ": " + path);
  }
  return v;
}

}  // namespace bless
