#pragma once

#include <map>
#include <string>

#include "mrigan/tensor.hpp"

namespace mrigan {

// MBT1 single-tensor file: 8-byte magic "MBT1\0\0\0\0", u8 dtype tag
// (0 = real64, 1 = complex128), u8 rank, rank x u32 little-endian extents,
// then the row-major little-endian element data (complex as re,im pairs).
// Round-trips are bit-exact.
void save_mbt(const Tensor& t, const std::string& path);
Tensor load_mbt(const std::string& path);

// MBC1 container: 4-byte magic "MBC1", u32 entry count, then per entry
// u16 name length + UTF-8 name + u64 absolute offset + u64 byte length of an
// embedded MBT1 blob. Entries are written in sorted name order.
void save_mbc(const std::map<std::string, Tensor>& entries, const std::string& path);
std::map<std::string, Tensor> load_mbc(const std::string& path);

// Binary PGM (P5, maxval 255). Values are clamped to [0,1] and scaled to 255.
void write_pgm(const Tensor& image01, const std::string& path);
Tensor read_pgm(const std::string& path);  // real64 2-D in [0,1]

// Fixed-point formatting used by every CSV/table writer so repeated runs are
// byte-identical.
std::string fmt_fixed(double v, int precision);

}  // namespace mrigan
