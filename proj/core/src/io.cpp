#include "mrigan/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace mrigan {

namespace {

void put_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
  uint64_t bits;
  std::memcpy(&bits, &d, 8);
  put_u64(out, bits);
}

class Reader {
public:
  Reader(const std::string& buf, const std::string& path) : buf_(buf), path_(path) {}
  uint8_t u8() { return static_cast<uint8_t>(byte()); }
  uint16_t u16() { return static_cast<uint16_t>(byte()) | static_cast<uint16_t>(byte()) << 8; }
  uint32_t u32() {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(byte()) << (8 * i);
    return v;
  }
  uint64_t u64() {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(byte()) << (8 * i);
    return v;
  }
  double f64() {
    uint64_t bits = u64();
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
  }
  std::string bytes(size_t n) {
    if (pos_ + n > buf_.size()) fail();
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void seek(size_t pos) { pos_ = pos; }
  size_t pos() const { return pos_; }

private:
  unsigned char byte() {
    if (pos_ >= buf_.size()) fail();
    return static_cast<unsigned char>(buf_[pos_++]);
  }
  [[noreturn]] void fail() { throw IoError("truncated or corrupt file: " + path_); }
  const std::string& buf_;
  std::string path_;
  size_t pos_ = 0;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("short write to " + path);
}

constexpr char kMbtMagic[8] = {'M', 'B', 'T', '1', 0, 0, 0, 0};

std::string encode_mbt(const Tensor& t) {
  std::string out(kMbtMagic, 8);
  out.push_back(static_cast<char>(t.dtype()));
  out.push_back(static_cast<char>(t.rank()));
  for (size_t e : t.shape()) put_u32(out, static_cast<uint32_t>(e));
  for (double d : t.raw()) put_f64(out, d);
  return out;
}

Tensor decode_mbt(Reader& r, const std::string& path) {
  if (r.bytes(8) != std::string(kMbtMagic, 8))
    throw IoError("bad MBT1 magic in " + path);
  uint8_t tag = r.u8();
  if (tag > 1) throw IoError("unknown dtype tag in " + path);
  Dtype dt = tag == 0 ? Dtype::real64 : Dtype::complex128;
  uint8_t rank = r.u8();
  std::vector<size_t> shape(rank);
  for (auto& e : shape) e = r.u32();
  Tensor t = Tensor::zeros(shape, dt);
  for (double& d : t.raw()) d = r.f64();
  return t;
}

}  // namespace

void save_mbt(const Tensor& t, const std::string& path) {
  spit(path, encode_mbt(t));
}

Tensor load_mbt(const std::string& path) {
  std::string buf = slurp(path);
  Reader r(buf, path);
  return decode_mbt(r, path);
}

void save_mbc(const std::map<std::string, Tensor>& entries, const std::string& path) {
  // Two passes: sizes are known up front, so offsets can be written directly.
  size_t toc_size = 4 + 4;
  for (const auto& [name, t] : entries) {
    (void)t;
    toc_size += 2 + name.size() + 8 + 8;
  }
  std::string out;
  out.reserve(toc_size);
  out.append("MBC1", 4);
  put_u32(out, static_cast<uint32_t>(entries.size()));
  std::vector<std::string> blobs;
  blobs.reserve(entries.size());
  uint64_t offset = toc_size;
  for (const auto& [name, t] : entries) {
    blobs.push_back(encode_mbt(t));
    put_u16(out, static_cast<uint16_t>(name.size()));
    out.append(name);
    put_u64(out, offset);
    put_u64(out, blobs.back().size());
    offset += blobs.back().size();
  }
  for (const auto& b : blobs) out.append(b);
  spit(path, out);
}

std::map<std::string, Tensor> load_mbc(const std::string& path) {
  std::string buf = slurp(path);
  Reader r(buf, path);
  if (r.bytes(4) != "MBC1") throw IoError("bad MBC1 magic in " + path);
  uint32_t count = r.u32();
  std::vector<std::pair<std::string, std::pair<uint64_t, uint64_t>>> toc;
  toc.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    uint16_t len = r.u16();
    std::string name = r.bytes(len);
    uint64_t off = r.u64();
    uint64_t size = r.u64();
    toc.emplace_back(std::move(name), std::make_pair(off, size));
  }
  std::map<std::string, Tensor> entries;
  for (const auto& [name, span] : toc) {
    r.seek(span.first);
    entries.emplace(name, decode_mbt(r, path));
  }
  return entries;
}

void write_pgm(const Tensor& image01, const std::string& path) {
  if (image01.rank() != 2 || image01.is_complex())
    throw ShapeError("write_pgm: real rank-2 tensor required");
  size_t h = image01.extent(0), w = image01.extent(1);
  std::string out = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  out.reserve(out.size() + h * w);
  for (size_t i = 0; i < h * w; ++i) {
    double v = std::min(1.0, std::max(0.0, image01.r(i)));
    out.push_back(static_cast<char>(std::lround(v * 255.0)));
  }
  spit(path, out);
}

Tensor read_pgm(const std::string& path) {
  std::string buf = slurp(path);
  std::istringstream in(buf);
  std::string magic;
  in >> magic;
  if (magic != "P5") throw IoError("not a binary PGM: " + path);
  auto next_int = [&]() {
    // Skip whitespace and '#' comment lines between header tokens.
    int c;
    while ((c = in.peek()) != EOF) {
      if (c == '#') {
        std::string line;
        std::getline(in, line);
      } else if (std::isspace(c)) {
        in.get();
      } else {
        break;
      }
    }
    long v = -1;
    in >> v;
    if (v < 0) throw IoError("bad PGM header in " + path);
    return static_cast<size_t>(v);
  };
  size_t w = next_int(), h = next_int(), maxval = next_int();
  if (maxval == 0 || maxval > 255) throw IoError("unsupported PGM maxval in " + path);
  in.get();  // single whitespace after maxval
  size_t start = static_cast<size_t>(in.tellg());
  if (buf.size() < start + h * w) throw IoError("truncated PGM: " + path);
  Tensor t = Tensor::zeros({h, w});
  for (size_t i = 0; i < h * w; ++i)
    t.r(i) = static_cast<double>(static_cast<unsigned char>(buf[start + i])) /
             static_cast<double>(maxval);
  return t;
}

std::string fmt_fixed(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

}  // namespace mrigan
