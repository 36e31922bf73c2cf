#include "mrigan/kspace.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mrigan/io.hpp"
#include "mrigan/rng.hpp"

namespace mrigan {

std::string to_string(MaskScheme s) {
  switch (s) {
    case MaskScheme::cartesian: return "cartesian";
    case MaskScheme::radial: return "radial";
    case MaskScheme::spiral: return "spiral";
    case MaskScheme::full: return "full";
  }
  return "?";
}

MaskScheme mask_scheme_from_string(const std::string& s) {
  if (s == "cartesian") return MaskScheme::cartesian;
  if (s == "radial") return MaskScheme::radial;
  if (s == "spiral") return MaskScheme::spiral;
  if (s == "full") return MaskScheme::full;
  throw ParamError("unknown mask scheme: " + s);
}

size_t Mask::count() const {
  size_t n = 0;
  for (size_t i = 0; i < grid.numel(); ++i)
    if (grid.r(i) != 0.0) ++n;
  return n;
}

namespace {

// Map a centred coordinate to the DC-at-(0,0) storage grid.
size_t uncenter(long r, size_t extent) {
  long h = static_cast<long>(extent);
  long i = (r - h / 2) % h;
  if (i < 0) i += h;
  return static_cast<size_t>(i);
}

Mask cartesian_mask(size_t h, size_t w, double af, double center_fraction,
                    uint64_t seed) {
  if (af < 1.0) throw ParamError("cartesian mask: acceleration factor must be >= 1");
  if (af > static_cast<double>(h))
    throw ParamError("cartesian mask: acceleration factor exceeds line count");
  const size_t lines = static_cast<size_t>(std::ceil(static_cast<double>(h) / af));
  const size_t band = static_cast<size_t>(
      std::ceil(center_fraction * static_cast<double>(h)));
  std::vector<char> line_on(h, 0);
  // Central low-frequency band around DC, wrapped indexing.
  long half = static_cast<long>(band) / 2;
  for (long o = -half; o < static_cast<long>(band) - half; ++o) {
    long row = o % static_cast<long>(h);
    if (row < 0) row += static_cast<long>(h);
    line_on[static_cast<size_t>(row)] = 1;
  }
  line_on[0] = 1;  // DC line guarantee even with center_fraction == 0
  size_t fixed = static_cast<size_t>(std::count(line_on.begin(), line_on.end(), 1));
  if (fixed > lines)
    throw ParamError("cartesian mask: center band exceeds the line budget");
  std::vector<size_t> rest;
  for (size_t i = 0; i < h; ++i)
    if (!line_on[i]) rest.push_back(i);
  Rng rng = Rng(seed).derive("mask/cartesian");
  rng.shuffle(rest);
  for (size_t i = 0; i < lines - fixed; ++i) line_on[rest[i]] = 1;

  Mask m;
  m.grid = Tensor::zeros({h, w});
  for (size_t i = 0; i < h; ++i)
    if (line_on[i])
      for (size_t j = 0; j < w; ++j) m.grid.at({i, j}) = 1.0;
  m.scheme = MaskScheme::cartesian;
  m.target = af;
  m.achieved_rate = static_cast<double>(lines) / static_cast<double>(h);
  m.seed = seed;
  return m;
}

Mask radial_mask(size_t h, size_t w, double rate, uint64_t seed) {
  if (rate <= 0.0 || rate > 1.0)
    throw ParamError("radial mask: sampling rate must lie in (0,1]");
  const size_t total = h * w;
  const size_t want = static_cast<size_t>(
      std::ceil(rate * static_cast<double>(total)));
  // MRI golden angle: pi / golden ratio, ~111.246 degrees.
  const double ga = std::numbers::pi / ((1.0 + std::sqrt(5.0)) / 2.0);
  const double radius = std::hypot(static_cast<double>(h), static_cast<double>(w)) / 2.0;
  Tensor grid = Tensor::zeros({h, w});
  size_t count = 0;
  std::vector<size_t> last_unique;
  const size_t max_spokes = 8 * std::max(h, w);
  size_t spoke = 0;
  for (; spoke < max_spokes && count < want; ++spoke) {
    const double theta = static_cast<double>(spoke) * ga;
    const double cs = std::cos(theta), sn = std::sin(theta);
    last_unique.clear();
    for (double t = -radius; t <= radius; t += 0.5) {
      long rc = std::lround(static_cast<double>(h) / 2.0 + t * sn);
      long cc = std::lround(static_cast<double>(w) / 2.0 + t * cs);
      if (rc < 0 || rc >= static_cast<long>(h) || cc < 0 || cc >= static_cast<long>(w))
        continue;
      size_t i = uncenter(rc, h), j = uncenter(cc, w);
      if (grid.at({i, j}) == 0.0) {
        grid.at({i, j}) = 1.0;
        ++count;
        last_unique.push_back(i * w + j);
      }
    }
  }
  if (count < want) throw ParamError("radial mask: unreachable sampling rate");
  // Trim the overshoot from the last spoke down to exactly ceil(rate*H*W).
  Rng rng = Rng(seed).derive("mask/radial");
  rng.shuffle(last_unique);
  for (size_t k = 0; k < last_unique.size() && count > want; ++k) {
    size_t flat = last_unique[k];
    if (flat == 0) continue;  // never trim DC
    grid.r(flat) = 0.0;
    --count;
  }
  grid.r(0) = 1.0;  // DC guarantee (first spoke crosses the centre anyway)

  Mask m;
  m.grid = std::move(grid);
  m.scheme = MaskScheme::radial;
  m.target = rate;
  m.achieved_rate = static_cast<double>(m.count()) / static_cast<double>(total);
  m.seed = seed;
  return m;
}

Mask spiral_mask(size_t h, size_t w, double rate, uint64_t seed) {
  if (rate <= 0.0 || rate > 1.0)
    throw ParamError("spiral mask: sampling rate must lie in (0,1]");
  const size_t total = h * w;
  const size_t want = static_cast<size_t>(
      std::ceil(rate * static_cast<double>(total)));
  // One-pixel ring pitch lets the full arc cover the whole grid.
  const double a = 1.0 / (2.0 * std::numbers::pi);
  const double radius = std::hypot(static_cast<double>(h), static_cast<double>(w)) / 2.0;
  Tensor grid = Tensor::zeros({h, w});
  size_t count = 0;
  double phi = 0.0;
  while (count < want) {
    const double r = a * phi;
    if (r > radius) throw ParamError("spiral mask: unreachable sampling rate");
    long rc = std::lround(static_cast<double>(h) / 2.0 + r * std::sin(phi));
    long cc = std::lround(static_cast<double>(w) / 2.0 + r * std::cos(phi));
    if (rc >= 0 && rc < static_cast<long>(h) && cc >= 0 && cc < static_cast<long>(w)) {
      size_t i = uncenter(rc, h), j = uncenter(cc, w);
      if (grid.at({i, j}) == 0.0) {
        grid.at({i, j}) = 1.0;
        ++count;  // at most one new pixel per step: the count lands exactly
      }
    }
    phi += 0.4 / std::max(0.5, std::hypot(r, a));
  }
  grid.r(0) = 1.0;  // arc starts at the centre; keep the guarantee explicit

  Mask m;
  m.grid = std::move(grid);
  m.scheme = MaskScheme::spiral;
  m.target = rate;
  m.achieved_rate = static_cast<double>(m.count()) / static_cast<double>(total);
  m.seed = seed;
  return m;
}

}  // namespace

Mask make_mask(MaskScheme scheme, size_t h, size_t w, double target,
               double center_fraction, uint64_t seed) {
  if (h == 0 || w == 0) throw ParamError("make_mask: empty grid");
  switch (scheme) {
    case MaskScheme::cartesian:
      return cartesian_mask(h, w, target, center_fraction, seed);
    case MaskScheme::radial:
      return radial_mask(h, w, target, seed);
    case MaskScheme::spiral:
      return spiral_mask(h, w, target, seed);
    case MaskScheme::full:
      return full_mask(h, w);
  }
  throw ParamError("make_mask: unknown scheme");
}

Mask full_mask(size_t h, size_t w) {
  Mask m;
  m.grid = Tensor::full({h, w}, 1.0);
  m.scheme = MaskScheme::full;
  m.target = 1.0;
  m.achieved_rate = 1.0;
  return m;
}

Tensor forward(const Tensor& x, const Mask& mask) {
  if (x.rank() != 2 || x.shape() != mask.grid.shape())
    throw ShapeError("forward: image and mask shapes differ");
  return mul(mask.grid, fft2(x.is_complex() ? x : to_complex(x)));
}

Tensor zero_fill(const Tensor& y_u) { return ifft2(y_u); }

Tensor data_consistency(const Tensor& pred_k, const Tensor& y_u, const Mask& mask) {
  if (pred_k.shape() != y_u.shape() || pred_k.shape() != mask.grid.shape())
    throw ShapeError("data_consistency: shape mismatch");
  Tensor out = Tensor::zeros(pred_k.shape(), Dtype::complex128);
  for (size_t i = 0; i < out.numel(); ++i)
    out.set_c(i, mask.grid.r(i) != 0.0 ? y_u.val(i) : pred_k.val(i));
  return out;
}

AcqPair acquire(const Tensor& x_t, const Mask& mask) {
  AcqPair p;
  p.x_t = x_t.is_complex() ? x_t : to_complex(x_t);
  p.y_u = forward(p.x_t, mask);
  p.mask = mask;
  return p;
}

const std::vector<Ellipse>& shepp_logan_ellipses() {
  // intensity, x half-axis, y half-axis, x0, y0, rotation (rad)
  static const double d18 = 18.0 * std::numbers::pi / 180.0;
  static const std::vector<Ellipse> table = {
      {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
      {-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0},
      {-0.2, 0.1100, 0.3100, 0.22, 0.0, -d18},
      {-0.2, 0.1600, 0.4100, -0.22, 0.0, d18},
      {0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0},
      {0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0},
      {0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0},
      {0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0},
      {0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0},
      {0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0},
  };
  return table;
}

Tensor render_phantom(const std::vector<Ellipse>& ellipses, size_t h, size_t w) {
  Tensor img = Tensor::zeros({h, w});
  for (size_t i = 0; i < h; ++i) {
    const double y = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(h);
    for (size_t j = 0; j < w; ++j) {
      const double x = 2.0 * (static_cast<double>(j) + 0.5) / static_cast<double>(w) - 1.0;
      double v = 0.0;
      for (const Ellipse& e : ellipses) {
        const double dx = x - e.x0, dy = y - e.y0;
        const double ct = std::cos(e.phi), st = std::sin(e.phi);
        const double u = (dx * ct + dy * st) / e.ax;
        const double t = (-dx * st + dy * ct) / e.ay;
        if (u * u + t * t <= 1.0) v += e.intensity;
      }
      img.at({i, j}) = v;
    }
  }
  double lo = 0.0, hi = 0.0;
  for (size_t i = 0; i < img.numel(); ++i) {
    lo = std::min(lo, img.r(i));
    hi = std::max(hi, img.r(i));
  }
  if (lo < 0.0 || hi > 1.0) {
    const double span = std::max(hi - std::min(lo, 0.0), 1e-12);
    for (size_t i = 0; i < img.numel(); ++i)
      img.r(i) = (img.r(i) - std::min(lo, 0.0)) / span;
  }
  return img;
}

Tensor shepp_logan(size_t h, size_t w) {
  return render_phantom(shepp_logan_ellipses(), h, w);
}

void save_mask_pgm(const Mask& mask, const std::string& path) {
  write_pgm(fftshift2(mask.grid), path);
}

}  // namespace mrigan
