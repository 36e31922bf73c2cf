#include <cmath>
#include <numbers>

#include "doctest.h"
#include "mrigan/io.hpp"
#include "mrigan/tensor.hpp"

using namespace mrigan;

namespace {

// Independent oracle: O(N^2) unitary DFT straight from the definition.
Tensor dft2_bruteforce(const Tensor& x, bool inverse) {
  const size_t h = x.extent(0), w = x.extent(1);
  const double sign = inverse ? 1.0 : -1.0;
  Tensor out = Tensor::zeros({h, w}, Dtype::complex128);
  for (size_t k = 0; k < h; ++k)
    for (size_t l = 0; l < w; ++l) {
      cplx acc = 0.0;
      for (size_t m = 0; m < h; ++m)
        for (size_t n = 0; n < w; ++n) {
          double ang = sign * 2.0 * std::numbers::pi *
                       (static_cast<double>(k * m) / h + static_cast<double>(l * n) / w);
          acc += x.c(m * w + n) * cplx(std::cos(ang), std::sin(ang));
        }
      out.set_c(k * w + l, acc / std::sqrt(static_cast<double>(h * w)));
    }
  return out;
}

Tensor random_complex(size_t h, size_t w, Rng& rng) {
  Tensor t = Tensor::zeros({h, w}, Dtype::complex128);
  for (size_t i = 0; i < t.numel(); ++i) t.set_c(i, {rng.normal(), rng.normal()});
  return t;
}

}  // namespace

TEST_CASE("fft2 matches the brute-force DFT on assorted extents") {
  Rng rng(11);
  for (auto [h, w] : {std::pair<size_t, size_t>{1, 1}, {2, 2}, {4, 4}, {3, 5},
                      {6, 6}, {7, 7}, {8, 3}, {16, 16}}) {
    Tensor x = random_complex(h, w, rng);
    CHECK(max_abs_diff(fft2(x), dft2_bruteforce(x, false)) < 1e-10);
    CHECK(max_abs_diff(ifft2(x), dft2_bruteforce(x, true)) < 1e-10);
  }
}

TEST_CASE("fft2 of a single sample is the identity") {
  Tensor x = Tensor::from_complex({1, 1}, {cplx(3.25, -1.5)});
  CHECK(max_abs_diff(fft2(x), x) == 0.0);
}

TEST_CASE("fft2 of the 2x2 all-ones image concentrates at DC") {
  Tensor ones = to_complex(Tensor::full({2, 2}, 1.0));
  Tensor f = fft2(ones);
  CHECK(std::abs(f.c(0) - cplx(2.0, 0.0)) < 1e-14);  // 4 / sqrt(4)
  CHECK(std::abs(f.c(1)) < 1e-14);
  CHECK(std::abs(f.c(2)) < 1e-14);
  CHECK(std::abs(f.c(3)) < 1e-14);
  // and the inverse maps it back to all-ones
  Tensor imp = Tensor::zeros({2, 2}, Dtype::complex128);
  imp.set_c(0, 2.0);
  CHECK(max_abs_diff(ifft2(imp), ones) < 1e-14);
}

TEST_CASE("fft2 roundtrip and unitarity") {
  Rng rng(7);
  Tensor x8 = random_complex(8, 8, rng);
  CHECK(max_abs_diff(ifft2(fft2(x8)), x8) < 1e-12);
  Tensor x4 = random_complex(4, 4, rng);
  CHECK(max_abs_diff(ifft2(fft2(x4)), x4) < 1e-12);
  Tensor x16 = random_complex(16, 16, rng);
  CHECK(std::abs(l2norm(fft2(x16)) - l2norm(x16)) < 1e-12);
}

TEST_CASE("Parseval and linearity properties") {
  Rng rng(23);
  for (int trial = 0; trial < 40; ++trial) {
    size_t h = 1 + rng.uniform_int(32), w = 1 + rng.uniform_int(32);
    Tensor x = random_complex(h, w, rng);
    double nx = l2norm(x), nf = l2norm(fft2(x));
    CHECK(std::abs(nf * nf - nx * nx) < 1e-10 * std::max(1.0, nx * nx));

    Tensor y = random_complex(h, w, rng);
    cplx a(rng.normal(), rng.normal()), b(rng.normal(), rng.normal());
    Tensor lhs = fft2(add(scale(x, a), scale(y, b)));
    Tensor rhs = add(scale(fft2(x), a), scale(fft2(y), b));
    CHECK(max_abs_diff(lhs, rhs) < 1e-10);
  }
}

TEST_CASE("operations never mutate their inputs") {
  Rng rng(3);
  Tensor x = random_complex(5, 5, rng);
  Tensor copy = x;
  (void)fft2(x);
  (void)add(x, x);
  (void)scale(x, 2.0);
  (void)conj(x);
  (void)abs(x);
  CHECK(x.raw() == copy.raw());
}

TEST_CASE("elementwise and reduction suite") {
  CHECK(l2norm(Tensor::zeros({3, 3})) == 0.0);
  CHECK(mean(Tensor::from({4}, {1, 2, 3, 4})).real() == doctest::Approx(2.5));
  CHECK(sum(Tensor::from({2, 2}, {1, 2, 3, 4})).real() == doctest::Approx(10.0));

  Rng rng(5);
  Tensor x = random_complex(4, 6, rng);
  CHECK(max_abs_diff(crop2d(pad2d(x, 1), 1), x) == 0.0);
  CHECK(max_abs_diff(sub(add(x, x), x), x) < 1e-15);
  CHECK(max_abs_diff(real(conj(x)), real(x)) == 0.0);
  CHECK(max_abs_diff(imag(conj(x)), scale(imag(x), -1.0)) == 0.0);

  Tensor m = abs(x);
  for (size_t i = 0; i < x.numel(); ++i)
    CHECK(m.r(i) == doctest::Approx(std::abs(x.c(i))));

  CHECK_THROWS_AS(add(Tensor::zeros({2, 2}), Tensor::zeros({2, 3})), ShapeError);
  CHECK_THROWS_AS(fft2(Tensor::zeros({2, 2, 2}, Dtype::complex128)), ShapeError);
}

TEST_CASE("concat_channels stacks along the channel axis") {
  Tensor a = Tensor::full({1, 1, 2, 2}, 1.0);
  Tensor b = Tensor::full({1, 2, 2, 2}, 2.0);
  Tensor c = concat_channels(a, b);
  CHECK(c.shape() == std::vector<size_t>{1, 3, 2, 2});
  CHECK(c.at({0, 0, 0, 0}) == 1.0);
  CHECK(c.at({0, 1, 1, 1}) == 2.0);
  CHECK(c.at({0, 2, 0, 1}) == 2.0);
}

TEST_CASE("fftshift2 centres DC and is self-inverse on even extents") {
  Tensor x = Tensor::zeros({4, 6});
  x.at({0, 0}) = 1.0;
  Tensor s = fftshift2(x);
  CHECK(s.at({2, 3}) == 1.0);
  CHECK(max_abs_diff(fftshift2(s), x) == 0.0);
}

TEST_CASE("MBT1 files round-trip bit-exactly") {
  Rng rng(99);
  Tensor real_t = Tensor::randn({3, 5, 2}, rng);
  Tensor cplx_t = random_complex(4, 7, rng);
  save_mbt(real_t, "t_real.mbt");
  save_mbt(cplx_t, "t_cplx.mbt");
  Tensor r2 = load_mbt("t_real.mbt");
  Tensor c2 = load_mbt("t_cplx.mbt");
  CHECK(r2.shape() == real_t.shape());
  CHECK(r2.dtype() == Dtype::real64);
  CHECK(r2.raw() == real_t.raw());
  CHECK(c2.dtype() == Dtype::complex128);
  CHECK(c2.raw() == cplx_t.raw());
}

TEST_CASE("MBC1 container round-trips every entry") {
  Rng rng(1);
  std::map<std::string, Tensor> entries;
  entries.emplace("alpha/w", Tensor::randn({2, 3}, rng));
  entries.emplace("beta/b", Tensor::randn({4}, rng));
  entries.emplace("z", random_complex(2, 2, rng));
  save_mbc(entries, "t_container.mbc");
  auto back = load_mbc("t_container.mbc");
  REQUIRE(back.size() == 3);
  for (const auto& [k, t] : entries) {
    REQUIRE(back.count(k) == 1);
    CHECK(back.at(k).raw() == t.raw());
  }
}

TEST_CASE("mt19937_64 reference sequence pins the generator") {
  // The standard requires the 10000th draw of a default-seeded engine.
  Rng rng(5489u);
  uint64_t v = 0;
  for (int i = 0; i < 10000; ++i) v = rng.next_u64();
  CHECK(v == 9981545732273789042ULL);
}

TEST_CASE("Rng streams are deterministic and independent") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c = Rng(42).derive("x"), d = Rng(42).derive("y"), e = Rng(42).derive("x");
  CHECK(c.next_u64() != d.next_u64());
  Rng f = Rng(42).derive("x");
  CHECK(e.next_u64() == f.next_u64());
  // normals stay inside a plausible range and are reproducible
  Rng g(7), h(7);
  for (int i = 0; i < 1000; ++i) {
    double x = g.normal();
    CHECK(x == h.normal());
    CHECK(std::abs(x) < 10.0);
  }
}
