#include <doctest.h>

#include "cinerecon/core/fft.hpp"
#include "cinerecon/core/operators.hpp"
#include "test_util.hpp"

using namespace cinerecon;

namespace {

SamplingMask all_ones_mask(int width) {
  SamplingMask m = make_mask(width, 1, 0, 0, /*allow_nonstandard=*/true);
  return m;  // stride 1 samples every line
}

// dense matrix form of E = M F on a single frame, the brute-force oracle
std::vector<cxd> forward_matrix_apply(const std::vector<cxd>& img, int h, int w,
                                      const SamplingMask& mask) {
  auto k = testutil::dft2c_direct(img, h, w, false);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.sampled(x)) k[static_cast<size_t>(y) * w + x] = cxd(0.0, 0.0);
    }
  }
  return k;
}

std::vector<cxd> adjoint_matrix_apply(const std::vector<cxd>& ksp, int h, int w,
                                      const SamplingMask& mask) {
  std::vector<cxd> masked = ksp;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.sampled(x)) masked[static_cast<size_t>(y) * w + x] = cxd(0.0, 0.0);
    }
  }
  return testutil::dft2c_direct(masked, h, w, true);
}

}  // namespace

TEST_CASE("forward operator with an all-ones mask is exactly the per-frame fft2c") {
  std::mt19937_64 rng(3);
  CineSlice s;
  s.data = testutil::random_carray(3, 8, 8, rng);
  KSpaceData y = forward_operator(s, all_ones_mask(8));
  CArray k = fft2c(s.data);
  for (size_t i = 0; i < k.size(); ++i) CHECK(y.data.data()[i] == k.data()[i]);
}

TEST_CASE("zero image maps to zero k-space under any mask") {
  CineSlice s;
  s.data = CArray(2, 8, 8);
  KSpaceData y = forward_operator(s, make_mask(8, 4, 2, 1));
  for (size_t i = 0; i < y.data.size(); ++i) CHECK(std::abs(y.data.data()[i]) == 0.0);
}

TEST_CASE("unsampled lines are exactly zero") {
  std::mt19937_64 rng(5);
  CineSlice s;
  s.data = testutil::random_carray(2, 16, 16, rng);
  SamplingMask m = make_mask(16, 4, 2, 9);
  KSpaceData y = forward_operator(s, m);
  for (int f = 0; f < 2; ++f) {
    for (int yy = 0; yy < 16; ++yy) {
      for (int xx = 0; xx < 16; ++xx) {
        if (!m.sampled(xx)) CHECK(std::abs(y.data.at(f, yy, xx)) == 0.0);
      }
    }
  }
}

TEST_CASE("adjoint identity <Ex, y> = <x, E^H y> on random inputs") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    CineSlice x;
    x.data = testutil::random_carray(2, 8, 8, rng);
    SamplingMask m = make_mask(8, trial % 2 ? 4 : 8, 1, trial);
    KSpaceData y;
    y.data = testutil::random_carray(2, 8, 8, rng);
    y.mask = m;

    cxd lhs = testutil::inner(y.data, forward_operator(x, m).data);
    cxd rhs = testutil::inner(adjoint_operator(y).data, x.data);
    // adjoint k-space carries the mask; inner products must agree
    CHECK(std::abs(lhs - rhs) / (std::abs(lhs) + 1e-12) < 1e-6);
  }
}

TEST_CASE("forward and adjoint match the dense matrix oracle on 8x8") {
  std::mt19937_64 rng(11);
  SamplingMask m = make_mask(8, 4, 2, 2);

  CineSlice x;
  x.data = testutil::random_carray(1, 8, 8, rng);
  std::vector<cxd> xi(x.data.data(), x.data.data() + x.data.size());
  auto oracle_fwd = forward_matrix_apply(xi, 8, 8, m);
  KSpaceData y = forward_operator(x, m);
  for (size_t i = 0; i < oracle_fwd.size(); ++i) {
    CHECK(std::abs(y.data.data()[i] - oracle_fwd[i]) < 1e-9);
  }

  auto oracle_adj = adjoint_matrix_apply(oracle_fwd, 8, 8, m);
  CineSlice back = adjoint_operator(y);
  for (size_t i = 0; i < oracle_adj.size(); ++i) {
    CHECK(std::abs(back.data.data()[i] - oracle_adj[i]) < 1e-9);
  }
}

TEST_CASE("adjoint of forward on a constant image preserves the mean when DC is sampled") {
  CineSlice x;
  x.data = CArray(1, 8, 8);
  for (size_t i = 0; i < x.data.size(); ++i) x.data.data()[i] = cxd(0.7, 0.0);
  SamplingMask m = make_mask(8, 4, 2, 0);  // center block keeps the DC column
  CineSlice back = adjoint_operator(forward_operator(x, m));
  cxd mean(0.0, 0.0);
  for (size_t i = 0; i < back.data.size(); ++i) mean += back.data.data()[i];
  mean /= static_cast<double>(back.data.size());
  // constant image has all energy in the DC column; E^H E reproduces it
  CHECK(std::abs(mean - cxd(0.7, 0.0)) < 1e-9);
}

TEST_CASE("E E^H y = M y by mask idempotence") {
  std::mt19937_64 rng(13);
  SamplingMask m = make_mask(8, 8, 1, 4);
  KSpaceData y;
  y.data = testutil::random_carray(2, 8, 8, rng);
  y.mask = m;
  KSpaceData round = forward_operator(adjoint_operator(y), m);
  for (int f = 0; f < 2; ++f) {
    for (int yy = 0; yy < 8; ++yy) {
      for (int xx = 0; xx < 8; ++xx) {
        const cxd expect = m.sampled(xx) ? y.data.at(f, yy, xx) : cxd(0.0, 0.0);
        CHECK(std::abs(round.data.at(f, yy, xx) - expect) < 1e-6);
      }
    }
  }
}

TEST_CASE("fully sampled adjoint recovers the image") {
  std::mt19937_64 rng(17);
  CineSlice x;
  x.data = testutil::random_carray(2, 8, 8, rng);
  KSpaceData y = forward_operator(x);
  CHECK(y.fully_sampled());
  CineSlice back = adjoint_operator(y);
  for (size_t i = 0; i < x.data.size(); ++i) {
    CHECK(std::abs(back.data.data()[i] - x.data.data()[i]) < 1e-6);
  }
}

TEST_CASE("forward operator rejects mask/shape mismatch") {
  CineSlice x;
  x.data = CArray(1, 8, 8);
  CHECK_THROWS_AS(forward_operator(x, make_mask(16, 4, 2, 0)), Error);
}

TEST_CASE("zero_pad 204x448 to 256x512 puts 26/32 zeros around the content") {
  CineSlice s;
  s.data = CArray(1, 204, 448);
  for (int y = 0; y < 204; ++y) {
    for (int x = 0; x < 448; ++x) s.data.at(0, y, x) = cxd(1.0, -0.5);
  }
  CineSlice padded = zero_pad(s, 256, 512);
  CHECK(padded.h() == 256);
  CHECK(padded.w() == 512);
  CHECK(padded.padded);
  REQUIRE(padded.original_size.has_value());
  CHECK(padded.original_size->first == 204);
  CHECK(padded.original_size->second == 448);
  auto [top, left] = pad_offsets(204, 448, 256, 512);
  CHECK(top == 26);
  CHECK(left == 32);
  for (int y = 0; y < 256; ++y) {
    for (int x = 0; x < 512; ++x) {
      const bool inside = y >= 26 && y < 26 + 204 && x >= 32 && x < 32 + 448;
      if (inside) {
        CHECK(padded.data.at(0, y, x) == cxd(1.0, -0.5));
      } else {
        CHECK(std::abs(padded.data.at(0, y, x)) == 0.0);
      }
    }
  }
}

TEST_CASE("zero_pad at the target size is the identity") {
  std::mt19937_64 rng(19);
  CineSlice s;
  s.data = testutil::random_carray(1, 256, 512, rng);
  CineSlice padded = zero_pad(s, 256, 512);
  for (size_t i = 0; i < s.data.size(); ++i) {
    CHECK(padded.data.data()[i] == s.data.data()[i]);
  }
  CHECK(padded.padded);
}

TEST_CASE("center_crop inverts zero_pad exactly") {
  std::mt19937_64 rng(23);
  CineSlice s;
  s.data = testutil::random_carray(2, 30, 46, rng);
  CineSlice padded = zero_pad(s, 48, 64);
  CineSlice back = center_crop(padded, 30, 46);
  for (size_t i = 0; i < s.data.size(); ++i) {
    CHECK(back.data.data()[i] == s.data.data()[i]);
  }
  CHECK_FALSE(back.padded);
}

TEST_CASE("center_crop returns a sentinel corner pattern unshifted") {
  CineSlice s;
  s.data = CArray(1, 10, 12);
  s.data.at(0, 0, 0) = cxd(1.0, 0.0);
  s.data.at(0, 0, 11) = cxd(2.0, 0.0);
  s.data.at(0, 9, 0) = cxd(3.0, 0.0);
  s.data.at(0, 9, 11) = cxd(4.0, 0.0);
  CineSlice out = center_crop(zero_pad(s, 32, 40), 10, 12);
  CHECK(out.data.at(0, 0, 0) == cxd(1.0, 0.0));
  CHECK(out.data.at(0, 0, 11) == cxd(2.0, 0.0));
  CHECK(out.data.at(0, 9, 0) == cxd(3.0, 0.0));
  CHECK(out.data.at(0, 9, 11) == cxd(4.0, 0.0));
}

TEST_CASE("zero_pad rejects inputs larger than the target") {
  CineSlice s;
  s.data = CArray(1, 300, 520);
  CHECK_THROWS_AS(zero_pad(s, 256, 512), Error);
}
