// Copyright 2026 The p2be Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "p2be/encoders.hpp"
#include "p2be/error.hpp"
#include "p2be/log.hpp"
#include "test_util.hpp"

using namespace p2be;
using namespace p2be::encoders;
using p2be::testing::random_image;
using p2be::testing::random_table;

namespace {

Code bits(const char* s) {
  Code c;
  for (; *s; ++s) c.push_back(std::uint8_t(*s - '0'));
  return c;
}

}  // namespace

TEST_CASE("one-hot codes at M=10") {
  CHECK(encode_one_hot(8, 10) == bits("1000000000"));
  CHECK(encode_one_hot(122, 10) == bits("0000100000"));
  CHECK(encode_one_hot(235, 10) == bits("0000000001"));
  CHECK(encode_one_hot(255, 10) == bits("0000000001"));
  CHECK(encode_one_hot(0, 10) == bits("1000000000"));
}

TEST_CASE("thermometer codes at M=10") {
  CHECK(encode_thermometer(8, 10) == bits("1111111111"));
  CHECK(encode_thermometer(122, 10) == bits("0000111111"));
  CHECK(encode_thermometer(235, 10) == bits("0000000001"));
  CHECK(encode_thermometer(255, 10) == bits("0000000001"));
}

TEST_CASE("one-hot bucket follows the half-open interval rule") {
  // Bit i (1-based) is set iff (i-1)/M <= x/255 < i/M, so bucket b satisfies
  // b*255 <= x*M < (b+1)*255.
  for (std::size_t m : {1u, 2u, 3u, 7u, 10u, 64u, 255u, 256u}) {
    for (int x = 0; x < 255; ++x) {
      const auto b = one_hot_bucket(std::uint8_t(x), m);
      CHECK(b * 255 <= std::size_t(x) * m);
      CHECK(std::size_t(x) * m < (b + 1) * 255);
    }
    CHECK(one_hot_bucket(255, m) == m - 1);
  }
}

TEST_CASE("bucket magnitude ranges partition the pixel values") {
  for (std::size_t m : {1u, 5u, 10u, 16u, 200u}) {
    std::size_t next = 0;
    for (std::size_t b = 0; b < m; ++b) {
      const auto r = bucket_magnitudes(b, m);
      if (r.lo > r.hi) continue;  // empty bucket
      CHECK(r.lo == next);
      for (std::size_t x = r.lo; x <= r.hi; ++x) CHECK(one_hot_bucket(std::uint8_t(x), m) == b);
      next = r.hi + 1;
    }
    CHECK(next == 256);
  }
}

TEST_CASE("binarize_table uses sign with sign(0) = +1") {
  std::vector<float> w(kLevels * 3, -1.0f);
  w[0] = -0.3f;
  w[1] = 0.0f;
  w[2] = 2.1f;
  const auto e = binarize_table(EmbeddingTable(3, w));
  CHECK(e.at(0, 0) == 0);
  CHECK(e.at(0, 1) == 1);
  CHECK(e.at(0, 2) == 1);
  for (std::size_t m = 0; m < 3; ++m) CHECK(e.at(1, m) == 0);
}

TEST_CASE("normal table binarizes to about half ones") {
  std::mt19937_64 rng(2026);
  const auto e = binarize_table(EmbeddingTable::random_normal(64, rng));
  std::size_t ones = 0;
  for (auto b : e.bits()) ones += b;
  const double frac = double(ones) / double(kLevels * 64);
  CHECK(frac >= 0.45);
  CHECK(frac <= 0.55);
}

TEST_CASE("embedding table rejects bad input") {
  CHECK_THROWS_AS(EmbeddingTable(4, std::vector<float>(10)), ShapeError);
  std::vector<float> w(kLevels * 2, 0.0f);
  w[5] = INFINITY;
  CHECK_THROWS_AS(EmbeddingTable(2, w), NumericError);
  CHECK_THROWS_AS(BinaryCodebook(2, std::vector<std::uint8_t>(kLevels * 2, 2)), std::invalid_argument);
}

TEST_CASE("embed_image lays out channel blocks") {
  PixelImage im(1, 1, 0);
  const auto t = embed_image(im, BinaryCodebook::one_hot(4));
  CHECK(t.shape() == numgraph::Shape{12, 1, 1});
  const std::vector<float> want = {1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0};
  CHECK(std::vector<float>(t.data().begin(), t.data().end()) == want);
}

TEST_CASE("constant image embeds identically at every location") {
  std::mt19937_64 rng(3);
  const auto cb = binarize_table(random_table(8, rng));
  PixelImage im(3, 4, 0);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < im.plane(); ++i) im.values()[c * im.plane() + i] = std::uint8_t(40 + 70 * c);
  const auto t = embed_image(im, cb);
  for (std::size_t ch = 0; ch < 24; ++ch)
    for (std::size_t i = 1; i < 12; ++i) CHECK(t[ch * 12 + i] == t[ch * 12]);
}

TEST_CASE("bit planes decode back to the per-pixel codes") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto im = random_image(3, 5, rng);
    for (const auto& cb : {BinaryCodebook::one_hot(7), BinaryCodebook::thermometer(7),
                           binarize_table(random_table(7, rng))}) {
      const auto t = embed_image(im, cb);
      for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t y = 0; y < 3; ++y)
          for (std::size_t x = 0; x < 5; ++x)
            for (std::size_t m = 0; m < 7; ++m)
              CHECK(t[((7 * c + m) * 3 + y) * 5 + x] == float(cb.at(im.at(c, y, x), m)));
    }
  }
}

TEST_CASE("approximate sign derivative values") {
  CHECK(approx_sign_derivative(0.0) == 2.0);
  CHECK(approx_sign_derivative(0.5) == 1.0);
  CHECK(approx_sign_derivative(-0.5) == 1.0);
  CHECK(approx_sign_derivative(1.5) == 0.0);
  CHECK(approx_sign_derivative(-1.5) == 0.0);
  CHECK(approx_sign(-1.0) == -1.0);
  CHECK(approx_sign(0.0) == 0.0);
  CHECK(approx_sign(1.0) == 1.0);
}

TEST_CASE("p2be backward special cases") {
  std::mt19937_64 rng(5);
  const std::size_t dim = 4;
  auto table = random_table(dim, rng, 0.4);
  PixelImage im(1, 1, 0);
  im.values()[0] = im.values()[1] = im.values()[2] = 77;

  const auto zero = p2be_backward(im, numgraph::Tensor({3 * dim, 1, 1}), table);
  for (float v : zero.data()) CHECK(v == 0.0f);

  // One occurrence of magnitude 77 per channel, upstream ones: each channel
  // contributes 0.5 * (2 - 2|w|).
  std::vector<float> w(table.weights().begin(), table.weights().end());
  w[77 * dim + 0] = 0.25f;
  w[77 * dim + 1] = -0.5f;
  w[77 * dim + 2] = 1.0f;
  w[77 * dim + 3] = -3.0f;
  table = EmbeddingTable(dim, w);
  const auto g = p2be_backward(im, numgraph::Tensor({3 * dim, 1, 1}, 1.0f), table);
  CHECK(g[77 * dim + 0] == doctest::Approx(3 * 0.5 * (2 - 2 * 0.25)));
  CHECK(g[77 * dim + 1] == doctest::Approx(3 * 0.5 * (2 - 2 * 0.5)));
  CHECK(g[77 * dim + 2] == 0.0f);
  CHECK(g[77 * dim + 3] == 0.0f);
  for (std::size_t k = 0; k < kLevels; ++k)
    if (k != 77)
      for (std::size_t m = 0; m < dim; ++m) CHECK(g[k * dim + m] == 0.0f);
}

TEST_CASE("p2be backward rejects a mismatched upstream") {
  std::mt19937_64 rng(6);
  const auto table = random_table(3, rng);
  CHECK_THROWS_AS(p2be_backward(PixelImage(2, 2), numgraph::Tensor({8, 2, 2}), table), ShapeError);
}

TEST_CASE("equal magnitudes share gradient under position permutation") {
  std::mt19937_64 rng(7);
  const std::size_t dim = 5;
  const auto table = random_table(dim, rng, 0.5);
  PixelImage a(2, 2, 0);
  PixelImage b(2, 2, 0);
  // Channel 0 holds magnitudes {10, 10, 200, 10} vs a permutation of them.
  const std::uint8_t va[4] = {10, 10, 200, 10}, vb[4] = {10, 200, 10, 10};
  for (int i = 0; i < 4; ++i) {
    a.values()[std::size_t(i)] = va[i];
    b.values()[std::size_t(i)] = vb[i];
  }
  // Upstream identical across positions so only magnitude positions move.
  numgraph::Tensor up({3 * dim, 2, 2});
  for (std::size_t ch = 0; ch < 3 * dim; ++ch)
    for (std::size_t i = 0; i < 4; ++i) up[ch * 4 + i] = float(ch) * 0.1f - 0.4f;
  CHECK(p2be_backward(a, up, table) == p2be_backward(b, up, table));
}

TEST_CASE("cosine similarity of hand-coded codebooks") {
  const auto id = cosine_similarity_matrix(BinaryCodebook::one_hot(256));
  for (std::size_t i = 0; i < 256; ++i)
    for (std::size_t j = 0; j < 256; ++j) CHECK(id.at(i, j) == (i == j ? 1.0 : 0.0));

  const auto th = cosine_similarity_matrix(BinaryCodebook::thermometer(10));
  CHECK(th.at(122, 235) == doctest::Approx(1.0 / std::sqrt(6.0)).epsilon(1e-12));

  BinaryCodebook same(3, std::vector<std::uint8_t>(kLevels * 3, 1));
  for (double v : cosine_similarity_matrix(same).values) CHECK(v == doctest::Approx(1.0));
}

TEST_CASE("random p2be similarity matrix is exactly symmetric with a unit diagonal") {
  std::mt19937_64 rng(8);
  const auto cb = binarize_table(random_table(32, rng));
  const auto s = cosine_similarity_matrix(cb);
  for (std::size_t i = 0; i < 256; ++i) {
    if (s.zero_rows.empty()) CHECK(s.at(i, i) == doctest::Approx(1.0).epsilon(1e-15));
    for (std::size_t j = 0; j < i; ++j) CHECK(s.at(i, j) == s.at(j, i));
  }
}

TEST_CASE("zero code rows become zero with a warning") {
  std::vector<float> w(kLevels * 2, 1.0f);
  w[2 * 9] = w[2 * 9 + 1] = -1.0f;  // magnitude 9 binarizes to 00
  std::vector<std::string> warnings;
  auto prev = log::set_warning_sink([&](std::string_view m) { warnings.emplace_back(m); });
  const auto s = cosine_similarity_matrix(binarize_table(EmbeddingTable(2, w)));
  log::set_warning_sink(prev);
  CHECK(warnings.size() == 1);
  CHECK(s.zero_rows == std::vector<std::size_t>{9});
  for (std::size_t j = 0; j < 256; ++j) {
    CHECK(s.at(9, j) == 0.0);
    CHECK(s.at(j, 9) == 0.0);
    CHECK(std::isfinite(s.at(j, j)));
  }
}

TEST_CASE("similarity exports") {
  const auto s = cosine_similarity_matrix(BinaryCodebook::thermometer(64));
  std::ostringstream pgm;
  write_similarity_pgm(pgm, s);
  const std::string bytes = pgm.str();
  const std::string header = "P5\n256 256\n255\n";
  REQUIRE(bytes.size() == header.size() + 256 * 256);
  CHECK(bytes.substr(0, header.size()) == header);
  for (std::size_t i = 0; i < 256; ++i) CHECK(std::uint8_t(bytes[header.size() + i * 256 + i]) == 255);

  std::ostringstream csv;
  write_similarity_csv(csv, s);
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("magnitude,s0,s1,", 0) == 0);
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 256);
}

TEST_CASE("encoder names round trip") {
  for (auto k : {EncoderKind::rgb, EncoderKind::one_hot, EncoderKind::thermometer, EncoderKind::p2be})
    CHECK(parse_encoder(to_string(k)) == k);
  CHECK_THROWS_AS(parse_encoder("onehot"), ConfigError);
}
