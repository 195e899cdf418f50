#include <doctest.h>

#include <cstring>
#include <limits>

#include "ldct/error.hpp"
#include "ldct/image.hpp"
#include "ldct/io/container.hpp"
#include "support.hpp"

using namespace ldct;

TEST_SUITE("nnkit") {

TEST_CASE("container round-trips every dtype bit-exactly") {
  io::Container c;
  const std::vector<float> f{1.5f, -0.0f, std::numeric_limits<float>::denorm_min(), 3.25e7f, 1.0f / 3.0f, 7.0f};
  const std::vector<double> d{std::numeric_limits<double>::max(), -1e-300, 0.1};
  c.add_f32("weights", {2, 3}, f);
  c.add_f64("moments", {3}, d);
  c.add_text("header", "levels = 3\n");
  const auto bytes = c.serialize();
  const auto back = io::Container::parse(bytes);
  CHECK(back == c);
  CHECK(back.at("weights").extents == std::vector<std::uint64_t>{2, 3});
  const auto f2 = back.at("weights").as_f32();
  CHECK(std::memcmp(f2.data(), f.data(), f.size() * sizeof(float)) == 0);
  CHECK(back.at("moments").as_f64() == d);
  CHECK(back.at("header").as_text() == "levels = 3\n");
  CHECK(std::memcmp(bytes.data(), "LDCT", 4) == 0);
}

TEST_CASE("container rejects malformed input") {
  io::Container c;
  c.add_f32("x", {2}, std::vector<float>{1.0f, 2.0f});
  auto bytes = c.serialize();

  auto bad_magic = bytes;
  bad_magic[0] = std::byte{'X'};
  CHECK_THROWS_AS(io::Container::parse(bad_magic), Error);

  auto truncated = bytes;
  truncated.pop_back();
  CHECK_THROWS_AS(io::Container::parse(truncated), Error);

  auto trailing = bytes;
  trailing.push_back(std::byte{0});
  CHECK_THROWS_AS(io::Container::parse(trailing), Error);

  CHECK_THROWS_AS(c.add_f32("x", {1}, std::vector<float>{0.0f}), Error);
  CHECK_THROWS_AS(c.add_f32("y", {3}, std::vector<float>{0.0f}), Error);
}

TEST_CASE("images survive the file container") {
  const auto dir = testing::scratch_dir("container");
  Image2D img(3, 4, 0.2);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = 0.1 * static_cast<double>(i) - 0.3;
  const Image2D f32 = quantize_f32(img);
  save_image(dir / "a.ldct", f32);
  CHECK(load_image(dir / "a.ldct") == f32);
  save_image(dir / "b.ldct", img, io::DType::f64);
  CHECK(load_image(dir / "b.ldct") == img);
  try {
    load_image(dir / "missing.ldct");
    FAIL("expected an io error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::io);
    CHECK(std::string(e.what()).find("missing.ldct") != std::string::npos);
  }
}

}  // TEST_SUITE
