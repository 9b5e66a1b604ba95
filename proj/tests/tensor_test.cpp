#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pansharp/rng.hpp"
#include "pansharp/tensor.hpp"
#include "pansharp/tensor_io.hpp"

using namespace pansharp;

TEST_CASE("tensor shape invariants") {
  Tensor t({2, 3, 4}, DType::f32);
  CHECK(t.numel() == 24);
  CHECK(t.rank() == 3);
  CHECK_THROWS_AS(Tensor({2, 0, 4}, DType::f32), ShapeError);
  CHECK_THROWS_AS(Tensor({}, DType::f32), ShapeError);
  CHECK_THROWS_AS(t.data<double>(), ContractError);  // dtype guard
}

TEST_CASE("astype round trips values") {
  Tensor t({5}, DType::f64);
  for (int64_t i = 0; i < 5; ++i) t.set(i, 0.1 * static_cast<double>(i) - 0.2);
  Tensor f = t.astype(DType::f32);
  CHECK(f.dtype() == DType::f32);
  for (int64_t i = 0; i < 5; ++i)
    CHECK(f.at(i) == doctest::Approx(t.at(i)).epsilon(1e-7));
}

namespace {
std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}
}  // namespace

TEST_CASE("tensor file round trip is bitwise (f32)") {
  Rng rng(7);
  Tensor t({3, 4, 2}, DType::f32);
  for (int64_t i = 0; i < t.numel(); ++i) t.set(i, rng.normal());
  const std::string path = temp_path("ps_roundtrip_f32.mst");
  save_tensor(path, t);
  Tensor u = load_tensor(path);
  REQUIRE(u.shape() == t.shape());
  REQUIRE(u.dtype() == DType::f32);
  for (int64_t i = 0; i < t.numel(); ++i)
    CHECK(std::memcmp(t.data<float>() + i, u.data<float>() + i, 4) == 0);
}

TEST_CASE("tensor file round trip preserves all 64 bits (f64)") {
  Rng rng(9);
  Tensor t({2, 5}, DType::f64);
  for (int64_t i = 0; i < t.numel(); ++i) t.set(i, rng.normal() * 1e-7);
  const std::string path = temp_path("ps_roundtrip_f64.mst");
  save_tensor(path, t);
  Tensor u = load_tensor(path);
  for (int64_t i = 0; i < t.numel(); ++i)
    CHECK(std::memcmp(t.data<double>() + i, u.data<double>() + i, 8) == 0);
}

TEST_CASE("tensor file header layout is pinned") {
  Tensor t({2, 3}, DType::f32);
  std::ostringstream os(std::ios::binary);
  write_tensor(os, t);
  const std::string bytes = os.str();
  REQUIRE(bytes.size() == 4 + 1 + 1 + 2 * 8 + 24);
  CHECK(bytes[0] == 0x4D);  // 'M'
  CHECK(bytes[1] == 0x53);  // 'S'
  CHECK(bytes[2] == 0x54);  // 'T'
  CHECK(bytes[3] == 0x31);  // '1'
  CHECK(bytes[4] == 0);     // f32
  CHECK(bytes[5] == 2);     // rank
  CHECK(bytes[6] == 2);     // first extent, little-endian
  CHECK(bytes[14] == 3);
}

TEST_CASE("bad magic names the file") {
  const std::string path = temp_path("ps_badmagic.mst");
  std::ofstream os(path, std::ios::binary);
  os << "NOPE####";
  os.close();
  try {
    load_tensor(path);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find(path) != std::string::npos);
    CHECK(std::string(e.what()).find("magic") != std::string::npos);
  }
}

TEST_CASE("truncated payload is a length error") {
  Tensor t({4, 4}, DType::f32);
  std::ostringstream os(std::ios::binary);
  write_tensor(os, t);
  std::string bytes = os.str();
  bytes.resize(bytes.size() - 5);
  const std::string path = temp_path("ps_trunc.mst");
  std::ofstream of(path, std::ios::binary);
  of.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  of.close();
  CHECK_THROWS_AS(load_tensor(path), FormatError);
}
