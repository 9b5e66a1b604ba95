#include "pansharp/tensor_io.hpp"

#include <cstring>
#include <fstream>

namespace pansharp {

namespace {
constexpr unsigned char kMagic[4] = {0x4D, 0x53, 0x54, 0x31};  // "MST1"

void put_u64le(std::ostream& os, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

uint64_t get_u64le(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}
}  // namespace

void write_tensor(std::ostream& os, const Tensor& t) {
  os.write(reinterpret_cast<const char*>(kMagic), 4);
  const unsigned char dt = static_cast<unsigned char>(t.dtype());
  const unsigned char rank = static_cast<unsigned char>(t.rank());
  os.put(static_cast<char>(dt));
  os.put(static_cast<char>(rank));
  for (int i = 0; i < t.rank(); ++i) put_u64le(os, static_cast<uint64_t>(t.dim(i)));
  // x86 hosts are little-endian; scalars go out as stored.
  dispatch_dtype(t.dtype(), [&](auto tag) {
    using T = decltype(tag);
    os.write(reinterpret_cast<const char*>(t.data<T>()),
             static_cast<std::streamsize>(t.numel() * static_cast<int64_t>(sizeof(T))));
  });
}

Tensor read_tensor(std::istream& is, const std::string& name) {
  unsigned char magic[4];
  is.read(reinterpret_cast<char*>(magic), 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError(name + ": bad magic, not an MST1 tensor file");
  const int dt_byte = is.get();
  const int rank = is.get();
  if (dt_byte != 0 && dt_byte != 1) throw FormatError(name + ": unknown dtype byte");
  if (rank < 1 || !is) throw FormatError(name + ": bad rank");
  std::vector<int64_t> shape(static_cast<size_t>(rank));
  for (auto& e : shape) {
    e = static_cast<int64_t>(get_u64le(is));
    if (!is || e < 1) throw FormatError(name + ": bad extent");
  }
  Tensor t(shape, dt_byte == 0 ? DType::f32 : DType::f64);
  const std::streamsize want =
      static_cast<std::streamsize>(t.numel() * dtype_size(t.dtype()));
  dispatch_dtype(t.dtype(), [&](auto tag) {
    using T = decltype(tag);
    is.read(reinterpret_cast<char*>(t.data<T>()), want);
  });
  if (is.gcount() != want)
    throw FormatError(name + ": truncated payload, expected " + std::to_string(want) + " bytes");
  return t;
}

void save_tensor(const std::string& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError(path + ": cannot open for writing");
  write_tensor(os, t);
  if (!os) throw FormatError(path + ": write failed");
}

Tensor load_tensor(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError(path + ": cannot open");
  return read_tensor(is, path);
}

}  // namespace pansharp
