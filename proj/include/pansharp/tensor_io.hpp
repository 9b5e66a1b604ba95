#pragma once

#include <iosfwd>
#include <string>

#include "pansharp/tensor.hpp"

namespace pansharp {

// Binary tensor file, magic "MST1":
//   4 bytes magic | u8 dtype (0=f32, 1=f64) | u8 rank | rank x u64 LE extents |
//   row-major payload, little-endian scalars.

void write_tensor(std::ostream& os, const Tensor& t);
Tensor read_tensor(std::istream& is, const std::string& name_for_errors);

void save_tensor(const std::string& path, const Tensor& t);
Tensor load_tensor(const std::string& path);

}  // namespace pansharp
