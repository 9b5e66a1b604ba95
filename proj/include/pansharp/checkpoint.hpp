#pragma once

#include <string>

#include "pansharp/unfold.hpp"

namespace pansharp {

// Checkpoint file, magic "MSC1":
//   4 bytes magic | u32 LE header length | header text (key=value lines with
//   the UnfoldConfig and init recipe) | u32 LE entry count | entries, each
//   u32 LE name length + UTF-8 name + an MST1 tensor record.

void save_model(const std::string& path, const ModelParams& params);
ModelParams load_model(const std::string& path);

}  // namespace pansharp
