#include "pansharp/checkpoint.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "pansharp/tensor_io.hpp"

namespace pansharp {

namespace {

constexpr unsigned char kMagic[4] = {0x4D, 0x53, 0x43, 0x31};  // "MSC1"

void put_u32le(std::ostream& os, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32le(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
  return v;
}

std::string header_text(const ModelParams& mp) {
  char eps[64];
  std::snprintf(eps, sizeof(eps), "%.17g", mp.cfg.lgt.ln_eps);
  std::ostringstream os;
  os << "stages=" << mp.cfg.stages << "\n"
     << "bands=" << mp.cfg.bands << "\n"
     << "scale=" << mp.cfg.scale << "\n"
     << "channels=" << mp.cfg.lgt.channels << "\n"
     << "window=" << mp.cfg.lgt.window << "\n"
     << "heads=" << mp.cfg.lgt.heads << "\n"
     << "enc_blocks=" << mp.cfg.lgt.encoder_blocks << "\n"
     << "bneck_blocks=" << mp.cfg.lgt.bottleneck_blocks << "\n"
     << "dec_blocks=" << mp.cfg.lgt.decoder_blocks << "\n"
     << "ln_eps=" << eps << "\n"
     << "dtype=" << dtype_name(mp.dtype) << "\n"
     << "init=" << mp.init_recipe << "\n";
  return os.str();
}

void parse_header(const std::string& text, ModelParams& mp, const std::string& path) {
  std::istringstream is(text);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto need = [&](const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw FormatError(path + ": checkpoint header missing " + key);
    return it->second;
  };
  mp.cfg.stages = std::stoi(need("stages"));
  mp.cfg.bands = std::stoi(need("bands"));
  mp.cfg.scale = std::stoi(need("scale"));
  mp.cfg.lgt.channels = std::stoi(need("channels"));
  mp.cfg.lgt.window = std::stoi(need("window"));
  mp.cfg.lgt.heads = std::stoi(need("heads"));
  mp.cfg.lgt.encoder_blocks = std::stoi(need("enc_blocks"));
  mp.cfg.lgt.bottleneck_blocks = std::stoi(need("bneck_blocks"));
  mp.cfg.lgt.decoder_blocks = std::stoi(need("dec_blocks"));
  mp.cfg.lgt.ln_eps = std::stod(need("ln_eps"));
  mp.dtype = need("dtype") == "f64" ? DType::f64 : DType::f32;
  mp.init_recipe = need("init");
}

}  // namespace

void save_model(const std::string& path, const ModelParams& mp) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError(path + ": cannot open for writing");
  os.write(reinterpret_cast<const char*>(kMagic), 4);
  const std::string header = header_text(mp);
  put_u32le(os, static_cast<uint32_t>(header.size()));
  os.write(header.data(), static_cast<std::streamsize>(header.size()));
  put_u32le(os, static_cast<uint32_t>(mp.tensors.size()));
  for (const auto& [name, t] : mp.tensors) {  // std::map: sorted, deterministic
    put_u32le(os, static_cast<uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_tensor(os, t);
  }
  if (!os) throw FormatError(path + ": write failed");
}

ModelParams load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError(path + ": cannot open");
  unsigned char magic[4];
  is.read(reinterpret_cast<char*>(magic), 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError(path + ": bad magic, not an MSC1 checkpoint");
  const uint32_t header_len = get_u32le(is);
  std::string header(header_len, '\0');
  is.read(header.data(), header_len);
  if (!is) throw FormatError(path + ": truncated header");
  ModelParams mp;
  parse_header(header, mp, path);
  const uint32_t count = get_u32le(is);
  for (uint32_t i = 0; i < count; ++i) {
    const uint32_t name_len = get_u32le(is);
    if (!is || name_len > 4096) throw FormatError(path + ": bad entry name length");
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    mp.tensors[name] = read_tensor(is, path + ":" + name);
  }
  return mp;
}

}  // namespace pansharp
