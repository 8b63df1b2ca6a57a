#include "lcfuse/tensor_io.hpp"

#include <cstring>
#include <fstream>

namespace lcfuse {

namespace {

constexpr char kMagic[4] = {'L', 'C', 'T', 'F'};
constexpr std::uint16_t kVersion = 1;

void put_u16(std::ostream& out, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
  out.write(b, 2);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

std::uint16_t get_u16(std::istream& in) {
  unsigned char b[2];
  in.read(reinterpret_cast<char*>(b), 2);
  if (!in) throw DataError("tensor file: unexpected end of stream");
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw DataError("tensor file: unexpected end of stream");
  return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
         static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

}  // namespace

void save_tensor_file(const TensorFile& tf, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(kMagic, 4);
  put_u16(out, kVersion);
  const std::string meta = tf.meta.dump();
  put_u32(out, static_cast<std::uint32_t>(meta.size()));
  out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
  put_u32(out, static_cast<std::uint32_t>(tf.tensors.size()));
  for (const auto& [name, rec] : tf.tensors) {
    const auto& [dims, data] = rec;
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(out, static_cast<std::uint32_t>(dims.size()));
    for (int d : dims) put_u32(out, static_cast<std::uint32_t>(d));
    for (float f : data) {
      std::uint32_t u;
      std::memcpy(&u, &f, 4);
      put_u32(out, u);
    }
  }
}

TensorFile load_tensor_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw DataError("tensor file: bad magic in " + path.string());
  const std::uint16_t version = get_u16(in);
  if (version != kVersion) throw DataError("tensor file: unsupported version " + std::to_string(version));
  const std::uint32_t meta_len = get_u32(in);
  std::string meta_str(meta_len, '\0');
  in.read(meta_str.data(), meta_len);
  if (!in) throw DataError("tensor file: truncated meta");
  TensorFile tf;
  try {
    tf.meta = nlohmann::json::parse(meta_str);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("tensor file: meta parse: ") + e.what());
  }
  const std::uint32_t n = get_u32(in);
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t name_len = get_u32(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const std::uint32_t ndims = get_u32(in);
    std::vector<int> dims(ndims);
    long total = 1;
    for (auto& d : dims) {
      d = static_cast<int>(get_u32(in));
      total *= d;
    }
    std::vector<float> data(static_cast<std::size_t>(total));
    for (auto& f : data) {
      const std::uint32_t u = get_u32(in);
      std::memcpy(&f, &u, 4);
    }
    if (!in) throw DataError("tensor file: truncated payload for " + name);
    tf.tensors[name] = {std::move(dims), std::move(data)};
  }
  return tf;
}

}  // namespace lcfuse
