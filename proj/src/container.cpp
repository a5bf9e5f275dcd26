#include "geoinv/container.hpp"

#include <cstdio>
#include <cstring>
#include <memory>
#include <set>

#include "geoinv/tensor.hpp"

namespace geoinv {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FileP = std::unique_ptr<std::FILE, FileCloser>;

void put_bytes(std::FILE* f, const void* p, size_t n) {
  if (std::fwrite(p, 1, n, f) != n) fail("sgtn: short write");
}

template <typename T>
void put_le(std::FILE* f, T v) {
  unsigned char b[sizeof(T)];
  for (size_t i = 0; i < sizeof(T); ++i) b[i] = (unsigned char)((uint64_t(v) >> (8 * i)) & 0xff);
  put_bytes(f, b, sizeof(T));
}

void get_bytes(std::FILE* f, void* p, size_t n, const char* what) {
  if (std::fread(p, 1, n, f) != n)
    fail("sgtn: truncated file while reading " + std::string(what) +
         " at offset " + std::to_string(std::ftell(f)));
}

template <typename T>
T get_le(std::FILE* f, const char* what) {
  unsigned char b[sizeof(T)];
  get_bytes(f, b, sizeof(T), what);
  uint64_t v = 0;
  for (size_t i = 0; i < sizeof(T); ++i) v |= uint64_t(b[i]) << (8 * i);
  return T(v);
}

}  // namespace

void save_tensors(const std::string& path, const std::vector<NamedTensor>& tensors) {
  std::set<std::string> names;
  for (const auto& t : tensors) {
    check(names.insert(t.name).second, "sgtn: duplicate tensor name '" + t.name + "'");
    check(t.name.size() <= 0xffff, "sgtn: tensor name too long");
    int64_t n = 1;
    for (int64_t d : t.dims) n *= d;
    check(n == int64_t(t.data.size()),
          "sgtn: payload length mismatch for '" + t.name + "'");
  }
  FileP f(std::fopen(path.c_str(), "wb"));
  check(f != nullptr, "sgtn: cannot open '" + path + "' for writing");
  put_bytes(f.get(), "SGTN", 4);
  put_le<uint32_t>(f.get(), 1);
  put_le<uint32_t>(f.get(), uint32_t(tensors.size()));
  for (const auto& t : tensors) {
    put_le<uint16_t>(f.get(), uint16_t(t.name.size()));
    put_bytes(f.get(), t.name.data(), t.name.size());
    put_le<uint8_t>(f.get(), 0);  // f32
    put_le<uint8_t>(f.get(), uint8_t(t.dims.size()));
    for (int64_t d : t.dims) put_le<uint64_t>(f.get(), uint64_t(d));
    // payload: f32 little-endian; write via per-value encode to stay
    // byte-exact on any host
    for (float v : t.data) {
      uint32_t u;
      std::memcpy(&u, &v, 4);
      put_le<uint32_t>(f.get(), u);
    }
  }
  check(std::fflush(f.get()) == 0, "sgtn: flush failed for '" + path + "'");
}

std::vector<NamedTensor> load_tensors(const std::string& path) {
  FileP f(std::fopen(path.c_str(), "rb"));
  check(f != nullptr, "sgtn: cannot open '" + path + "'");
  char magic[4];
  get_bytes(f.get(), magic, 4, "magic");
  check(std::memcmp(magic, "SGTN", 4) == 0,
        "sgtn: bad magic at offset 0 in '" + path + "'");
  const uint32_t version = get_le<uint32_t>(f.get(), "version");
  check(version == 1, "sgtn: unsupported version " + std::to_string(version) +
                          " at offset 4");
  const uint32_t count = get_le<uint32_t>(f.get(), "count");
  std::vector<NamedTensor> out;
  out.reserve(count);
  std::set<std::string> names;
  for (uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    const uint16_t nlen = get_le<uint16_t>(f.get(), "name length");
    t.name.resize(nlen);
    get_bytes(f.get(), t.name.data(), nlen, "name");
    check(names.insert(t.name).second,
          "sgtn: duplicate tensor name '" + t.name + "' in file");
    const uint8_t dtype = get_le<uint8_t>(f.get(), "dtype");
    check(dtype == 0, "sgtn: unsupported dtype code " + std::to_string(dtype));
    const uint8_t nd = get_le<uint8_t>(f.get(), "ndims");
    int64_t n = 1;
    for (uint8_t d = 0; d < nd; ++d) {
      t.dims.push_back(int64_t(get_le<uint64_t>(f.get(), "dims")));
      n *= t.dims.back();
    }
    check(n >= 0, "sgtn: invalid dims");
    t.data.resize(size_t(n));
    for (int64_t j = 0; j < n; ++j) {
      const uint32_t u = get_le<uint32_t>(f.get(), "payload");
      float v;
      std::memcpy(&v, &u, 4);
      t.data[size_t(j)] = v;
    }
    out.push_back(std::move(t));
  }
  return out;
}

const NamedTensor* find_tensor(const std::vector<NamedTensor>& ts, const std::string& name) {
  for (const auto& t : ts)
    if (t.name == name) return &t;
  return nullptr;
}

const NamedTensor& require_tensor(const std::vector<NamedTensor>& ts, const std::string& name) {
  const NamedTensor* t = find_tensor(ts, name);
  check(t != nullptr, "sgtn: missing tensor '" + name + "'");
  return *t;
}

}  // namespace geoinv
