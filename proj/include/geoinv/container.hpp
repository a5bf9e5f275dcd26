#pragma once
#include <cstdint>
#include <string>
#include <vector>

namespace geoinv {

// Named f32 tensor for the SGTN container files.
struct NamedTensor {
  std::string name;
  std::vector<int64_t> dims;
  std::vector<float> data;
};

// Binary layout (all integers little-endian):
//   magic "SGTN" | u32 version=1 | u32 tensor count
//   per tensor: u16 name length | name bytes | u8 dtype (0 = f32) |
//               u8 ndims | u64 dims... | row-major f32 payload
void save_tensors(const std::string& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_tensors(const std::string& path);

// Helpers for checkpoint-style access.
const NamedTensor* find_tensor(const std::vector<NamedTensor>& ts, const std::string& name);
const NamedTensor& require_tensor(const std::vector<NamedTensor>& ts, const std::string& name);

}  // namespace geoinv
