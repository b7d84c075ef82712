#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mpq {

int64_t shape_numel(const std::vector<int64_t>& shape);
std::string shape_to_string(const std::vector<int64_t>& shape);

// Dense row-major float32 tensor. Treated as immutable once built by the
// runtime; all numeric state of the engine lives in these.
struct Tensor {
  std::vector<int64_t> shape;
  std::vector<float> data;

  Tensor() = default;
  explicit Tensor(std::vector<int64_t> s, float fill = 0.0f)
      : shape(std::move(s)), data(static_cast<size_t>(shape_numel(shape)), fill) {}

  static Tensor from_data(std::vector<int64_t> shape, std::vector<float> values);

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  bool same_shape(const Tensor& other) const { return shape == other.shape; }
  std::string shape_str() const { return shape_to_string(shape); }
};

struct TensorError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace mpq
