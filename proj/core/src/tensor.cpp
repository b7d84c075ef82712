#include "mpq/tensor.hpp"

#include <sstream>

namespace mpq {

int64_t shape_numel(const std::vector<int64_t>& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d <= 0) throw TensorError("non-positive dimension in shape " + shape_to_string(shape));
    n *= d;
  }
  return n;
}

std::string shape_to_string(const std::vector<int64_t>& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

Tensor Tensor::from_data(std::vector<int64_t> shape, std::vector<float> values) {
  if (shape_numel(shape) != static_cast<int64_t>(values.size())) {
    throw TensorError("data length " + std::to_string(values.size()) +
                      " does not match shape " + shape_to_string(shape));
  }
  Tensor t;
  t.shape = std::move(shape);
  t.data = std::move(values);
  return t;
}

}  // namespace mpq
