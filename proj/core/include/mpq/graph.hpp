#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mpq/tensor.hpp"

namespace mpq {

enum class NodeKind { dense, conv2d, relu, add, concat, global_avg_pool, flatten };

std::string_view to_string(NodeKind kind);
std::optional<NodeKind> node_kind_from_string(std::string_view s);

// dense and conv2d carry weights and MACs; everything else is free.
bool is_weight_bearing(NodeKind kind);

struct DenseParams {
  int64_t in_features = 0;
  int64_t out_features = 0;
};

struct Conv2dParams {
  int64_t in_ch = 0;
  int64_t out_ch = 0;
  int64_t kernel = 0;   // square kernels only
  int64_t stride = 1;
  int64_t padding = 0;  // zero padding
};

struct WeightRef {
  int64_t offset = 0;  // float index into the weight blob
  int64_t length = 0;  // number of floats
};

struct Node {
  std::string id;
  NodeKind kind = NodeKind::relu;
  DenseParams dense;  // valid when kind == dense
  Conv2dParams conv;  // valid when kind == conv2d
  std::vector<std::string> inputs;  // empty = reads the graph input
  std::optional<WeightRef> weight_ref;
};

struct GraphError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Feed-forward DAG plus its flat weight blob. validate_graph() fills the
// derived fields (topo, output shapes); after that the graph is immutable
// and forward passes may run concurrently against it.
struct Graph {
  std::vector<Node> nodes;
  std::vector<int64_t> input_shape;  // one sample, no batch dimension
  std::string output_node;
  Tensor weights;  // flat blob of all weight tensors

  // Derived, filled by validate_graph().
  std::vector<std::string> topo;
  std::map<std::string, std::vector<int64_t>> output_shape;  // per-sample

  bool has_node(const std::string& id) const;
  const Node& node(const std::string& id) const;

  // Copies a node's weight slice out of the blob, shaped [out,in] for dense
  // and [out_ch,in_ch,k,k] for conv2d.
  Tensor weight_tensor(const Node& n) const;
};

// Deterministic topological order: Kahn's algorithm with lexicographic
// tie-breaking on node id. Throws GraphError on cycles.
std::vector<std::string> topo_order(const Graph& g);

// Checks all structural invariants and runs shape inference. Throws
// GraphError naming the offending node.
void validate_graph(Graph& g);

// Reads graph.json + weights.bin from model_dir, validates, infers shapes.
Graph load_model(const std::filesystem::path& model_dir);

// Writes graph.json + weights.bin (the inverse of load_model).
void save_model(const Graph& g, const std::filesystem::path& model_dir);

}  // namespace mpq
