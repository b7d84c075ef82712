#include "mpq/graph.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <set>

#include <json.hpp>

namespace mpq {

namespace {

using Json = nlohmann::ordered_json;

std::vector<int64_t> conv_output_shape(const Conv2dParams& p, const std::vector<int64_t>& in,
                                       const std::string& id) {
  if (in.size() != 3 || in[0] != p.in_ch) {
    throw GraphError("node '" + id + "': conv2d expects input [" + std::to_string(p.in_ch) +
                     ",H,W], got " + shape_to_string(in));
  }
  const int64_t h = (in[1] + 2 * p.padding - p.kernel) / p.stride + 1;
  const int64_t w = (in[2] + 2 * p.padding - p.kernel) / p.stride + 1;
  if (in[1] + 2 * p.padding < p.kernel || in[2] + 2 * p.padding < p.kernel || h <= 0 || w <= 0) {
    throw GraphError("node '" + id + "': kernel " + std::to_string(p.kernel) +
                     " does not fit input " + shape_to_string(in));
  }
  return {p.out_ch, h, w};
}

}  // namespace

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::dense: return "dense";
    case NodeKind::conv2d: return "conv2d";
    case NodeKind::relu: return "relu";
    case NodeKind::add: return "add";
    case NodeKind::concat: return "concat";
    case NodeKind::global_avg_pool: return "global-avg-pool";
    case NodeKind::flatten: return "flatten";
  }
  return "?";
}

std::optional<NodeKind> node_kind_from_string(std::string_view s) {
  if (s == "dense") return NodeKind::dense;
  if (s == "conv2d") return NodeKind::conv2d;
  if (s == "relu") return NodeKind::relu;
  if (s == "add") return NodeKind::add;
  if (s == "concat") return NodeKind::concat;
  if (s == "global-avg-pool") return NodeKind::global_avg_pool;
  if (s == "flatten") return NodeKind::flatten;
  return std::nullopt;
}

bool is_weight_bearing(NodeKind kind) {
  return kind == NodeKind::dense || kind == NodeKind::conv2d;
}

bool Graph::has_node(const std::string& id) const {
  return std::any_of(nodes.begin(), nodes.end(), [&](const Node& n) { return n.id == id; });
}

const Node& Graph::node(const std::string& id) const {
  for (const Node& n : nodes) {
    if (n.id == id) return n;
  }
  throw GraphError("unknown node id '" + id + "'");
}

Tensor Graph::weight_tensor(const Node& n) const {
  if (!n.weight_ref) throw GraphError("node '" + n.id + "' has no weights");
  const WeightRef& ref = *n.weight_ref;
  std::vector<int64_t> shape;
  if (n.kind == NodeKind::dense) {
    shape = {n.dense.out_features, n.dense.in_features};
  } else {
    shape = {n.conv.out_ch, n.conv.in_ch, n.conv.kernel, n.conv.kernel};
  }
  Tensor t(shape);
  std::copy(weights.data.begin() + ref.offset, weights.data.begin() + ref.offset + ref.length,
            t.data.begin());
  return t;
}

std::vector<std::string> topo_order(const Graph& g) {
  std::map<std::string, std::vector<std::string>> consumers;
  std::map<std::string, int> pending;
  for (const Node& n : g.nodes) {
    pending[n.id] = static_cast<int>(n.inputs.size());
    for (const std::string& in : n.inputs) consumers[in].push_back(n.id);
  }
  // Ready set ordered lexicographically for deterministic ties.
  std::set<std::string> ready;
  for (const Node& n : g.nodes) {
    if (n.inputs.empty()) ready.insert(n.id);
  }
  std::vector<std::string> order;
  order.reserve(g.nodes.size());
  while (!ready.empty()) {
    const std::string id = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(id);
    for (const std::string& c : consumers[id]) {
      if (--pending[c] == 0) ready.insert(c);
    }
  }
  if (order.size() != g.nodes.size()) {
    for (const auto& [id, count] : pending) {
      if (count > 0) throw GraphError("cycle detected involving node '" + id + "'");
    }
    throw GraphError("cycle detected");
  }
  return order;
}

void validate_graph(Graph& g) {
  if (g.input_shape.empty()) throw GraphError("missing input_shape");
  shape_numel(g.input_shape);
  if (g.nodes.empty()) throw GraphError("graph has no nodes");

  std::set<std::string> ids;
  for (const Node& n : g.nodes) {
    if (n.id.empty()) throw GraphError("empty node id");
    if (n.id.find(':') != std::string::npos || n.id.rfind("__", 0) == 0) {
      throw GraphError("invalid node id '" + n.id + "': ':' and the '__' prefix are reserved");
    }
    if (!ids.insert(n.id).second) throw GraphError("duplicate node id '" + n.id + "'");
  }
  if (!ids.count(g.output_node)) {
    throw GraphError("output node '" + g.output_node + "' does not exist");
  }

  for (const Node& n : g.nodes) {
    for (const std::string& in : n.inputs) {
      if (!ids.count(in)) {
        throw GraphError("node '" + n.id + "' references missing node id \"" + in + "\"");
      }
    }
    const size_t arity = n.inputs.size();
    if (n.kind == NodeKind::add || n.kind == NodeKind::concat) {
      if (arity < 2) throw GraphError("node '" + n.id + "': add/concat needs >=2 inputs");
    } else if (arity > 1) {
      throw GraphError("node '" + n.id + "': expects exactly one input, got " +
                       std::to_string(arity));
    }
    if (is_weight_bearing(n.kind)) {
      if (!n.weight_ref) throw GraphError("node '" + n.id + "': missing weight_ref");
      int64_t expected = 0;
      if (n.kind == NodeKind::dense) {
        if (n.dense.in_features <= 0 || n.dense.out_features <= 0) {
          throw GraphError("node '" + n.id + "': bad dense params");
        }
        expected = n.dense.in_features * n.dense.out_features;
      } else {
        const Conv2dParams& c = n.conv;
        if (c.in_ch <= 0 || c.out_ch <= 0 || c.kernel <= 0 || c.stride < 1 || c.padding < 0) {
          throw GraphError("node '" + n.id + "': bad conv2d params");
        }
        expected = c.out_ch * c.in_ch * c.kernel * c.kernel;
      }
      if (n.weight_ref->length != expected) {
        throw GraphError("node '" + n.id + "': weight_len " + std::to_string(n.weight_ref->length) +
                         " does not match params (expected " + std::to_string(expected) + ")");
      }
      if (n.weight_ref->offset < 0 ||
          n.weight_ref->offset + n.weight_ref->length > g.weights.numel()) {
        throw GraphError("node '" + n.id + "': weight_ref exceeds weight blob of " +
                         std::to_string(g.weights.numel()) + " floats");
      }
    } else if (n.weight_ref) {
      throw GraphError("node '" + n.id + "': kind '" + std::string(to_string(n.kind)) +
                       "' must not carry weights");
    }
  }

  g.topo = topo_order(g);

  // Shape inference in topological order; every node ends up reachable from
  // the graph input because entry nodes consume it directly.
  g.output_shape.clear();
  for (const std::string& id : g.topo) {
    const Node& n = g.node(id);
    std::vector<std::vector<int64_t>> in_shapes;
    if (n.inputs.empty()) {
      in_shapes.push_back(g.input_shape);
    } else {
      for (const std::string& in : n.inputs) in_shapes.push_back(g.output_shape.at(in));
    }
    std::vector<int64_t> out;
    switch (n.kind) {
      case NodeKind::dense:
        if (in_shapes[0] != std::vector<int64_t>{n.dense.in_features}) {
          throw GraphError("node '" + id + "': dense expects input [" +
                           std::to_string(n.dense.in_features) + "], got " +
                           shape_to_string(in_shapes[0]));
        }
        out = {n.dense.out_features};
        break;
      case NodeKind::conv2d:
        out = conv_output_shape(n.conv, in_shapes[0], id);
        break;
      case NodeKind::relu:
        out = in_shapes[0];
        break;
      case NodeKind::add:
        for (const auto& s : in_shapes) {
          if (s != in_shapes[0]) {
            throw GraphError("node '" + id + "': add inputs disagree on shape (" +
                             shape_to_string(in_shapes[0]) + " vs " + shape_to_string(s) + ")");
          }
        }
        out = in_shapes[0];
        break;
      case NodeKind::concat: {
        out = in_shapes[0];
        for (size_t i = 1; i < in_shapes.size(); ++i) {
          const auto& s = in_shapes[i];
          if (s.size() != out.size()) {
            throw GraphError("node '" + id + "': concat rank mismatch");
          }
          for (size_t d = 1; d < s.size(); ++d) {
            if (s[d] != out[d]) {
              throw GraphError("node '" + id + "': concat inputs disagree beyond channel axis");
            }
          }
          out[0] += s[0];
        }
        break;
      }
      case NodeKind::global_avg_pool:
        if (in_shapes[0].size() != 3) {
          throw GraphError("node '" + id + "': global-avg-pool expects [C,H,W], got " +
                           shape_to_string(in_shapes[0]));
        }
        out = {in_shapes[0][0]};
        break;
      case NodeKind::flatten:
        out = {shape_numel(in_shapes[0])};
        break;
    }
    g.output_shape[id] = std::move(out);
  }
}

Graph load_model(const std::filesystem::path& model_dir) {
  const auto graph_path = model_dir / "graph.json";
  const auto weights_path = model_dir / "weights.bin";
  std::ifstream gf(graph_path);
  if (!gf) throw GraphError("cannot open " + graph_path.string());
  Json j;
  try {
    j = Json::parse(gf);
  } catch (const std::exception& e) {
    throw GraphError("malformed JSON in " + graph_path.string() + ": " + e.what());
  }

  Graph g;
  try {
    g.input_shape = j.at("input_shape").get<std::vector<int64_t>>();
    g.output_node = j.at("output").get<std::string>();
    for (const Json& jn : j.at("nodes")) {
      Node n;
      n.id = jn.at("id").get<std::string>();
      const std::string kind = jn.at("kind").get<std::string>();
      const auto k = node_kind_from_string(kind);
      if (!k) throw GraphError("node '" + n.id + "': unknown kind '" + kind + "'");
      n.kind = *k;
      if (jn.contains("inputs")) n.inputs = jn.at("inputs").get<std::vector<std::string>>();
      const Json params = jn.contains("params") ? jn.at("params") : Json::object();
      if (n.kind == NodeKind::dense) {
        n.dense.in_features = params.at("in_features").get<int64_t>();
        n.dense.out_features = params.at("out_features").get<int64_t>();
      } else if (n.kind == NodeKind::conv2d) {
        n.conv.in_ch = params.at("in_ch").get<int64_t>();
        n.conv.out_ch = params.at("out_ch").get<int64_t>();
        n.conv.kernel = params.at("kernel").get<int64_t>();
        n.conv.stride = params.value("stride", int64_t{1});
        n.conv.padding = params.value("padding", int64_t{0});
      }
      if (jn.contains("weight_offset") && !jn.at("weight_offset").is_null()) {
        WeightRef ref;
        ref.offset = jn.at("weight_offset").get<int64_t>();
        ref.length = jn.at("weight_len").get<int64_t>();
        n.weight_ref = ref;
      }
      g.nodes.push_back(std::move(n));
    }
  } catch (const Json::exception& e) {
    throw GraphError("malformed graph.json: " + std::string(e.what()));
  }

  std::ifstream wf(weights_path, std::ios::binary);
  if (!wf) throw GraphError("cannot open " + weights_path.string());
  wf.seekg(0, std::ios::end);
  const auto bytes = static_cast<int64_t>(wf.tellg());
  wf.seekg(0);
  if (bytes % 4 != 0) throw GraphError("weights.bin size is not a multiple of 4 bytes");
  g.weights.shape = {bytes / 4};
  g.weights.data.resize(static_cast<size_t>(bytes / 4));
  if (bytes > 0) wf.read(reinterpret_cast<char*>(g.weights.data.data()), bytes);
  if (!wf && bytes > 0) throw GraphError("short read on " + weights_path.string());

  // A blob larger than the union of refs is tolerated; too-small blobs and
  // out-of-bounds refs are caught by validation.
  int64_t referenced = 0;
  for (const Node& n : g.nodes) {
    if (n.weight_ref) referenced = std::max(referenced, n.weight_ref->offset + n.weight_ref->length);
  }
  if (referenced > g.weights.numel()) {
    throw GraphError("weight blob holds " + std::to_string(g.weights.numel()) +
                     " floats but nodes reference " + std::to_string(referenced));
  }

  validate_graph(g);
  return g;
}

void save_model(const Graph& g, const std::filesystem::path& model_dir) {
  std::filesystem::create_directories(model_dir);
  Json j;
  j["input_shape"] = g.input_shape;
  j["output"] = g.output_node;
  Json nodes = Json::array();
  for (const Node& n : g.nodes) {
    Json jn;
    jn["id"] = n.id;
    jn["kind"] = std::string(to_string(n.kind));
    if (n.kind == NodeKind::dense) {
      jn["params"] = {{"in_features", n.dense.in_features}, {"out_features", n.dense.out_features}};
    } else if (n.kind == NodeKind::conv2d) {
      jn["params"] = {{"in_ch", n.conv.in_ch},
                      {"out_ch", n.conv.out_ch},
                      {"kernel", n.conv.kernel},
                      {"stride", n.conv.stride},
                      {"padding", n.conv.padding}};
    } else {
      jn["params"] = Json::object();
    }
    jn["inputs"] = n.inputs;
    if (n.weight_ref) {
      jn["weight_offset"] = n.weight_ref->offset;
      jn["weight_len"] = n.weight_ref->length;
    }
    nodes.push_back(std::move(jn));
  }
  j["nodes"] = std::move(nodes);

  std::ofstream gf(model_dir / "graph.json");
  gf << j.dump(2) << "\n";
  std::ofstream wf(model_dir / "weights.bin", std::ios::binary);
  wf.write(reinterpret_cast<const char*>(g.weights.data.data()),
           static_cast<std::streamsize>(g.weights.data.size() * 4));
}

}  // namespace mpq
