#include "clever/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace clever {

namespace {

using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

Network network_from_json_text(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(origin + ": " + e.what());
  }
  try {
    Network net;
    net.input_dim = doc.at("input_dim").get<int>();
    net.num_classes = doc.at("num_classes").get<int>();
    for (const json& jl : doc.at("layers")) {
      DenseLayer layer;
      const auto& rows = jl.at("weights");
      if (rows.empty()) throw InputError(origin + ": layer with empty weights");
      const std::size_t out_dim = rows.size();
      const std::size_t in_dim = rows[0].size();
      layer.weights.resize(out_dim, in_dim);
      for (std::size_t r = 0; r < out_dim; ++r) {
        if (rows[r].size() != in_dim)
          throw InputError(origin + ": ragged weight rows in a layer");
        for (std::size_t c = 0; c < in_dim; ++c) layer.weights(r, c) = rows[r][c].get<double>();
      }
      const auto& bias = jl.at("bias");
      layer.bias.resize(bias.size());
      for (std::size_t r = 0; r < bias.size(); ++r) layer.bias[r] = bias[r].get<double>();
      layer.activation.kind = activation_from_string(jl.at("activation").get<std::string>());
      if (layer.activation.kind == ActivationKind::BoundedReLU)
        layer.activation.cap = jl.value("cap", 1.0);
      net.layers.push_back(std::move(layer));
    }
    net.validate();
    return net;
  } catch (const json::exception& e) {
    throw InputError(origin + ": " + e.what());
  }
}

Network load_network_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open model file: " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return network_from_json_text(text.str(), path.string());
}

std::string network_to_json_text(const Network& net) {
  net.validate();
  // hand-rolled emission with %.17g doubles so identical networks always
  // serialize to identical bytes
  std::ostringstream out;
  out << "{\n  \"input_dim\": " << net.input_dim
      << ",\n  \"num_classes\": " << net.num_classes << ",\n  \"layers\": [";
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const DenseLayer& layer = net.layers[l];
    out << (l == 0 ? "\n" : ",\n") << "    {\"activation\": \""
        << to_string(layer.activation.kind) << "\"";
    if (layer.activation.kind == ActivationKind::BoundedReLU)
      out << ", \"cap\": " << format_double(layer.activation.cap);
    out << ",\n     \"weights\": [";
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      out << (r == 0 ? "[" : ",\n                  [");
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
        out << (c == 0 ? "" : ", ") << format_double(layer.weights(r, c));
      out << "]";
    }
    out << "],\n     \"bias\": [";
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r)
      out << (r == 0 ? "" : ", ") << format_double(layer.bias[r]);
    out << "]}";
  }
  out << "\n  ]\n}\n";
  return out.str();
}

void save_network_json(const Network& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write model file: " + path.string());
  out << network_to_json_text(net);
}

}  // namespace clever
