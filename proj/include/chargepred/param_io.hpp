#pragma once

// JSON persistence for numerics types. Doubles are written in shortest
// round-trip form, so load(save(x)) reproduces every parameter exactly.

#include <string>
#include <vector>

#include "json.hpp"

#include "chargepred/numerics.hpp"

namespace chargepred {

using Json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

template <typename Scalar>
Json vector_to_json(const Vector<Scalar>& v) {
  return Json(std::vector<Scalar>(v.data(), v.data() + v.size()));
}

template <typename Scalar>
Vector<Scalar> vector_from_json(const Json& j, const std::string& what) {
  if (!j.is_array()) throw SchemaError(what + ": expected an array");
  Vector<Scalar> v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw SchemaError(what + ": non-numeric entry");
    v(static_cast<Index>(i)) = j[i].get<Scalar>();
  }
  return v;
}

template <typename Scalar>
Json layer_to_json(const DenseLayer<Scalar>& layer) {
  return Json{{"activation", std::string(to_string(layer.activation))},
              {"in_dim", layer.in_dim()},
              {"out_dim", layer.out_dim()},
              {"weights", std::vector<Scalar>(layer.weights.data(), layer.weights.data() + layer.weights.size())},
              {"bias", vector_to_json(layer.bias)}};
}

template <typename Scalar>
DenseLayer<Scalar> layer_from_json(const Json& j) {
  try {
    const Index in = j.at("in_dim").get<Index>();
    const Index out = j.at("out_dim").get<Index>();
    DenseLayer<Scalar> layer(in, out, activation_from_string(j.at("activation").get<std::string>()));
    const Vector<Scalar> w = vector_from_json<Scalar>(j.at("weights"), "layer weights");
    if (w.size() != in * out) throw SchemaError("layer weights: expected " + std::to_string(in * out) + " values");
    std::copy(w.data(), w.data() + w.size(), layer.weights.data());
    layer.bias = vector_from_json<Scalar>(j.at("bias"), "layer bias");
    if (layer.bias.size() != out) throw SchemaError("layer bias: expected " + std::to_string(out) + " values");
    return layer;
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("malformed layer: ") + e.what());
  }
}

template <typename Scalar>
Json layers_to_json(const std::vector<DenseLayer<Scalar>>& layers) {
  Json arr = Json::array();
  for (const auto& l : layers) arr.push_back(layer_to_json(l));
  return arr;
}

template <typename Scalar>
std::vector<DenseLayer<Scalar>> layers_from_json(const Json& j) {
  if (!j.is_array()) throw SchemaError("layers: expected an array");
  std::vector<DenseLayer<Scalar>> out;
  for (const auto& l : j) out.push_back(layer_from_json<Scalar>(l));
  return out;
}

// Throws SchemaError unless the document carries the expected kind and the
// current format version.
inline void check_document(const Json& doc, const std::string& kind) {
  if (!doc.is_object()) throw SchemaError(kind + ": document is not a JSON object");
  if (!doc.contains("format_version") || !doc["format_version"].is_number_integer())
    throw SchemaError(kind + ": missing format_version");
  const int v = doc["format_version"].get<int>();
  if (v != kFormatVersion)
    throw SchemaError(kind + ": format_version " + std::to_string(v) + " is not supported (expected " +
                      std::to_string(kFormatVersion) + ")");
  if (doc.value("kind", std::string{}) != kind)
    throw SchemaError("expected a '" + kind + "' document, found '" + doc.value("kind", std::string{}) + "'");
}

}  // namespace chargepred
