#ifndef NADINE_CHECKPOINT_HPP
#define NADINE_CHECKPOINT_HPP

#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "nadine/harness.hpp"

namespace nadine {

using Json = nlohmann::json;

/// Learner state as JSON. Doubles are written with 17 significant digits, so
/// save -> load reproduces every parameter bit for bit. The configuration is
/// not part of the state: load into a learner built from the same config.
namespace ckpt {

template <typename T>
Json tensor(const Tensor<T>& t) {
  return Json{{"shape", t.shape()}, {"data", std::vector<double>(t.begin(), t.end())}};
}

template <typename T>
Tensor<T> tensor_from(const Json& j) {
  const auto shape = j.at("shape").get<Shape>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (shape.empty()) return Tensor<T>();
  return Tensor<T>(shape, std::vector<T>(data.begin(), data.end()));
}

template <typename T>
Json param(const Parameter<T>& p) {
  return Json{{"value", tensor(p.value)}, {"velocity", tensor(p.velocity)}};
}

template <typename T>
void param_into(Parameter<T>& p, const Json& j) {
  Tensor<T> value = tensor_from<T>(j.at("value"));
  Tensor<T> velocity = tensor_from<T>(j.at("velocity"));
  if (value.shape() != velocity.shape()) throw SchemaError("checkpoint parameter and velocity shapes differ");
  p.reset(std::move(value), std::move(velocity));
}

template <typename T>
Json dense(const DenseLayer<T>& l) {
  return Json{{"activation", to_string(l.activation())}, {"weights", param(l.weights())}, {"bias", param(l.bias())}};
}

template <typename T>
DenseLayer<T> dense_from(const Json& j) {
  DenseLayer<T> l(tensor_from<T>(j.at("weights").at("value")), tensor_from<T>(j.at("bias").at("value")),
                  activation_from_string(j.at("activation").get<std::string>()));
  param_into(l.weights(), j.at("weights"));
  param_into(l.bias(), j.at("bias"));
  return l;
}

template <typename T>
Json conv_layers(const std::vector<ConvLayer<T>>& layers) {
  Json out = Json::array();
  for (const auto& l : layers) {
    Json e{{"filters", param(l.filters())}, {"bias", param(l.bias())}};
    if (l.has_projection()) e["projection"] = param(l.projection());
    out.push_back(std::move(e));
  }
  return out;
}

template <typename T>
void conv_layers_into(std::vector<ConvLayer<T>>& layers, const Json& j) {
  if (j.size() != layers.size()) throw SchemaError("checkpoint convolution count does not match the configuration");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto& l = layers[i];
    const Shape filters = l.filters().value.shape();
    param_into(l.filters(), j[i].at("filters"));
    param_into(l.bias(), j[i].at("bias"));
    if (l.filters().value.shape() != filters) throw SchemaError("checkpoint filter shape does not match the configuration");
    if (l.has_projection() != j[i].contains("projection")) {
      throw SchemaError("checkpoint shortcut kind does not match the configuration");
    }
    if (l.has_projection()) param_into(l.projection(), j[i].at("projection"));
  }
}

inline Json spc(const SpcStatistic& s) {
  return Json{{"mean", s.moments.mean},     {"var", s.moments.var},  {"count", s.moments.count},
              {"min_mean", s.min_mean},     {"min_std", s.min_std}};
}

inline SpcStatistic spc_from(const Json& j) {
  SpcStatistic s;
  s.moments.mean = j.at("mean").get<double>();
  s.moments.var = j.at("var").get<double>();
  s.moments.count = j.at("count").get<std::size_t>();
  s.min_mean = j.at("min_mean").get<double>();
  s.min_std = j.at("min_std").get<double>();
  return s;
}

inline Json batch(const StreamBatch& b) {
  Json j{{"index", b.index}, {"labels", b.labels}, {"sensors", tensor(b.sensors)}};
  if (b.images) {
    Json ims = Json::array();
    for (const auto& im : *b.images) ims.push_back(tensor(im));
    j["images"] = std::move(ims);
  }
  return j;
}

inline StreamBatch batch_from(const Json& j) {
  StreamBatch b;
  b.index = j.at("index").get<std::size_t>();
  b.labels = j.at("labels").get<std::vector<std::size_t>>();
  b.sensors = tensor_from<double>(j.at("sensors"));
  if (j.contains("images")) {
    b.images.emplace();
    for (const auto& im : j.at("images")) b.images->push_back(tensor_from<double>(im));
  }
  return b;
}

}  // namespace ckpt

template <typename T>
Json save_network(const EvolvingNetwork<T>& net) {
  Json hidden = Json::array();
  for (const auto& l : net.stack().hidden()) hidden.push_back(ckpt::dense(l));
  Json events = Json::array();
  for (const auto& e : net.events()) {
    events.push_back(Json{{"kind", to_string(e.kind)}, {"node", e.node}, {"batch", e.batch}, {"sample", e.sample}});
  }
  const NsState& ns = net.ns();
  return Json{{"rng", net.rng().state()},
              {"sensor_layers", ckpt::conv_layers(net.extractor().sensor_layers())},
              {"image_layers", ckpt::conv_layers(net.extractor().image_layers())},
              {"hidden", std::move(hidden)},
              {"head", ckpt::dense(net.stack().head())},
              {"ns",
               {{"feature_mean", ns.feature_mean},
                {"feature_var", ns.feature_var},
                {"bias", ckpt::spc(ns.bias)},
                {"var", ckpt::spc(ns.var)},
                {"sample_count", ns.sample_count}}},
              {"events", std::move(events)},
              {"activation_sums", net.activation_sums()},
              {"activation_counts", net.activation_counts()}};
}

template <typename T>
void load_network(EvolvingNetwork<T>& net, const Json& j) {
  net.rng().restore(j.at("rng").get<std::string>());
  ckpt::conv_layers_into(net.extractor().sensor_layers(), j.at("sensor_layers"));
  ckpt::conv_layers_into(net.extractor().image_layers(), j.at("image_layers"));
  std::vector<DenseLayer<T>> hidden;
  for (const auto& l : j.at("hidden")) hidden.push_back(ckpt::dense_from<T>(l));
  DenseStack<T> stack(std::move(hidden), ckpt::dense_from<T>(j.at("head")));
  if (stack.inputs() != net.feature_size()) throw SchemaError("checkpoint classifier input width does not match");
  net.stack() = std::move(stack);

  const Json& ns = j.at("ns");
  NsState& s = net.ns();
  s.feature_mean = ns.at("feature_mean").get<std::vector<double>>();
  s.feature_var = ns.at("feature_var").get<std::vector<double>>();
  s.bias = ckpt::spc_from(ns.at("bias"));
  s.var = ckpt::spc_from(ns.at("var"));
  s.sample_count = ns.at("sample_count").get<std::size_t>();

  auto& events = net.events();
  events.clear();
  for (const auto& e : j.at("events")) {
    events.push_back({event_kind_from_string(e.at("kind").get<std::string>()), e.at("node").get<std::size_t>(),
                      e.at("batch").get<std::size_t>(), e.at("sample").get<std::size_t>()});
  }
  net.restore_activation_stats(j.at("activation_sums").get<std::vector<double>>(),
                               j.at("activation_counts").get<std::vector<std::size_t>>());
}

template <typename T>
Json save_state(const Prequential<T>& learner) {
  const auto env = learner.memory().envelope().state();
  Json store = Json::array();
  for (const auto& e : learner.memory().store().entries()) {
    store.push_back(
        Json{{"features", e.features}, {"label", e.label}, {"reason", to_string(e.reason)}, {"batch", e.batch}});
  }
  Json warning = Json::array();
  for (const auto& b : learner.warning_buffer().batches()) warning.push_back(ckpt::batch(b));
  Json history = Json::array();
  for (const auto& h : learner.detector().history()) history.push_back(h);
  return Json{{"network", save_network(learner.network())},
              {"detector", std::move(history)},
              {"warning", std::move(warning)},
              {"envelope",
               {{"center", env.center},
                {"scatter", env.scatter},
                {"inverse", env.inverse},
                {"count", env.count},
                {"last_inversion", env.last_inversion},
                {"ridge", env.ridge}}},
              {"memory", std::move(store)},
              {"confusion", learner.confusion().counts()},
              {"seen", learner.seen()},
              {"correct", learner.correct()}};
}

template <typename T>
void load_state(Prequential<T>& learner, const Json& j) {
  load_network(learner.network(), j.at("network"));

  std::deque<AccuracyVector> history;
  for (const auto& h : j.at("detector")) history.push_back(h.get<AccuracyVector>());
  learner.detector().restore(std::move(history));

  std::vector<StreamBatch> warning;
  for (const auto& b : j.at("warning")) warning.push_back(ckpt::batch_from(b));
  learner.warning_buffer().restore(std::move(warning));

  const Json& e = j.at("envelope");
  GaussianEnvelope::State env;
  env.center = e.at("center").get<std::vector<double>>();
  env.scatter = e.at("scatter").get<std::vector<double>>();
  env.inverse = e.at("inverse").get<std::vector<double>>();
  env.count = e.at("count").get<std::size_t>();
  env.last_inversion = e.at("last_inversion").get<std::size_t>();
  env.ridge = e.at("ridge").get<double>();
  if (env.center.size() != learner.memory().envelope().dim()) {
    throw SchemaError("checkpoint envelope dimension does not match the configuration");
  }
  learner.memory().envelope() = GaussianEnvelope::from_state(env);

  MemoryStore& store = learner.memory().store();
  store.clear();
  for (const auto& m : j.at("memory")) {
    store.push(MemoryEntry{m.at("features").get<std::vector<double>>(), m.at("label").get<std::size_t>(),
                           m.at("reason").get<std::string>() == "edge" ? AdmissionReason::Edge : AdmissionReason::Hard,
                           m.at("batch").get<std::size_t>()});
  }
  learner.confusion().restore(j.at("confusion").get<std::vector<std::vector<std::size_t>>>());
  learner.restore_counters(j.at("seen").get<std::size_t>(), j.at("correct").get<std::size_t>());
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

template <typename T>
std::uint64_t state_hash(const Prequential<T>& learner) {
  return fnv1a(save_state(learner).dump());
}

template <typename T>
void save_checkpoint(const Prequential<T>& learner, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write checkpoint '" + path + "'");
  out << save_state(learner).dump();
}

template <typename T>
void load_checkpoint(Prequential<T>& learner, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open checkpoint '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw SchemaError("checkpoint '" + path + "' is not valid JSON: " + e.what());
  }
  load_state(learner, j);
}

}  // namespace nadine

#endif  // NADINE_CHECKPOINT_HPP
