// Copyright 2026 The GenHMM Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "genhmm/checkpoint.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "genhmm/errors.hpp"

namespace genhmm::io {
namespace {

using nlohmann::json;

json real(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double real(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  throw DataError("expected a real number, got " + j.dump());
}

template <typename Derived>
json array_doc(const Eigen::MatrixBase<Derived>& m) {
  json data = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(real(m(r, c)));
  return {{"shape", {m.rows(), m.cols()}}, {"data", std::move(data)}};
}

Matrix matrix_from(const json& j, const char* what) {
  const auto& shape = j.at("shape");
  const auto& data = j.at("data");
  if (!shape.is_array() || shape.size() != 2) throw DataError(std::string(what) + ": shape must have two entries");
  const long rows = shape[0].get<long>();
  const long cols = shape[1].get<long>();
  if (rows < 0 || cols < 0 || !data.is_array() || static_cast<long>(data.size()) != rows * cols)
    throw DataError(std::string(what) + ": data length does not match shape");
  Matrix m(rows, cols);
  std::size_t i = 0;
  for (long r = 0; r < rows; ++r)
    for (long c = 0; c < cols; ++c) m(r, c) = real(data[i++]);
  return m;
}

Vector vector_from(const json& j, const char* what) {
  Matrix m = matrix_from(j, what);
  if (m.cols() != 1) throw DataError(std::string(what) + ": expected a column vector");
  return m.col(0);
}

json net_doc(const nn::DenseNet& net) {
  json layers = json::array();
  for (const auto& l : net.layers())
    layers.push_back({{"activation", l.activation == nn::Activation::kTanh ? "tanh" : "linear"},
                      {"weight", array_doc(l.weight)},
                      {"bias", array_doc(l.bias)}});
  return layers;
}

nn::DenseNet net_from(const json& j) {
  std::vector<nn::DenseLayer> layers;
  for (const auto& l : j) {
    nn::DenseLayer layer;
    const auto act = l.at("activation").get<std::string>();
    if (act == "tanh") layer.activation = nn::Activation::kTanh;
    else if (act == "linear") layer.activation = nn::Activation::kLinear;
    else throw DataError("unknown activation '" + act + "'");
    layer.weight = matrix_from(l.at("weight"), "weight");
    layer.bias = vector_from(l.at("bias"), "bias");
    layers.push_back(std::move(layer));
  }
  nn::DenseNet net(std::move(layers));
  net.validate();
  return net;
}

json generator_doc(const flow::FlowGenerator& g) {
  json layers = json::array();
  for (const auto& l : g.layers())
    layers.push_back({{"split", l.split},
                      {"swapped", l.swapped},
                      {"scale_net", net_doc(l.scale_net)},
                      {"shift_net", net_doc(l.shift_net)}});
  return {{"dim", g.dim()}, {"layers", std::move(layers)}};
}

flow::FlowGenerator generator_from(const json& j) {
  std::vector<flow::CouplingLayer> layers;
  for (const auto& l : j.at("layers")) {
    flow::CouplingLayer layer;
    layer.split = l.at("split").get<int>();
    layer.swapped = l.at("swapped").get<bool>();
    layer.scale_net = net_from(l.at("scale_net"));
    layer.shift_net = net_from(l.at("shift_net"));
    layers.push_back(std::move(layer));
  }
  flow::FlowGenerator g(j.at("dim").get<int>(), std::move(layers));
  g.validate();
  return g;
}

template <typename T>
json list_doc(const std::vector<T>& items) {
  json out = json::array();
  for (const auto& m : items) out.push_back(array_doc(m));
  return out;
}

std::vector<Matrix> matrices_from(const json& j) {
  std::vector<Matrix> out;
  for (const auto& m : j) out.push_back(matrix_from(m, "matrix"));
  return out;
}

std::vector<Vector> vectors_from(const json& j) {
  std::vector<Vector> out;
  for (const auto& m : j) out.push_back(vector_from(m, "vector"));
  return out;
}

json adam_config_doc(const nn::AdamConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"beta1", c.beta1}, {"beta2", c.beta2}, {"epsilon", c.epsilon}};
}

nn::AdamConfig adam_config_from(const json& j) {
  nn::AdamConfig c;
  c.learning_rate = j.at("learning_rate").get<double>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.epsilon = j.at("epsilon").get<double>();
  return c;
}

json adam_doc(const nn::AdamState& s) {
  return {{"config", adam_config_doc(s.config)},
          {"step", s.step},
          {"first_weight", list_doc(s.first_weight)},
          {"second_weight", list_doc(s.second_weight)},
          {"first_bias", list_doc(s.first_bias)},
          {"second_bias", list_doc(s.second_bias)}};
}

nn::AdamState adam_from(const json& j) {
  nn::AdamState s;
  s.config = adam_config_from(j.at("config"));
  s.step = j.at("step").get<long>();
  s.first_weight = matrices_from(j.at("first_weight"));
  s.second_weight = matrices_from(j.at("second_weight"));
  s.first_bias = vectors_from(j.at("first_bias"));
  s.second_bias = vectors_from(j.at("second_bias"));
  return s;
}

json train_state_doc(const TrainState& s) {
  const auto& c = s.config;
  json config = {{"adam", adam_config_doc(c.adam)},
                 {"batch_size", c.batch_size},
                 {"inner_batches", c.inner_batches},
                 {"max_iterations", c.max_iterations},
                 {"tolerance", c.tolerance},
                 {"seed", c.seed},
                 {"threads", c.threads},
                 {"monotonic_slack", c.monotonic_slack}};
  json history = json::array();
  for (double h : s.history) history.push_back(real(h));
  json optimizers = json::array();
  for (const auto& o : s.optimizers) {
    json scale = json::array(), shift = json::array();
    for (const auto& a : o.scale) scale.push_back(adam_doc(a));
    for (const auto& a : o.shift) shift.push_back(adam_doc(a));
    optimizers.push_back({{"scale", std::move(scale)}, {"shift", std::move(shift)}});
  }
  return {{"config", std::move(config)},
          {"iteration", s.iteration},
          {"initial_loglik", real(s.initial_loglik)},
          {"history", std::move(history)},
          {"converged", s.converged},
          {"monotonicity_violations", s.monotonicity_violations},
          {"skipped_terms", s.skipped_terms},
          {"rejected_steps", s.rejected_steps},
          {"degenerate_sequences", s.degenerate_sequences},
          {"optimizers", std::move(optimizers)}};
}

TrainState train_state_from(const json& j) {
  TrainState s;
  const auto& c = j.at("config");
  s.config.adam = adam_config_from(c.at("adam"));
  s.config.batch_size = c.at("batch_size").get<int>();
  s.config.inner_batches = c.at("inner_batches").get<int>();
  s.config.max_iterations = c.at("max_iterations").get<int>();
  s.config.tolerance = c.at("tolerance").get<double>();
  s.config.seed = c.at("seed").get<std::uint64_t>();
  s.config.threads = c.at("threads").get<int>();
  s.config.monotonic_slack = c.at("monotonic_slack").get<double>();
  s.config.validate();
  s.iteration = j.at("iteration").get<int>();
  s.initial_loglik = real(j.at("initial_loglik"));
  for (const auto& h : j.at("history")) s.history.push_back(real(h));
  if (static_cast<int>(s.history.size()) != s.iteration)
    throw DataError("train state history length does not match its iteration count");
  s.converged = j.at("converged").get<bool>();
  s.monotonicity_violations = j.at("monotonicity_violations").get<int>();
  s.skipped_terms = j.at("skipped_terms").get<long>();
  s.rejected_steps = j.at("rejected_steps").get<long>();
  s.degenerate_sequences = j.at("degenerate_sequences").get<int>();
  for (const auto& o : j.at("optimizers")) {
    flow::FlowOptimizer opt;
    for (const auto& a : o.at("scale")) opt.scale.push_back(adam_from(a));
    for (const auto& a : o.at("shift")) opt.shift.push_back(adam_from(a));
    s.optimizers.push_back(std::move(opt));
  }
  return s;
}

json core_doc(json doc, const std::string& label, const hmm::HmmCore& core, const Matrix& mixture, int dim) {
  doc["label"] = label;
  doc["num_states"] = core.num_states();
  doc["num_components"] = mixture.cols();
  doc["dim"] = dim;
  doc["initial"] = array_doc(core.initial);
  doc["transition"] = array_doc(core.transition);
  doc["mixture"] = array_doc(mixture);
  return doc;
}

void check_shapes(const hmm::HmmCore& core, const Matrix& mixture, const json& doc) {
  const int S = doc.at("num_states").get<int>();
  const int K = doc.at("num_components").get<int>();
  if (core.num_states() != S || core.transition.rows() != S || core.transition.cols() != S ||
      mixture.rows() != S || mixture.cols() != K)
    throw DataError("checkpoint parameter shapes disagree with its header");
}

}  // namespace

std::string checkpoint_to_string(const Checkpoint& cp) {
  json doc = {{"format", kCheckpointFormat}, {"version", kCheckpointVersion}};
  if (const auto* g = std::get_if<GenHmmModel>(&cp.model)) {
    doc["model_type"] = "genhmm";
    doc = core_doc(std::move(doc), g->label, g->core, g->mixture.weights, g->dim());
    json gens = json::array();
    for (const auto& gen : g->generators) gens.push_back(generator_doc(gen));
    doc["generators"] = std::move(gens);
  } else {
    const auto& m = std::get<baseline::GmmHmmModel>(cp.model);
    doc["model_type"] = "gmmhmm";
    doc = core_doc(std::move(doc), m.label, m.core, m.emission.mixture.weights, m.dim());
    doc["means"] = list_doc(m.emission.means);
    doc["variances"] = list_doc(m.emission.variances);
  }
  if (cp.train_state) doc["train_state"] = train_state_doc(*cp.train_state);
  return doc.dump(1) + "\n";
}

Checkpoint checkpoint_from_string(const std::string& text, const std::string& source) {
  try {
    const json doc = json::parse(text);
    if (doc.value("format", std::string()) != kCheckpointFormat)
      throw DataError("not a genhmm checkpoint");
    const int version = doc.at("version").get<int>();
    if (version != kCheckpointVersion)
      throw DataError("unsupported checkpoint version " + std::to_string(version));
    const auto type = doc.at("model_type").get<std::string>();
    hmm::HmmCore core;
    core.initial = vector_from(doc.at("initial"), "initial");
    core.transition = matrix_from(doc.at("transition"), "transition");
    hmm::MixtureWeights mixture{matrix_from(doc.at("mixture"), "mixture")};
    check_shapes(core, mixture.weights, doc);
    const int dim = doc.at("dim").get<int>();
    Checkpoint cp;
    if (type == "genhmm") {
      GenHmmModel m;
      m.label = doc.at("label").get<std::string>();
      m.core = std::move(core);
      m.mixture = std::move(mixture);
      for (const auto& g : doc.at("generators")) m.generators.push_back(generator_from(g));
      m.validate();
      if (m.dim() != dim) throw DataError("generator dimension disagrees with the header");
      cp.model = std::move(m);
    } else if (type == "gmmhmm") {
      baseline::GmmHmmModel m;
      m.label = doc.at("label").get<std::string>();
      m.core = std::move(core);
      m.emission.mixture = std::move(mixture);
      m.emission.means = matrices_from(doc.at("means"));
      m.emission.variances = matrices_from(doc.at("variances"));
      m.validate();
      if (m.dim() != dim) throw DataError("emission dimension disagrees with the header");
      cp.model = std::move(m);
    } else {
      throw DataError("unknown model type '" + type + "'");
    }
    if (doc.contains("train_state")) {
      cp.train_state = train_state_from(doc.at("train_state"));
      const std::size_t gens = std::holds_alternative<GenHmmModel>(cp.model)
                                   ? std::get<GenHmmModel>(cp.model).generators.size()
                                   : 0;
      if (cp.train_state->optimizers.size() != gens)
        throw DataError("train state optimizers do not match the model");
    }
    return cp;
  } catch (const json::exception& e) {
    throw DataError(source + ": malformed checkpoint: " + e.what());
  } catch (const Error& e) {
    throw DataError(source + ": " + e.what());
  }
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move " + tmp.string() + " to " + path);
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
  write_file_atomic(path, checkpoint_to_string(checkpoint));
}

Checkpoint load_checkpoint(const std::string& path) {
  return checkpoint_from_string(read_file(path), path);
}

}  // namespace genhmm::io
