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

#include "genhmm/genhmm_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "genhmm/errors.hpp"
#include "genhmm/logging.hpp"
#include "genhmm/numeric.hpp"
#include "genhmm/parallel.hpp"

namespace genhmm {
namespace {

// Frames per batched flow pass; keeps temporaries small and cache-resident.
constexpr Eigen::Index kChunk = 256;

void check_sequence(const GenHmmModel& model, const Frames& seq) {
  if (seq.rows() < 1) throw DataError("sequence has no frames");
  if (seq.cols() != model.dim())
    throw ShapeError("sequence frame width " + std::to_string(seq.cols()) +
                     " does not match model dimension " + std::to_string(model.dim()));
}

long usable_frames(std::span<const Frames> data, std::span<const hmm::PosteriorTables> posts,
                   std::span<const std::size_t> indices) {
  long frames = 0;
  for (std::size_t r : indices)
    if (!posts[r].degenerate) frames += static_cast<long>(data[r].rows());
  return frames;
}

std::vector<std::size_t> batch_indices(std::size_t count, const TrainConfig& config, int iteration,
                                       int batch) {
  std::vector<std::size_t> idx(count);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (config.batch_size == 0 || static_cast<std::size_t>(config.batch_size) >= count) return idx;
  std::mt19937_64 rng(derive_seed(config.seed, static_cast<std::uint64_t>(iteration),
                                  static_cast<std::uint64_t>(batch)));
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(static_cast<std::size_t>(config.batch_size));
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

GenHmmModel GenHmmModel::initialize(std::string label, int states, int components,
                                    const flow::FlowConfig& flow, std::mt19937_64& rng) {
  if (components < 1) throw ConfigError("component count must be positive");
  GenHmmModel model;
  model.label = std::move(label);
  model.core = hmm::HmmCore::left_to_right(states);
  model.mixture = hmm::MixtureWeights::uniform(states, components);
  for (int i = 0; i < states * components; ++i)
    model.generators.push_back(flow::FlowGenerator::random(flow, rng));
  return model;
}

void GenHmmModel::validate() const {
  core.validate();
  mixture.validate();
  if (mixture.num_states() != core.num_states()) throw ShapeError("mixture rows != state count");
  if (generators.size() != static_cast<std::size_t>(num_states() * num_components()))
    throw ShapeError("generator count != |S| * K");
  for (const auto& g : generators) {
    g.validate();
    if (g.dim() != dim()) throw ShapeError("generators disagree on the frame dimension");
  }
}

std::uint64_t GenHmmModel::fingerprint() const {
  std::uint64_t h = fnv1a(core.initial.data(), sizeof(double) * core.initial.size());
  h = fnv1a(core.transition.data(), sizeof(double) * core.transition.size(), h);
  h = fnv1a(mixture.weights.data(), sizeof(double) * mixture.weights.size(), h);
  for (const auto& g : generators)
    for (const auto& layer : g.layers())
      for (const auto* net : {&layer.scale_net, &layer.shift_net})
        for (auto block : net->parameter_blocks()) h = fnv1a(block.data(), block.size_bytes(), h);
  return h;
}

int heuristic_state_count(double mean_length, int frames_per_state) {
  if (frames_per_state < 1) throw ConfigError("frames per state must be >= 1");
  const long rounded = std::lround(mean_length / frames_per_state);
  return static_cast<int>(std::clamp<long>(rounded, 3, 5));
}

hmm::FrameLogLik frame_loglik_table(const GenHmmModel& model, const Frames& seq) {
  check_sequence(model, seq);
  const int S = model.num_states(), K = model.num_components();
  const Matrix x = seq.transpose();
  Matrix component(seq.rows(), S * K);
  for (int s = 0; s < S; ++s) {
    for (int k = 0; k < K; ++k) {
      const auto& gen = model.generator(s, k);
      const Vector ll = flow::flow_loglik_batch(gen, x);
      for (Eigen::Index t = 0; t < seq.rows(); ++t) {
        if (std::isfinite(ll(t))) continue;
        const std::string where = "frame " + std::to_string(t) + ", state " + std::to_string(s) +
                                  ", component " + std::to_string(k) + ": ";
        try {
          flow::flow_loglik(gen, x.col(t));
        } catch (const NumericalError& e) {
          throw NumericalError(where + e.what());
        }
        throw NumericalError(where + "non-finite log-likelihood");
      }
      component.col(s * K + k) = ll;
    }
  }
  return hmm::combine_components(model.mixture, std::move(component));
}

SequenceScore sequence_loglik(const GenHmmModel& model, const Frames& seq) {
  const auto ll = frame_loglik_table(model, seq);
  const auto post = hmm::forward_backward(model.core, model.mixture, ll);
  return {post.loglik, post.degenerate};
}

EStepResult expectation(const GenHmmModel& model, std::span<const Frames> data, int threads) {
  const int S = model.num_states(), K = model.num_components();
  EStepResult out;
  out.posteriors.resize(data.size());
  // One batched pass per generator over every frame of the dataset.
  std::vector<Eigen::Index> offset(data.size() + 1, 0);
  for (std::size_t r = 0; r < data.size(); ++r) {
    check_sequence(model, data[r]);
    offset[r + 1] = offset[r] + data[r].rows();
  }
  Matrix x(model.dim(), offset.back());
  for (std::size_t r = 0; r < data.size(); ++r) x.middleCols(offset[r], data[r].rows()) = data[r].transpose();
  Matrix component(offset.back(), S * K);
  parallel_chunks(model.generators.size(), static_cast<std::size_t>(threads),
                  [&](std::size_t, std::size_t begin, std::size_t end) {
                    for (std::size_t g = begin; g < end; ++g)
                      for (Eigen::Index c = 0; c < x.cols(); c += kChunk) {
                        const Eigen::Index n = std::min(kChunk, x.cols() - c);
                        component.col(static_cast<Eigen::Index>(g)).segment(c, n) =
                            flow::flow_loglik_batch(model.generators[g], x.middleCols(c, n));
                      }
                  });
  for (std::size_t r = 0; r < data.size(); ++r) {
    const auto block = component.middleRows(offset[r], data[r].rows());
    if (!block.allFinite()) frame_loglik_table(model, data[r]);  // throws with frame context
  }
  parallel_chunks(data.size(), static_cast<std::size_t>(threads),
                  [&](std::size_t, std::size_t begin, std::size_t end) {
                    for (std::size_t r = begin; r < end; ++r) {
                      const auto ll = hmm::combine_components(
                          model.mixture, component.middleRows(offset[r], data[r].rows()));
                      out.posteriors[r] = hmm::forward_backward(model.core, model.mixture, ll);
                    }
                  });
  out.stats = hmm::SufficientStatistics(model.num_states(), model.num_components());
  for (std::size_t r = 0; r < data.size(); ++r) {
    const auto& p = out.posteriors[r];
    out.stats.add(p);
    if (p.degenerate) {
      ++out.degenerate;
      continue;
    }
    out.total_loglik += p.loglik;
    out.frames += static_cast<long>(data[r].rows());
  }
  if (out.degenerate > 0)
    log_warning(std::to_string(out.degenerate) + " degenerate sequence(s) excluded from EM statistics");
  return out;
}

double generator_objective(const GenHmmModel& model, std::span<const Frames> data,
                           std::span<const hmm::PosteriorTables> posteriors) {
  if (posteriors.size() != data.size()) throw ShapeError("one posterior table per sequence required");
  const int S = model.num_states(), K = model.num_components();
  double total = 0.0;
  long frames = 0;
  for (std::size_t r = 0; r < data.size(); ++r) {
    const auto& post = posteriors[r];
    if (post.degenerate) continue;
    frames += static_cast<long>(data[r].rows());
    for (Eigen::Index t = 0; t < data[r].rows(); ++t) {
      const Vector x = data[r].row(t).transpose();
      for (int s = 0; s < S; ++s)
        for (int k = 0; k < K; ++k) {
          const double w = post.gamma(t, s) * post.kappa(t, s * K + k);
          if (w != 0.0) total += w * flow::flow_loglik(model.generator(s, k), x);
        }
    }
  }
  if (frames == 0) throw DataError("generator objective needs at least one usable sequence");
  return total / static_cast<double>(frames);
}

namespace {

constexpr int kMaxHalvings = 4;

// Usable frames of `indices` stacked column-wise, with the posterior weight
// of every generator per frame.
struct WeightedFrames {
  Matrix x;        // N x frames
  Matrix weights;  // frames x (S * K)
};

WeightedFrames stack_frames(const GenHmmModel& model, std::span<const Frames> data,
                            std::span<const hmm::PosteriorTables> posteriors,
                            std::span<const std::size_t> indices) {
  const int S = model.num_states(), K = model.num_components();
  long frames = 0;
  for (std::size_t r : indices)
    if (!posteriors[r].degenerate) frames += static_cast<long>(data[r].rows());
  WeightedFrames out{Matrix(model.dim(), frames), Matrix(frames, S * K)};
  long col = 0;
  for (std::size_t r : indices) {
    const auto& post = posteriors[r];
    if (post.degenerate) continue;
    for (Eigen::Index t = 0; t < data[r].rows(); ++t, ++col) {
      out.x.col(col) = data[r].row(t).transpose();
      for (int s = 0; s < S; ++s)
        for (int k = 0; k < K; ++k) out.weights(col, s * K + k) = post.gamma(t, s) * post.kappa(t, s * K + k);
    }
  }
  return out;
}

// Frames with nonzero weight for generator g.
void select_columns(const WeightedFrames& wf, Eigen::Index g, Matrix& xs, Vector& ws) {
  std::vector<Eigen::Index> used;
  for (Eigen::Index c = 0; c < wf.weights.rows(); ++c)
    if (wf.weights(c, g) != 0.0) used.push_back(c);
  xs.resize(wf.x.rows(), static_cast<Eigen::Index>(used.size()));
  ws.resize(static_cast<Eigen::Index>(used.size()));
  for (std::size_t i = 0; i < used.size(); ++i) {
    xs.col(static_cast<Eigen::Index>(i)) = wf.x.col(used[i]);
    ws(static_cast<Eigen::Index>(i)) = wf.weights(used[i], g);
  }
}

double generator_term(const flow::FlowGenerator& gen, const Matrix& xs, const Vector& ws) {
  double total = 0.0;
  for (Eigen::Index c = 0; c < xs.cols(); c += kChunk) {
    const Eigen::Index n = std::min(kChunk, xs.cols() - c);
    total += ws.segment(c, n).dot(flow::flow_loglik_batch(gen, xs.middleCols(c, n)));
  }
  return std::isfinite(total) ? total : std::numeric_limits<double>::quiet_NaN();
}

// gen = from + fraction * (gen - from), parameter by parameter.
void shrink_towards(flow::FlowGenerator& gen, const flow::FlowGenerator& from, double fraction) {
  for (std::size_t l = 0; l < gen.layers().size(); ++l) {
    for (int which = 0; which < 2; ++which) {
      auto& net = which == 0 ? gen.layers()[l].scale_net : gen.layers()[l].shift_net;
      const auto& old = which == 0 ? from.layers()[l].scale_net : from.layers()[l].shift_net;
      auto dst = net.parameter_blocks();
      const auto src = old.parameter_blocks();
      for (std::size_t b = 0; b < dst.size(); ++b)
        for (std::size_t i = 0; i < dst[b].size(); ++i) dst[b][i] = src[b][i] + fraction * (dst[b][i] - src[b][i]);
    }
  }
}

// Per-generator terms of the un-normalized objective; NaN when non-finite.
Vector generator_terms(const GenHmmModel& model, const WeightedFrames& wf, int threads) {
  Vector terms = Vector::Zero(static_cast<Eigen::Index>(model.generators.size()));
  parallel_chunks(model.generators.size(), static_cast<std::size_t>(threads),
                  [&](std::size_t, std::size_t begin, std::size_t end) {
                    Matrix xs;
                    Vector ws;
                    for (std::size_t g = begin; g < end; ++g) {
                      select_columns(wf, static_cast<Eigen::Index>(g), xs, ws);
                      terms(static_cast<Eigen::Index>(g)) = generator_term(model.generators[g], xs, ws);
                    }
                  });
  return terms;
}

}  // namespace

long generator_gradient(const GenHmmModel& model, std::span<const Frames> data,
                        std::span<const hmm::PosteriorTables> posteriors,
                        std::span<const std::size_t> indices, std::vector<flow::FlowTapes>& tapes,
                        int threads) {
  if (tapes.size() != model.generators.size()) throw ShapeError("one tape set per generator required");
  if (indices.empty()) return 0;
  const WeightedFrames wf = stack_frames(model, data, posteriors, indices);
  if (wf.x.cols() == 0) return 0;

  std::vector<long> skipped(model.generators.size(), 0);
  parallel_chunks(model.generators.size(), static_cast<std::size_t>(threads),
                  [&](std::size_t, std::size_t begin, std::size_t end) {
                    Matrix xs;
                    Vector ws;
                    for (std::size_t g = begin; g < end; ++g) {
                      select_columns(wf, static_cast<Eigen::Index>(g), xs, ws);
                      if (xs.cols() == 0) continue;
                      flow::BatchFlowCache cache;
                      for (Eigen::Index c = 0; c < xs.cols(); c += kChunk) {
                        const Eigen::Index n = std::min(kChunk, xs.cols() - c);
                        flow::flow_loglik_batch(model.generators[g], xs.middleCols(c, n), &cache);
                        skipped[g] += flow::flow_loglik_backward_batch(model.generators[g], cache,
                                                                       ws.segment(c, n), tapes[g]);
                      }
                    }
                  });
  const long total_skipped = std::accumulate(skipped.begin(), skipped.end(), 0L);
  if (total_skipped > 0)
    log_warning(std::to_string(total_skipped) + " non-finite generator gradient term(s) skipped");
  return total_skipped;
}

TrainState make_train_state(const GenHmmModel& model, const TrainConfig& config) {
  config.validate();
  TrainState state;
  state.config = config;
  for (const auto& g : model.generators) state.optimizers.emplace_back(g, config.adam);
  return state;
}

double em_step(GenHmmModel& model, std::span<const Frames> data, TrainState& state) {
  if (data.empty()) throw DataError("EM step needs a non-empty dataset");
  state.config.validate();
  if (state.optimizers.size() != model.generators.size())
    throw ConfigError("train state does not match the model's generators");
  const int iteration = state.iteration;
  const int threads = state.config.threads;
  auto context = [&](const std::string& what) {
    return "GenHMM EM iteration " + std::to_string(iteration) + ": " + what;
  };

  EStepResult old_pass;
  try {
    if (state.cached_estep && state.cached_fingerprint == model.fingerprint()) {
      old_pass = std::move(*state.cached_estep);
    } else {
      old_pass = expectation(model, data, threads);
    }
  } catch (const NumericalError& e) {
    throw NumericalError(context(e.what()));
  }
  state.cached_estep.reset();
  if (std::isnan(state.initial_loglik) && state.history.empty())
    state.initial_loglik = old_pass.average_loglik();
  if (old_pass.stats.sequences() == 0) throw NumericalError(context("every sequence is degenerate"));

  // Gradient ascent on Q(Theta; H_old). Posteriors stay fixed at H_old.
  std::vector<std::size_t> everything(data.size());
  std::iota(everything.begin(), everything.end(), std::size_t{0});
  const WeightedFrames all_frames = stack_frames(model, data, old_pass.posteriors, everything);
  const Vector before = generator_terms(model, all_frames, threads);
  const std::vector<flow::FlowGenerator> previous = model.generators;
  std::vector<flow::FlowTapes> tapes;
  for (const auto& g : model.generators) tapes.emplace_back(g);
  for (int n = 0; n < state.config.inner_batches; ++n) {
    const auto idx = batch_indices(data.size(), state.config, iteration, n);
    const long frames = usable_frames(data, old_pass.posteriors, idx);
    if (frames == 0) continue;
    state.skipped_terms +=
        generator_gradient(model, data, old_pass.posteriors, idx, tapes, threads);
    for (std::size_t g = 0; g < model.generators.size(); ++g) {
      if (tapes[g].count() == 0) continue;
      if (!flow::flow_adam_step(model.generators[g], tapes[g], state.optimizers[g],
                                1.0 / static_cast<double>(frames)))
        ++state.rejected_steps;
    }
  }
  // Q splits into one term per generator: an update that lowered its own
  // term is shortened, then undone, so the likelihood cannot decrease.
  const Vector after = generator_terms(model, all_frames, threads);
  std::vector<char> undone(model.generators.size(), 0);
  parallel_chunks(model.generators.size(), static_cast<std::size_t>(threads),
                  [&](std::size_t, std::size_t begin, std::size_t end) {
                    Matrix xs;
                    Vector ws;
                    for (std::size_t g = begin; g < end; ++g) {
                      const auto i = static_cast<Eigen::Index>(g);
                      if (std::isnan(before(i)) || after(i) >= before(i)) continue;
                      select_columns(all_frames, i, xs, ws);
                      bool fixed = false;
                      for (int halving = 0; halving < kMaxHalvings && !fixed; ++halving) {
                        shrink_towards(model.generators[g], previous[g], 0.5);
                        const double v = generator_term(model.generators[g], xs, ws);
                        fixed = v >= before(i);
                      }
                      if (!fixed) {
                        model.generators[g] = previous[g];
                        undone[g] = 1;
                      }
                    }
                  });
  for (std::size_t g = 0; g < model.generators.size(); ++g) {
    if (!undone[g]) continue;
    state.optimizers[g] = flow::FlowOptimizer(model.generators[g], state.config.adam);
    ++state.rejected_steps;
  }

  model.core.initial = hmm::update_initial(old_pass.stats, model.core.initial);
  model.core.transition = hmm::update_transition(old_pass.stats, model.core.transition);
  model.mixture.weights = hmm::update_mixture(old_pass.stats, model.mixture.weights);

  EStepResult new_pass;
  try {
    new_pass = expectation(model, data, threads);
  } catch (const NumericalError& e) {
    throw NumericalError(context(e.what()));
  }
  const double loglik = new_pass.average_loglik();
  state.degenerate_sequences = new_pass.degenerate;
  state.cached_fingerprint = model.fingerprint();
  state.cached_estep = std::move(new_pass);
  record_iteration(state, loglik, "GenHMM");
  return loglik;
}

void train(GenHmmModel& model, std::span<const Frames> data, TrainState& state,
           const IterationCallback<GenHmmModel>& on_iteration) {
  state.config.validate();
  while (!state.converged && state.iteration < state.config.max_iterations) {
    em_step(model, data, state);
    if (on_iteration && !on_iteration(model, state)) break;
  }
}

int argmax_class(std::span<const double> scores) {
  int best = -1;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (std::isnan(scores[i]) || scores[i] == kNegInf) continue;
    if (best < 0 || scores[i] > scores[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

Classification classify(std::span<const GenHmmModel> models, const Frames& seq, bool per_frame) {
  if (models.empty()) throw ConfigError("classification needs at least one model");
  Classification out;
  for (const auto& m : models) {
    if (m.dim() != models.front().dim()) throw ShapeError("models disagree on the frame dimension");
    const auto score = sequence_loglik(m, seq);
    double v = score.degenerate ? kNegInf : score.loglik;
    if (per_frame && v != kNegInf) v /= static_cast<double>(seq.rows());
    out.scores.push_back(v);
  }
  out.index = argmax_class(out.scores);
  return out;
}

}  // namespace genhmm
