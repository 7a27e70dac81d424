#pragma once

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "ocfl/data.hpp"
#include "ocfl/divergence.hpp"
#include "ocfl/model.hpp"
#include "ocfl/rng.hpp"

namespace ocfl {

struct TrainConfig {
  int local_epochs = 3;
  int batch_size = 32;
  double learning_rate = 0.01;
  uint64_t shuffle_seed = 0;

  void validate() const {
    if (local_epochs < 1) throw std::invalid_argument("TrainConfig: local_epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
      throw std::invalid_argument("TrainConfig: learning_rate must be >= 0");
  }
};

struct LocalReport {
  ClientId client_id = 0;
  int round = 0;
  DeltaVector delta;
  double train_loss = 0.0;  // mean pre-step loss over the final epoch's batches
  double local_f1 = 0.0;    // macro F1 on the client's own test split
};

// Plain SGD for local_epochs passes over the client's training split.
// Epoch order is reshuffled from a private generator seeded by shuffle_seed,
// so distinct clients never share randomness.
inline LocalReport local_update(const ParameterVector& start, const ModelSpec& spec,
                                const ClientDataset& client, const TrainConfig& cfg, int round) {
  cfg.validate();
  client.train.validate();
  client.test.validate();
  if (client.train.count < 1) throw std::invalid_argument("local_update: empty training split");
  if (client.test.count < 1) throw std::invalid_argument("local_update: empty test split");

  ParameterVector params = start;
  Rng rng(cfg.shuffle_seed);
  std::vector<int> order(client.train.count);
  std::iota(order.begin(), order.end(), 0);

  double final_epoch_loss = 0.0;
  for (int epoch = 0; epoch < cfg.local_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    int batches = 0;
    for (int off = 0; off < client.train.count; off += cfg.batch_size) {
      int len = std::min(cfg.batch_size, client.train.count - off);
      std::span<const int> idx(order.data() + off, static_cast<size_t>(len));
      epoch_loss += forward_loss(params, spec, client.train, idx).loss;
      ParameterVector grad = backward(params, spec, client.train, idx);
      for (size_t k = 0; k < params.values.size(); ++k)
        params.values[k] -= cfg.learning_rate * grad.values[k];
      ++batches;
    }
    if (epoch == cfg.local_epochs - 1) final_epoch_loss = epoch_loss / batches;
  }

  LocalReport rep;
  rep.client_id = client.id;
  rep.round = round;
  rep.train_loss = final_epoch_loss;
  rep.delta.client_id = client.id;
  rep.delta.round = round;
  rep.delta.delta.layout = params.layout;
  rep.delta.delta.values.resize(params.values.size());
  for (size_t k = 0; k < params.values.size(); ++k)
    rep.delta.delta.values[k] = params.values[k] - start.values[k];
  rep.local_f1 = macro_f1(predict(params, spec, client.test), client.test.labels, spec.n_classes);
  return rep;
}

}  // namespace ocfl
