#pragma once

#include <stdexcept>
#include <vector>

#include "ocfl/tensor.hpp"

namespace ocfl {

// Dense labeled sample block; features row-major (count x dim).
struct LabeledData {
  int count = 0;
  int dim = 0;
  std::vector<double> features;
  std::vector<int> labels;

  std::span<const double> row(int i) const {
    return {features.data() + static_cast<size_t>(i) * dim, static_cast<size_t>(dim)};
  }

  void push_row(std::span<const double> x, int label) {
    features.insert(features.end(), x.begin(), x.end());
    labels.push_back(label);
    ++count;
  }

  void validate() const {
    if (count < 0 || dim <= 0) throw std::invalid_argument("LabeledData: bad shape");
    if (static_cast<size_t>(count) * dim != features.size() ||
        static_cast<size_t>(count) != labels.size())
      throw std::invalid_argument("LabeledData: inconsistent buffer sizes");
  }
};

struct ClientDataset {
  ClientId id = 0;
  int source_dist = 0;  // data-generating distribution this client draws from
  LabeledData train;
  LabeledData test;
};

struct OrchestratorTestSet {
  LabeledData data;
};

}  // namespace ocfl
