#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ocfl {

using ClientId = int;

struct LayoutEntry {
  std::string name;
  std::vector<int> dims;
};

// Ordered layer layout. Flattening concatenates entries in order, each tensor
// stored row-major, so a layout pins a unique coordinate for every parameter.
struct Layout {
  std::vector<LayoutEntry> entries;

  static long entry_size(const LayoutEntry& e) {
    long s = 1;
    for (int d : e.dims) s *= d;
    return s;
  }

  long total_size() const {
    long t = 0;
    for (const auto& e : entries) t += entry_size(e);
    return t;
  }

  bool operator==(const Layout& o) const {
    if (entries.size() != o.entries.size()) return false;
    for (size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].name != o.entries[i].name || entries[i].dims != o.entries[i].dims)
        return false;
    }
    return true;
  }
};

struct Tensor {
  std::string name;
  std::vector<int> dims;
  std::vector<double> values;  // row-major
};

using TensorSet = std::vector<Tensor>;

struct ParameterVector {
  Layout layout;
  std::vector<double> values;

  long size() const { return static_cast<long>(values.size()); }
};

inline void check_finite(std::span<const double> v, const std::string& what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw std::invalid_argument("non-finite value in " + what);
  }
}

inline ParameterVector flatten(const TensorSet& ts) {
  ParameterVector pv;
  for (const auto& t : ts) {
    LayoutEntry e{t.name, t.dims};
    long want = Layout::entry_size(e);
    if (want != static_cast<long>(t.values.size()))
      throw std::invalid_argument("flatten: shape mismatch in layer " + t.name);
    check_finite(t.values, "layer " + t.name);
    pv.layout.entries.push_back(std::move(e));
    pv.values.insert(pv.values.end(), t.values.begin(), t.values.end());
  }
  return pv;
}

inline TensorSet unflatten(const ParameterVector& pv) {
  if (pv.layout.total_size() != pv.size())
    throw std::invalid_argument("unflatten: value count does not match layout");
  TensorSet ts;
  long off = 0;
  for (const auto& e : pv.layout.entries) {
    long sz = Layout::entry_size(e);
    Tensor t{e.name, e.dims, std::vector<double>(pv.values.begin() + off, pv.values.begin() + off + sz)};
    ts.push_back(std::move(t));
    off += sz;
  }
  return ts;
}

// span over one named layer inside a flat parameter vector
inline std::span<double> layer_span(ParameterVector& pv, const std::string& name) {
  long off = 0;
  for (const auto& e : pv.layout.entries) {
    long sz = Layout::entry_size(e);
    if (e.name == name) return {pv.values.data() + off, static_cast<size_t>(sz)};
    off += sz;
  }
  throw std::invalid_argument("layer_span: no layer named " + name);
}

inline std::span<const double> layer_span(const ParameterVector& pv, const std::string& name) {
  long off = 0;
  for (const auto& e : pv.layout.entries) {
    long sz = Layout::entry_size(e);
    if (e.name == name) return {pv.values.data() + off, static_cast<size_t>(sz)};
    off += sz;
  }
  throw std::invalid_argument("layer_span: no layer named " + name);
}

}  // namespace ocfl
