#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ocfl/data.hpp"

namespace ocfl {

struct IdxError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IdxBadMagic : IdxError {
  using IdxError::IdxError;
};
struct IdxTruncated : IdxError {
  using IdxError::IdxError;
};
struct IdxCountMismatch : IdxError {
  using IdxError::IdxError;
};

namespace detail {

inline uint32_t read_be32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw IdxTruncated("idx: truncated header in " + path);
  return (uint32_t(b[0]) << 24) | (uint32_t(b[1]) << 16) | (uint32_t(b[2]) << 8) | uint32_t(b[3]);
}

}  // namespace detail

// Reads a big-endian IDX image/label file pair (the MNIST container format).
// Pixels are scaled to [0,1] by 1/255; feature dim is rows*cols, row-major.
inline LabeledData load_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw IdxError("idx: cannot open " + images_path);
  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw IdxError("idx: cannot open " + labels_path);

  uint32_t img_magic = detail::read_be32(img, images_path);
  if (img_magic != 0x00000803u)
    throw IdxBadMagic("idx: bad image magic in " + images_path);
  uint32_t n_img = detail::read_be32(img, images_path);
  uint32_t rows = detail::read_be32(img, images_path);
  uint32_t cols = detail::read_be32(img, images_path);

  uint32_t lab_magic = detail::read_be32(lab, labels_path);
  if (lab_magic != 0x00000801u)
    throw IdxBadMagic("idx: bad label magic in " + labels_path);
  uint32_t n_lab = detail::read_be32(lab, labels_path);

  if (n_img != n_lab)
    throw IdxCountMismatch("idx: image count " + std::to_string(n_img) +
                           " does not match label count " + std::to_string(n_lab));

  size_t pixels = static_cast<size_t>(n_img) * rows * cols;
  std::vector<unsigned char> raw(pixels);
  if (!img.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(pixels)))
    throw IdxTruncated("idx: truncated image payload in " + images_path);
  std::vector<unsigned char> raw_labels(n_lab);
  if (!lab.read(reinterpret_cast<char*>(raw_labels.data()), static_cast<std::streamsize>(n_lab)))
    throw IdxTruncated("idx: truncated label payload in " + labels_path);

  LabeledData out;
  out.count = static_cast<int>(n_img);
  out.dim = static_cast<int>(rows * cols);
  out.features.resize(pixels);
  for (size_t i = 0; i < pixels; ++i) out.features[i] = raw[i] / 255.0;
  out.labels.assign(raw_labels.begin(), raw_labels.end());
  return out;
}

}  // namespace ocfl
