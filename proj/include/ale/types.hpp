#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace ale {

// Working scalar for latents, embeddings and attention. Metrics accumulate in
// double regardless.
using Scalar = float;

using Matrix  = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
using Vector  = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using ArrayXX = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
using ArrayX  = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

// Grayscale image, values in [0, 1], row-major semantics (row = y).
using Image = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Binary mask at one resolution. Entries are exactly 0 or 1.
using MaskImage = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

struct Resolution {
  int height = 0;
  int width  = 0;

  bool operator==(const Resolution& o) const {
    return height == o.height && width == o.width;
  }
  bool operator<(const Resolution& o) const {
    return height != o.height ? height < o.height : width < o.width;
  }
  int pixels() const { return height * width; }
};

// Latent tensor: `values` holds one channel per row, pixels flattened
// row-major (p = y * width + x) along columns.
struct Latent {
  int channels = 0;
  int height   = 0;
  int width    = 0;
  Matrix values;  // channels x (height * width)

  static Latent zero(int c, int h, int w) {
    Latent z;
    z.channels = c;
    z.height   = h;
    z.width    = w;
    z.values   = Matrix::Zero(c, h * w);
    return z;
  }
  bool same_shape(const Latent& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }
  Resolution resolution() const { return {height, width}; }
};

// Flattens a mask to a pixel vector matching the latent/attention layout.
inline ArrayX flatten_mask(const MaskImage& m) {
  ArrayX v(m.rows() * m.cols());
  for (int y = 0; y < m.rows(); ++y)
    for (int x = 0; x < m.cols(); ++x)
      v[y * m.cols() + x] = static_cast<Scalar>(m(y, x));
  return v;
}

}  // namespace ale
