#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "xfer/types.hpp"

namespace xfer::npy {

enum class Dtype { Float32, Float64 };

struct Header {
  Dtype dtype = Dtype::Float64;
  bool fortran_order = false;
  std::vector<std::size_t> shape;
  std::size_t payload_offset = 0;  // magic + version + length field + dict
};

/// Decoded array. 1-D arrays are promoted to n x 1, values widened to double.
/// No finiteness check: posterior grids legitimately carry -inf.
struct Array {
  Header header;
  Matrix values;
};

Header parse_header(std::span<const std::byte> bytes);
Array decode(std::span<const std::byte> bytes);
Array read(const std::filesystem::path& path);

/// NPY v1.0 encoding of a 2-D matrix in C order; header padded to 64 bytes.
std::vector<std::byte> encode(const Matrix& values, Dtype dtype = Dtype::Float64);
void write(const std::filesystem::path& path, const Matrix& values, Dtype dtype = Dtype::Float64);

}  // namespace xfer::npy

namespace xfer {

/// Loads an NPY file as a validated feature matrix.
FeatureMatrix read_array(const std::filesystem::path& path);
/// Loads an NPY file as a validated T x (V+1) log-posterior grid.
PosteriorGrid read_posterior_grid(const std::filesystem::path& path);

void write_array(const std::filesystem::path& path, const Matrix& values,
                 npy::Dtype dtype = npy::Dtype::Float64);

}  // namespace xfer
