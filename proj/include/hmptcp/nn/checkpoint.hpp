#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>

#include "hmptcp/nn/matrix.hpp"

namespace hmptcp::nn {

struct NamedTensor {
    std::string name;
    Matrix* tensor;
};

/// Binary layout: "HMPTCKPT", u32 version, u64 count, then per tensor
/// u32 name length, name bytes, u64 rows, u64 cols, rows*cols little-endian doubles.
void write_tensors(std::ostream& out, std::span<const NamedTensor> tensors);

/// Reads into the given tensors, which must match the file in order, name and
/// shape. Throws std::runtime_error on any mismatch or truncation.
void read_tensors(std::istream& in, std::span<const NamedTensor> tensors);

void save_tensors(const std::filesystem::path& file, std::span<const NamedTensor> tensors);
void load_tensors(const std::filesystem::path& file, std::span<const NamedTensor> tensors);

}  // namespace hmptcp::nn
