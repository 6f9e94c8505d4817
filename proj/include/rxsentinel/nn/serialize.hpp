#pragma once

#include <string>

#include "rxsentinel/binary_io.hpp"
#include "rxsentinel/nn/mlp.hpp"

namespace rxsentinel::nn {

inline constexpr std::uint32_t kWeightFormatVersion = 1;

/// Container layout: "RXNN", u32 version, u32 layer count, then per layer
/// u64 in, u64 out, u8 activation, f64 dropout, u8 batch_norm, f64 momentum,
/// f64 epsilon, weight (row-major), bias, and with batch norm gamma, beta,
/// running mean, running variance. All floats little-endian IEEE-754.
void write_mlp(ByteWriter& out, const Mlp& net);
/// Throws FormatError on bad magic, unknown version or truncation.
Mlp read_mlp(ByteReader& in);

std::string serialize_mlp(const Mlp& net);
Mlp deserialize_mlp(const std::string& bytes);

}  // namespace rxsentinel::nn
