#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fedtst/params.hpp"

namespace fedtst {

// ---------------------------------------------------------------------------
// Checkpoints: named tensors in a little-endian binary file.
// Layout: 8-byte magic, u32 version, u32 tensor count, then per tensor a u32
// name length, the name bytes, a u32 rank and u64 dims, then every tensor's
// values as float32 in canonical (sorted-name) order.
// ---------------------------------------------------------------------------

/// Throws IoError on filesystem failure.
void save_params(const std::string& path, const ParamSet& params);

/// Throws IoError on filesystem failure or a malformed/truncated file.
ParamSet load_params(const std::string& path);

// ---------------------------------------------------------------------------
// Wire encodings for simulated network transfers. Every message is a fixed
// 64-byte envelope (magic, format id, element count, payload size; zero
// padded) followed by the payload, so message sizes are a deterministic
// function of the element count alone.
//
// Uploads carry client deltas as raw float32 (4 bytes per element).
// Downloads carry the broadcast model quantized to 16 bits: values are cut
// into blocks of 8, each block packed as its float32 minimum and float32
// quantization step followed by 8 uint16 codes — 24 bytes per full block,
// i.e. 3/4 of the float32 size.
// ---------------------------------------------------------------------------

inline constexpr std::size_t kWireHeaderBytes = 64;
inline constexpr std::size_t kQuantBlock = 8;

enum class WireFormat : std::uint32_t {
    fp32 = 1,
    q16 = 2,
};

/// Envelope + payload. Throws DataError on an empty or non-finite input.
std::vector<std::uint8_t> pack_update(std::span<const double> values, WireFormat format);

/// Inverse of pack_update. Throws IoError on a malformed message.
std::vector<double> unpack_update(std::span<const std::uint8_t> message);

/// Message sizes without materializing the bytes.
std::size_t wire_bytes(std::size_t n_elements, WireFormat format);

/// q16 size over fp32 size for the same element count.
double compression_ratio(std::size_t n_elements);

}  // namespace fedtst
