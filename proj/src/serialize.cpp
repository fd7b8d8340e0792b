#include "fedtst/serialize.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "fedtst/errors.hpp"
#include "fedtst/tensor.hpp"

namespace fedtst {

namespace {

constexpr char kCheckpointMagic[8] = {'F', 'T', 'C', 'K', 'P', 'T', '0', '1'};
constexpr char kWireMagic[8] = {'F', 'T', 'W', 'I', 'R', 'E', '0', '1'};

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    out.insert(out.end(), raw, raw + sizeof(T));
}

template <typename T>
T get(std::span<const std::uint8_t> in, std::size_t& offset) {
    if (offset + sizeof(T) > in.size()) {
        throw IoError("wire message truncated");
    }
    T value;
    std::memcpy(&value, in.data() + offset, sizeof(T));
    offset += sizeof(T);
    return value;
}

void write_bytes(std::ofstream& out, const void* data, std::size_t n) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

template <typename T>
void write_value(std::ofstream& out, T value) {
    write_bytes(out, &value, sizeof(T));
}

template <typename T>
T read_value(std::ifstream& in, const std::string& path) {
    T value;
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw IoError("truncated checkpoint: " + path);
    return value;
}

std::size_t q16_payload_bytes(std::size_t n) {
    const std::size_t full = n / kQuantBlock;
    const std::size_t rest = n % kQuantBlock;
    std::size_t bytes = full * (8 + 2 * kQuantBlock);
    if (rest > 0) bytes += 8 + 2 * rest;
    return bytes;
}

void encode_q16_block(std::vector<std::uint8_t>& out, std::span<const double> block) {
    double lo = block[0], hi = block[0];
    for (double v : block) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const float lo32 = static_cast<float>(lo);
    // Derive the step from the float32 minimum actually transmitted so the
    // largest code still reaches the top of the range after rounding.
    const double span = hi - static_cast<double>(lo32);
    const float step32 = static_cast<float>(span > 0.0 ? span / 65535.0 : 0.0);
    put(out, lo32);
    put(out, step32);
    const double step = static_cast<double>(step32);
    for (double v : block) {
        std::uint16_t code = 0;
        if (step > 0.0) {
            const double scaled = (v - static_cast<double>(lo32)) / step;
            const double clamped = std::min(65535.0, std::max(0.0, scaled));
            code = static_cast<std::uint16_t>(std::lround(clamped));
        }
        put(out, code);
    }
}

}  // namespace

void save_params(const std::string& path, const ParamSet& params) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);

    write_bytes(out, kCheckpointMagic, sizeof(kCheckpointMagic));
    write_value<std::uint32_t>(out, 1);  // version
    write_value<std::uint32_t>(out, static_cast<std::uint32_t>(params.tensor_count()));
    for (const auto& [name, tensor] : params) {
        write_value<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
        write_bytes(out, name.data(), name.size());
        write_value<std::uint32_t>(out, static_cast<std::uint32_t>(tensor.rank()));
        for (std::size_t dim : tensor.shape()) {
            write_value<std::uint64_t>(out, static_cast<std::uint64_t>(dim));
        }
    }
    for (const auto& [name, tensor] : params) {
        for (double v : tensor.values()) {
            write_value<float>(out, static_cast<float>(v));
        }
    }
    out.flush();
    if (!out) throw IoError("write failed: " + path);
}

ParamSet load_params(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);

    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
        throw IoError("not a checkpoint file: " + path);
    }
    const auto version = read_value<std::uint32_t>(in, path);
    if (version != 1) throw IoError("unsupported checkpoint version: " + path);
    const auto count = read_value<std::uint32_t>(in, path);

    std::vector<std::pair<std::string, std::vector<std::size_t>>> specs;
    specs.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto name_len = read_value<std::uint32_t>(in, path);
        if (name_len == 0 || name_len > 4096) {
            throw IoError("implausible tensor name length: " + path);
        }
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (!in) throw IoError("truncated checkpoint: " + path);
        const auto rank = read_value<std::uint32_t>(in, path);
        if (rank == 0 || rank > 8) throw IoError("implausible tensor rank: " + path);
        std::vector<std::size_t> shape(rank);
        for (auto& dim : shape) {
            dim = static_cast<std::size_t>(read_value<std::uint64_t>(in, path));
            if (dim == 0) throw IoError("zero dimension in checkpoint: " + path);
        }
        specs.emplace_back(std::move(name), std::move(shape));
    }

    ParamSet params;
    for (auto& [name, shape] : specs) {
        std::size_t n = 1;
        for (std::size_t dim : shape) n *= dim;
        std::vector<double> values(n);
        for (double& v : values) {
            v = static_cast<double>(read_value<float>(in, path));
        }
        params.add(name, Tensor::from_data(shape, std::move(values)));
    }
    return params;
}

std::size_t wire_bytes(std::size_t n_elements, WireFormat format) {
    switch (format) {
        case WireFormat::fp32:
            return kWireHeaderBytes + 4 * n_elements;
        case WireFormat::q16:
            return kWireHeaderBytes + q16_payload_bytes(n_elements);
    }
    throw ConfigError("wire_bytes: unknown format");
}

double compression_ratio(std::size_t n_elements) {
    return static_cast<double>(wire_bytes(n_elements, WireFormat::q16)) /
           static_cast<double>(wire_bytes(n_elements, WireFormat::fp32));
}

std::vector<std::uint8_t> pack_update(std::span<const double> values, WireFormat format) {
    if (values.empty()) throw DataError("pack_update: empty payload");
    for (double v : values) {
        if (!std::isfinite(v)) throw DataError("pack_update: non-finite value");
    }

    std::vector<std::uint8_t> out;
    out.reserve(wire_bytes(values.size(), format));
    out.resize(kWireHeaderBytes, 0);  // fixed envelope, zero padded
    std::memcpy(out.data(), kWireMagic, sizeof(kWireMagic));
    const auto format_raw = static_cast<std::uint32_t>(format);
    std::memcpy(out.data() + 8, &format_raw, sizeof(format_raw));
    const auto count_raw = static_cast<std::uint64_t>(values.size());
    std::memcpy(out.data() + 12, &count_raw, sizeof(count_raw));
    const auto payload =
        static_cast<std::uint64_t>(wire_bytes(values.size(), format) - kWireHeaderBytes);
    std::memcpy(out.data() + 20, &payload, sizeof(payload));

    if (format == WireFormat::fp32) {
        for (double v : values) put(out, static_cast<float>(v));
    } else {
        for (std::size_t i = 0; i < values.size(); i += kQuantBlock) {
            const std::size_t len = std::min(kQuantBlock, values.size() - i);
            encode_q16_block(out, values.subspan(i, len));
        }
    }
    if (out.size() != wire_bytes(values.size(), format)) {
        throw NumericError("pack_update: size accounting mismatch");
    }
    return out;
}

std::vector<double> unpack_update(std::span<const std::uint8_t> message) {
    std::size_t off = 0;
    if (message.size() < kWireHeaderBytes ||
        std::memcmp(message.data(), kWireMagic, sizeof(kWireMagic)) != 0) {
        throw IoError("unpack_update: bad envelope");
    }
    off = sizeof(kWireMagic);
    const auto format_raw = get<std::uint32_t>(message, off);
    const auto n = static_cast<std::size_t>(get<std::uint64_t>(message, off));
    const auto payload = static_cast<std::size_t>(get<std::uint64_t>(message, off));
    if (format_raw != static_cast<std::uint32_t>(WireFormat::fp32) &&
        format_raw != static_cast<std::uint32_t>(WireFormat::q16)) {
        throw IoError("unpack_update: unknown format");
    }
    const WireFormat format = static_cast<WireFormat>(format_raw);
    if (n == 0 || message.size() != wire_bytes(n, format) ||
        payload != message.size() - kWireHeaderBytes) {
        throw IoError("unpack_update: size mismatch");
    }
    off = kWireHeaderBytes;

    std::vector<double> values;
    values.reserve(n);
    if (format == WireFormat::fp32) {
        for (std::size_t i = 0; i < n; ++i) {
            values.push_back(static_cast<double>(get<float>(message, off)));
        }
    } else {
        std::size_t remaining = n;
        while (remaining > 0) {
            const std::size_t len = std::min(kQuantBlock, remaining);
            const double lo = static_cast<double>(get<float>(message, off));
            const double step = static_cast<double>(get<float>(message, off));
            for (std::size_t i = 0; i < len; ++i) {
                const auto code = get<std::uint16_t>(message, off);
                values.push_back(lo + static_cast<double>(code) * step);
            }
            remaining -= len;
        }
    }
    return values;
}

}  // namespace fedtst
