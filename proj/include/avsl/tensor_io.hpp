#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "avsl/errors.hpp"

namespace avsl {

// In-memory value of an AVST file: double payload, row-major.
struct Tensor {
    std::vector<std::uint64_t> dims;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::uint64_t> dims_);

    std::size_t element_count() const {
        std::size_t n = 1;
        for (std::uint64_t d : dims) n *= static_cast<std::size_t>(d);
        return n;
    }

    bool operator==(const Tensor& other) const = default;
};

// AVST container: magic "AVST", version u8=1, dtype u8 (0 = 64-bit float),
// ndim u8, reserved u8=0, ndim x u64 little-endian dims, little-endian
// payload. Byte layout is fixed regardless of host endianness.
void write_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor read_tensor(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_tensor(const Tensor& t);
Tensor decode_tensor(const std::vector<std::uint8_t>& bytes);

} // namespace avsl
