#include "avsl/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <string>

namespace avsl {

namespace {

constexpr std::uint8_t kMagic[4] = {0x41, 0x56, 0x53, 0x54}; // "AVST"
constexpr std::uint8_t kVersion = 1;
constexpr std::uint8_t kDtypeF64 = 0;

void put_u64_le(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

std::uint64_t get_u64_le(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    }
    return v;
}

} // namespace

Tensor::Tensor(std::vector<std::uint64_t> dims_) : dims(std::move(dims_)) {
    data.assign(element_count(), 0.0);
}

std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
    if (t.data.size() != t.element_count()) {
        raise(ErrorKind::size_mismatch,
              "encode_tensor: payload holds " + std::to_string(t.data.size()) +
                  " values, dims imply " + std::to_string(t.element_count()));
    }
    if (t.dims.size() > 255) {
        raise(ErrorKind::config_error, "encode_tensor: ndim exceeds u8");
    }
    std::vector<std::uint8_t> out;
    out.reserve(8 + 8 * t.dims.size() + 8 * t.data.size());
    out.insert(out.end(), kMagic, kMagic + 4);
    out.push_back(kVersion);
    out.push_back(kDtypeF64);
    out.push_back(static_cast<std::uint8_t>(t.dims.size()));
    out.push_back(0); // reserved
    for (std::uint64_t d : t.dims) put_u64_le(out, d);
    for (double v : t.data) put_u64_le(out, std::bit_cast<std::uint64_t>(v));
    return out;
}

Tensor decode_tensor(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 8) {
        raise(ErrorKind::truncated_file, "AVST header truncated: file shorter than 8 bytes");
    }
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
        raise(ErrorKind::bad_magic, "AVST magic mismatch: first four bytes are not 'AVST'");
    }
    if (bytes[4] != kVersion) {
        raise(ErrorKind::bad_version,
              "AVST version field is " + std::to_string(bytes[4]) + ", expected 1");
    }
    if (bytes[5] != kDtypeF64) {
        raise(ErrorKind::bad_version,
              "AVST dtype field is " + std::to_string(bytes[5]) + ", expected 0 (f64)");
    }
    const std::size_t ndim = bytes[6];
    const std::size_t header = 8 + 8 * ndim;
    if (bytes.size() < header) {
        raise(ErrorKind::truncated_file, "AVST dims field truncated");
    }
    Tensor t;
    t.dims.resize(ndim);
    for (std::size_t i = 0; i < ndim; ++i) {
        t.dims[i] = get_u64_le(bytes.data() + 8 + 8 * i);
    }
    const std::size_t expected = t.element_count();
    const std::size_t available = (bytes.size() - header) / 8;
    if (bytes.size() - header < expected * 8) {
        raise(ErrorKind::truncated_file,
              "AVST payload truncated: dims imply " + std::to_string(expected) +
                  " values, file holds " + std::to_string(available));
    }
    if (bytes.size() - header > expected * 8) {
        raise(ErrorKind::size_mismatch,
              "AVST payload size mismatch: dims imply " + std::to_string(expected) +
                  " values, file holds more bytes");
    }
    t.data.resize(expected);
    for (std::size_t i = 0; i < expected; ++i) {
        t.data[i] = std::bit_cast<double>(get_u64_le(bytes.data() + header + 8 * i));
    }
    return t;
}

void write_tensor(const std::filesystem::path& path, const Tensor& t) {
    const std::vector<std::uint8_t> bytes = encode_tensor(t);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        raise(ErrorKind::io, "cannot open for write: " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        raise(ErrorKind::io, "write failed: " + path.string());
    }
}

Tensor read_tensor(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        raise(ErrorKind::io, "cannot open for read: " + path.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return decode_tensor(bytes);
}

} // namespace avsl
