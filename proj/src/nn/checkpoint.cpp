#include "hmptcp/nn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace hmptcp::nn {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'H', 'M', 'P', 'T', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in) {
    T v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw std::runtime_error("checkpoint truncated");
    return v;
}

}  // namespace

void write_tensors(std::ostream& out, std::span<const NamedTensor> tensors) {
    out.write(kMagic, sizeof kMagic);
    put<std::uint32_t>(out, kVersion);
    put<std::uint64_t>(out, tensors.size());
    for (const auto& t : tensors) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
        out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        put<std::uint64_t>(out, t.tensor->rows());
        put<std::uint64_t>(out, t.tensor->cols());
        out.write(reinterpret_cast<const char*>(t.tensor->data()),
                  static_cast<std::streamsize>(t.tensor->size() * sizeof(double)));
    }
    if (!out) throw std::runtime_error("checkpoint write failed");
}

void read_tensors(std::istream& in, std::span<const NamedTensor> tensors) {
    char magic[sizeof kMagic];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
        throw std::runtime_error("not a checkpoint file");
    }
    if (const auto v = get<std::uint32_t>(in); v != kVersion) {
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(v));
    }
    if (const auto n = get<std::uint64_t>(in); n != tensors.size()) {
        throw std::runtime_error("checkpoint holds " + std::to_string(n) + " tensors, expected " +
                                 std::to_string(tensors.size()));
    }
    for (const auto& t : tensors) {
        const auto len = get<std::uint32_t>(in);
        std::string name(len, '\0');
        if (!in.read(name.data(), len)) throw std::runtime_error("checkpoint truncated");
        if (name != t.name) throw std::runtime_error("checkpoint tensor '" + name + "' where '" + t.name + "' expected");
        const auto rows = get<std::uint64_t>(in), cols = get<std::uint64_t>(in);
        if (rows != t.tensor->rows() || cols != t.tensor->cols()) {
            throw std::runtime_error("checkpoint tensor '" + name + "' has shape " + std::to_string(rows) + "x" +
                                     std::to_string(cols) + ", expected " + shape_string(*t.tensor));
        }
        if (!in.read(reinterpret_cast<char*>(t.tensor->data()),
                     static_cast<std::streamsize>(t.tensor->size() * sizeof(double)))) {
            throw std::runtime_error("checkpoint truncated");
        }
    }
}

void save_tensors(const std::filesystem::path& file, std::span<const NamedTensor> tensors) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    write_tensors(out, tensors);
}

void load_tensors(const std::filesystem::path& file, std::span<const NamedTensor> tensors) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + file.string());
    read_tensors(in, tensors);
}

}  // namespace hmptcp::nn
