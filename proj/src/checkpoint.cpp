#include "lsi/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace lsi {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint writer assumes little-endian host");

constexpr char kMagic[4] = {'L', 'S', 'I', '1'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void write_pod(std::ofstream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T read_pod(std::ifstream& in, const std::string& path) {
    T value{};
    if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) throw IoError("truncated checkpoint " + path);
    return value;
}

} // namespace

void save_checkpoint(const std::string& path, const NamedTensors& entries) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create checkpoint " + path);
    out.write(kMagic, 4);
    write_pod(out, kVersion);
    write_pod(out, static_cast<std::uint32_t>(entries.size()));
    for (const auto& [name, tensor] : entries) {
        if (!tensor.defined()) throw UsageError("checkpoint entry '" + name + "' is undefined");
        if (name.empty() || name.size() > 0xFFFF) throw UsageError("checkpoint entry name length invalid");
        write_pod(out, static_cast<std::uint16_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_pod(out, static_cast<std::uint8_t>(0)); // dtype f32
        const auto& shape = tensor.shape();
        write_pod(out, static_cast<std::uint8_t>(shape.size()));
        for (int dim : shape) write_pod(out, static_cast<std::uint32_t>(dim));
        for (double v : tensor.values()) write_pod(out, static_cast<float>(v));
    }
    if (!out) throw IoError("short write to checkpoint " + path);
}

std::map<std::string, Tensor> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path);
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw IoError(path + " is not a checkpoint file");
    const auto version = read_pod<std::uint32_t>(in, path);
    if (version != kVersion) throw IoError("unsupported checkpoint version " + std::to_string(version));
    const auto count = read_pod<std::uint32_t>(in, path);

    std::map<std::string, Tensor> out;
    for (std::uint32_t e = 0; e < count; ++e) {
        const auto name_len = read_pod<std::uint16_t>(in, path);
        std::string name(name_len, '\0');
        if (!in.read(name.data(), name_len)) throw IoError("truncated checkpoint " + path);
        const auto dtype = read_pod<std::uint8_t>(in, path);
        if (dtype != 0) throw IoError("unknown dtype in checkpoint entry '" + name + "'");
        const auto rank = read_pod<std::uint8_t>(in, path);
        Shape shape(rank);
        std::size_t numel = 1;
        for (int i = 0; i < rank; ++i) {
            shape[static_cast<std::size_t>(i)] = static_cast<int>(read_pod<std::uint32_t>(in, path));
            numel *= static_cast<std::size_t>(shape[static_cast<std::size_t>(i)]);
        }
        std::vector<double> data(numel);
        for (std::size_t i = 0; i < numel; ++i) data[i] = static_cast<double>(read_pod<float>(in, path));
        if (out.count(name)) throw IoError("duplicate checkpoint entry '" + name + "'");
        out.emplace(name, Tensor::from_data(std::move(shape), std::move(data)));
    }
    return out;
}

void load_into(const std::map<std::string, Tensor>& loaded, const NamedTensors& params) {
    for (const auto& [name, param] : params) {
        const auto it = loaded.find(name);
        if (it == loaded.end()) throw IoError("checkpoint is missing entry '" + name + "'");
        if (it->second.shape() != param.shape()) throw IoError("checkpoint entry '" + name + "' has the wrong shape");
        Tensor target = param;
        auto dst = target.raw_values();
        const auto src = it->second.values();
        std::copy(src.begin(), src.end(), dst.begin());
    }
}

void put_meta(NamedTensors& entries, const std::string& key, double value) {
    entries.emplace_back("meta." + key, Tensor::from_data({1}, {value}));
}

double get_meta(const std::map<std::string, Tensor>& loaded, const std::string& key) {
    const auto it = loaded.find("meta." + key);
    if (it == loaded.end()) throw IoError("checkpoint is missing metadata '" + key + "'");
    return it->second.item();
}

bool has_meta(const std::map<std::string, Tensor>& loaded, const std::string& key) {
    return loaded.count("meta." + key) > 0;
}

} // namespace lsi
