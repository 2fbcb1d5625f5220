#include "lsg/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace lsg {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[4] = {'L', 'S', 'G', '1'};

template <class T>
void write_f32(std::ofstream& out, const Tensor<T>& t) {
    if constexpr (std::is_same_v<T, float>) {
        out.write(reinterpret_cast<const char*>(t.ptr()),
                  static_cast<std::streamsize>(t.numel() * sizeof(float)));
    } else {
        std::vector<float> buf(t.numel());
        for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = static_cast<float>(t.data[i]);
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size() * sizeof(float)));
    }
}

template <class T>
Tensor<T> read_f32(std::ifstream& in, const std::vector<int>& shape,
                   const std::filesystem::path& path) {
    std::vector<float> buf(Tensor<float>::numel_of(shape));
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(buf.size() * sizeof(float)))
        throw DataError("checkpoint truncated: " + path.string());
    Tensor<T> t(shape);
    for (std::size_t i = 0; i < buf.size(); ++i) t.data[i] = static_cast<T>(buf[i]);
    return t;
}

} // namespace

template <class T>
void save_checkpoint(const std::filesystem::path& path, const ParamStore<T>& store,
                     bool include_optimizer_state, long adam_step) {
    nlohmann::ordered_json header;
    header["dtype"] = "f32";
    header["optimizer_state"] = include_optimizer_state;
    header["adam_step"] = adam_step;
    auto params = nlohmann::ordered_json::array();
    for (const auto& p : store.params) {
        params.push_back({{"name", p->name}, {"shape", p->value.shape}});
    }
    header["params"] = params;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    const std::string header_str = header.dump();
    const std::uint32_t len = static_cast<std::uint32_t>(header_str.size());
    out.write(kMagic, 4);
    out.write(reinterpret_cast<const char*>(&len), 4);
    out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
    for (const auto& p : store.params) {
        write_f32(out, p->value);
        if (include_optimizer_state) {
            Tensor<T> m = p->adam_m.data.empty() ? Tensor<T>(p->value.shape) : p->adam_m;
            Tensor<T> v = p->adam_v.data.empty() ? Tensor<T>(p->value.shape) : p->adam_v;
            write_f32(out, m);
            write_f32(out, v);
        }
    }
    if (!out) throw DataError("short write: " + path.string());
}

template <class T>
LoadedCheckpoint<T> load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open: " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw DataError("not an LSG1 checkpoint: " + path.string());
    std::uint32_t len = 0;
    in.read(reinterpret_cast<char*>(&len), 4);
    if (!in) throw DataError("checkpoint truncated: " + path.string());
    std::string header_str(len, '\0');
    in.read(header_str.data(), len);
    if (in.gcount() != static_cast<std::streamsize>(len))
        throw DataError("checkpoint truncated: " + path.string());

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_str);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("bad checkpoint header in " + path.string() + ": " + e.what());
    }
    if (header.value("dtype", "") != "f32")
        throw DataError("unsupported checkpoint dtype in " + path.string());

    LoadedCheckpoint<T> loaded;
    loaded.has_optimizer_state = header.value("optimizer_state", false);
    loaded.adam_step = header.value("adam_step", 0L);
    for (const auto& pj : header.at("params")) {
        const std::string name = pj.at("name").get<std::string>();
        const std::vector<int> shape = pj.at("shape").get<std::vector<int>>();
        auto& p = loaded.store.add(name, read_f32<T>(in, shape, path));
        if (loaded.has_optimizer_state) {
            p.adam_m = read_f32<T>(in, shape, path);
            p.adam_v = read_f32<T>(in, shape, path);
        }
    }
    return loaded;
}

template void save_checkpoint<float>(const std::filesystem::path&, const ParamStore<float>&,
                                     bool, long);
template void save_checkpoint<double>(const std::filesystem::path&, const ParamStore<double>&,
                                      bool, long);
template LoadedCheckpoint<float> load_checkpoint<float>(const std::filesystem::path&);
template LoadedCheckpoint<double> load_checkpoint<double>(const std::filesystem::path&);

} // namespace lsg
