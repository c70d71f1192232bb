#include "ppm/nn/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace ppm::nn {

namespace {
constexpr char kMagic[8] = {'P', 'P', 'M', 'C', 'K', 'P', 'T', '1'};
}

void save_checkpoint(const std::string& path, const nlohmann::json& meta, const ParamStore& params,
                     const ParamStore& buffers) {
    nlohmann::json tensors = nlohmann::json::array();
    auto list = [&tensors](const ParamStore& store, const char* kind) {
        for (const auto& [name, t] : store.entries())
            tensors.push_back({{"name", name}, {"rows", t.rows()}, {"cols", t.cols()}, {"kind", kind}});
    };
    list(params, "param");
    list(buffers, "buffer");

    nlohmann::json header{{"format", "PPMCKPT1"}, {"meta", meta}, {"tensors", tensors}};
    std::string hs = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    out.write(kMagic, 8);
    std::uint32_t len = static_cast<std::uint32_t>(hs.size());
    out.write(reinterpret_cast<const char*>(&len), 4);
    out.write(hs.data(), len);
    auto dump = [&out](const ParamStore& store) {
        for (const auto& [name, t] : store.entries())
            out.write(reinterpret_cast<const char*>(t.values().data()),
                      static_cast<std::streamsize>(t.values().size() * sizeof(double)));
    };
    dump(params);
    dump(buffers);
    if (!out) throw DataError("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) throw DataError("not a checkpoint: " + path);
    std::uint32_t len = 0;
    in.read(reinterpret_cast<char*>(&len), 4);
    std::string hs(len, '\0');
    in.read(hs.data(), len);
    if (!in) throw DataError("checkpoint: truncated header");
    nlohmann::json header = nlohmann::json::parse(hs);

    Checkpoint ck;
    ck.meta = header.at("meta");
    for (const auto& t : header.at("tensors")) {
        int rows = t.at("rows").get<int>();
        int cols = t.at("cols").get<int>();
        bool is_param = t.at("kind").get<std::string>() == "param";
        Tensor tensor = Tensor::zeros(rows, cols, is_param);
        in.read(reinterpret_cast<char*>(tensor.values().data()),
                static_cast<std::streamsize>(tensor.values().size() * sizeof(double)));
        if (!in) throw DataError("checkpoint: truncated tensor data");
        (is_param ? ck.params : ck.buffers).put(t.at("name").get<std::string>(), std::move(tensor));
    }
    return ck;
}

}  // namespace ppm::nn
