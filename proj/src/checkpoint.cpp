#include "lffd/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "lffd/errors.hpp"

namespace lffd {

namespace {

constexpr char kMagic[4] = {'L', 'F', 'F', 'D'};

void put_u32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_f32(std::string& out, float f) {
    put_u32(out, std::bit_cast<std::uint32_t>(f));
}

float get_f32(const unsigned char* p) {
    return std::bit_cast<float>(get_u32(p));
}

} // namespace

void save_checkpoint(const std::filesystem::path& path, const Model<float>& model,
                     const CheckpointMeta& meta) {
    nlohmann::ordered_json header;
    header["arch"] = model.spec.id;
    header["meta"] = {{"epochs", meta.epochs},
                      {"seed", meta.seed},
                      {"final_val_accuracy", meta.final_val_accuracy},
                      {"class_names", meta.class_names}};
    nlohmann::ordered_json dir = nlohmann::ordered_json::array();
    std::int64_t offset = 0;
    std::string payload;
    for_each_tensor<float>(model, [&](const std::string& name, const Tensor<float>& t) {
        nlohmann::ordered_json entry;
        entry["name"] = name;
        entry["shape"] = t.shape();
        entry["offset"] = offset;
        dir.push_back(std::move(entry));
        for (std::int64_t i = 0; i < t.numel(); ++i) put_f32(payload, t[i]);
        offset += t.numel() * 4;
    });
    header["tensors"] = std::move(dir);
    const std::string header_text = header.dump();

    std::string file;
    file.append(kMagic, 4);
    put_u32(file, kCheckpointVersion);
    put_u32(file, static_cast<std::uint32_t>(header_text.size()));
    file += header_text;
    file += payload;

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(file.data(), static_cast<std::streamsize>(file.size()));
    if (!out) throw IoError("failed writing checkpoint '" + path.string() + "'");
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
    std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("failed reading checkpoint '" + path.string() + "'");

    const auto corrupt = [&](const std::string& why) {
        return CheckpointError("checkpoint '" + path.string() + "': " + why);
    };
    const auto* bytes = reinterpret_cast<const unsigned char*>(raw.data());
    if (raw.size() < 12 || std::memcmp(raw.data(), kMagic, 4) != 0)
        throw corrupt("not an LFFD checkpoint");
    const std::uint32_t version = get_u32(bytes + 4);
    if (version != kCheckpointVersion)
        throw corrupt("unsupported format version " + std::to_string(version));
    const std::uint32_t header_len = get_u32(bytes + 8);
    if (raw.size() < 12 + static_cast<std::size_t>(header_len)) throw corrupt("truncated header");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(raw.begin() + 12, raw.begin() + 12 + header_len);
    } catch (const nlohmann::json::exception& e) {
        throw corrupt(std::string("bad header: ") + e.what());
    }

    LoadedCheckpoint result;
    try {
        const std::string arch_id = header.at("arch").get<std::string>();
        ArchSpec spec;
        try {
            spec = arch_from_id(arch_id);
        } catch (const ConfigError& e) {
            throw corrupt(e.what());
        }
        const auto& meta = header.at("meta");
        result.meta.epochs = meta.at("epochs").get<int>();
        result.meta.seed = meta.at("seed").get<std::uint64_t>();
        result.meta.final_val_accuracy = meta.at("final_val_accuracy").get<double>();
        result.meta.class_names = meta.at("class_names").get<std::vector<std::string>>();
        result.model = init_params<float>(spec, result.meta.seed);

        struct DirEntry {
            Shape shape;
            std::int64_t offset;
        };
        std::map<std::string, DirEntry> dir;
        std::int64_t payload_len = 0;
        for (const auto& entry : header.at("tensors")) {
            const std::string name = entry.at("name").get<std::string>();
            DirEntry d{entry.at("shape").get<Shape>(), entry.at("offset").get<std::int64_t>()};
            if (!dir.emplace(name, std::move(d)).second)
                throw corrupt("duplicate tensor '" + name + "'");
            payload_len += shape_numel(dir.at(name).shape) * 4;
        }
        const std::size_t payload_start = 12 + header_len;
        if (raw.size() != payload_start + static_cast<std::size_t>(payload_len))
            throw corrupt("file size does not match tensor directory");

        std::size_t visited = 0;
        for_each_tensor<float>(result.model, [&](const std::string& name, Tensor<float>& t) {
            const auto it = dir.find(name);
            if (it == dir.end()) throw corrupt("missing tensor '" + name + "'");
            if (it->second.shape != t.shape())
                throw corrupt("tensor '" + name + "' has shape " + shape_str(it->second.shape) +
                              ", architecture expects " + shape_str(t.shape()));
            if (it->second.offset < 0 ||
                it->second.offset + t.numel() * 4 > payload_len)
                throw corrupt("tensor '" + name + "' extends past the payload");
            const unsigned char* src =
                bytes + payload_start + static_cast<std::size_t>(it->second.offset);
            for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = get_f32(src + i * 4);
            ++visited;
        });
        if (visited != dir.size()) throw corrupt("tensor directory does not match the architecture");
    } catch (const nlohmann::json::exception& e) {
        throw corrupt(std::string("bad header: ") + e.what());
    }
    return result;
}

} // namespace lffd
