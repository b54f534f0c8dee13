#include "blockgcl/encoder.hpp"

#include <cstring>
#include <fstream>
#include <vector>

#include <json.hpp>

namespace blockgcl {

std::string to_string(Activation a) {
    return a == Activation::relu ? "relu" : "identity";
}

Activation activation_from_string(const std::string& s) {
    if (s == "relu") return Activation::relu;
    if (s == "identity") return Activation::identity;
    throw std::invalid_argument("unknown activation: " + s);
}

namespace {

constexpr char kMagic[4] = {'B', 'G', 'C', 'K'};
constexpr int kVersion = 1;

void write_u64_le(std::ostream& out, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t read_u64_le(std::istream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    if (!in) throw std::runtime_error("checkpoint: truncated header");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

} // namespace

void save_checkpoint(const std::filesystem::path& path, const BlockEncoder<double>& enc,
                     std::uint64_t seed) {
    enc.validate();
    nlohmann::json header;
    header["format"] = "BGCK";
    header["version"] = kVersion;
    header["layer_dims"] = enc.layer_dims();
    std::vector<std::string> acts;
    for (const auto& layer : enc.layers) acts.push_back(to_string(layer.activation));
    header["activations"] = acts;
    std::vector<std::vector<std::size_t>> blocks;
    for (const auto& [first, last] : enc.blocks) blocks.push_back({first, last});
    header["blocks"] = blocks;
    header["seed"] = seed;
    const std::string header_bytes = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("checkpoint: cannot open " + path.string() + " for writing");
    out.write(kMagic, 4);
    write_u64_le(out, header_bytes.size());
    out.write(header_bytes.data(), static_cast<std::streamsize>(header_bytes.size()));
    for (const auto& layer : enc.layers) {
        const DenseMatrix<float> w = layer.weight.cast<float>();
        out.write(reinterpret_cast<const char*>(w.data()),
                  static_cast<std::streamsize>(w.rows() * w.cols() * sizeof(float)));
    }
    if (!out) throw std::runtime_error("checkpoint: write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path.string());
    const std::uint64_t header_len = read_u64_le(in);
    std::string header_bytes(header_len, '\0');
    in.read(header_bytes.data(), static_cast<std::streamsize>(header_len));
    if (!in) throw std::runtime_error("checkpoint: truncated header in " + path.string());

    nlohmann::json header = nlohmann::json::parse(header_bytes);
    if (header.at("format") != "BGCK" || header.at("version").get<int>() != kVersion)
        throw std::runtime_error("checkpoint: unsupported format/version in " + path.string());
    const auto dims = header.at("layer_dims").get<std::vector<std::size_t>>();
    const auto acts = header.at("activations").get<std::vector<std::string>>();
    if (dims.size() < 2 || acts.size() + 1 != dims.size())
        throw std::runtime_error("checkpoint: inconsistent header in " + path.string());

    Checkpoint ck;
    ck.seed = header.at("seed").get<std::uint64_t>();
    for (const auto& range : header.at("blocks").get<std::vector<std::vector<std::size_t>>>()) {
        if (range.size() != 2) throw std::runtime_error("checkpoint: malformed block range");
        ck.encoder.blocks.emplace_back(range[0], range[1]);
    }
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        DenseMatrix<float> w(dims[l], dims[l + 1]);
        in.read(reinterpret_cast<char*>(w.data()),
                static_cast<std::streamsize>(w.rows() * w.cols() * sizeof(float)));
        if (!in) throw std::runtime_error("checkpoint: truncated payload in " + path.string());
        ck.encoder.layers.push_back({w.cast<double>(), activation_from_string(acts[l])});
    }
    ck.encoder.validate();
    return ck;
}

} // namespace blockgcl
