#include "aeat/io/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "aeat/io/config.hpp"

namespace aeat::io {

namespace {

constexpr char kMagic[5] = {'A', 'E', 'A', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::string& out, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
}

class Reader {
public:
    explicit Reader(const std::string& s) : s_(s) {}

    template <typename T>
    T get() {
        need(sizeof(T));
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s_[pos_ + i])) << (8 * i);
        pos_ += sizeof(T);
        return static_cast<T>(v);
    }
    std::string bytes(std::size_t n) {
        need(n);
        std::string out = s_.substr(pos_, n);
        pos_ += n;
        return out;
    }
    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return s_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (s_.size() - pos_ < n) throw CheckpointError("checkpoint: truncated file (checksum region missing)");
    }
    const std::string& s_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const Checkpoint& ck) {
    std::string out(kMagic, sizeof kMagic);
    put<std::uint32_t>(out, kVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(ck.kind));
    const auto& m = ck.model;
    for (std::size_t v : {m.T, m.d, m.heads, m.layers, m.d_in, m.env_dim, m.ffn_mult}) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(v));
    }
    put<std::uint32_t>(out, ck.enc_layers);
    put<std::uint32_t>(out, ck.dec_layers);
    put<std::uint8_t>(out, m.positional);
    put<std::uint8_t>(out, m.env_conditioning);
    put<std::uint64_t>(out, ck.config_hash);
    put<std::uint64_t>(out, ck.seed);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(ck.params.size()));
    std::uint64_t offset = 0;
    for (const auto& e : ck.params.entries()) {
        if (e.name.size() > 0xffff) throw CheckpointError("checkpoint: parameter name too long");
        put<std::uint16_t>(out, static_cast<std::uint16_t>(e.name.size()));
        out += e.name;
        put<std::uint32_t>(out, static_cast<std::uint32_t>(e.value.rows));
        put<std::uint32_t>(out, static_cast<std::uint32_t>(e.value.cols));
        put<std::uint64_t>(out, offset);
        offset += 4 * e.value.size();
    }
    put<std::uint64_t>(out, offset);
    std::string payload;
    payload.reserve(offset);
    for (const auto& e : ck.params.entries()) {
        for (double v : e.value.data) put<std::uint32_t>(payload, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
    out += payload;
    put<std::uint64_t>(out, fnv1a64(payload.data(), payload.size()));
    return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
    Reader r(bytes);
    if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
        throw CheckpointError("checkpoint: bad magic");
    }
    r.bytes(sizeof kMagic);
    if (const auto v = r.get<std::uint32_t>(); v != kVersion) {
        throw CheckpointError("checkpoint: unsupported version " + std::to_string(v));
    }
    Checkpoint ck;
    const auto kind = r.get<std::uint32_t>();
    if (kind != 1 && kind != 2) throw CheckpointError("checkpoint: unknown kind");
    ck.kind = static_cast<CheckpointKind>(kind);
    auto& m = ck.model;
    for (std::size_t* f : {&m.T, &m.d, &m.heads, &m.layers, &m.d_in, &m.env_dim, &m.ffn_mult}) *f = r.get<std::uint32_t>();
    ck.enc_layers = r.get<std::uint32_t>();
    ck.dec_layers = r.get<std::uint32_t>();
    m.positional = r.get<std::uint8_t>() != 0;
    m.env_conditioning = r.get<std::uint8_t>() != 0;
    ck.config_hash = r.get<std::uint64_t>();
    ck.seed = r.get<std::uint64_t>();
    const auto count = r.get<std::uint32_t>();
    struct Item {
        std::string name;
        std::uint32_t rows, cols;
        std::uint64_t offset;
    };
    std::vector<Item> items;
    std::uint64_t expect = 0;
    for (std::uint32_t i = 0; i < count; ++i) {
        Item it;
        it.name = r.bytes(r.get<std::uint16_t>());
        it.rows = r.get<std::uint32_t>();
        it.cols = r.get<std::uint32_t>();
        it.offset = r.get<std::uint64_t>();
        if (it.offset != expect) throw CheckpointError("checkpoint: manifest offsets are not contiguous");
        expect += 4ull * it.rows * it.cols;
        items.push_back(std::move(it));
    }
    const auto payload_bytes = r.get<std::uint64_t>();
    if (payload_bytes != expect) throw CheckpointError("checkpoint: payload size disagrees with manifest");
    if (r.remaining() != payload_bytes + 8) {
        throw CheckpointError("checkpoint: checksum mismatch (file size does not match payload)");
    }
    const std::string payload = r.bytes(payload_bytes);
    if (r.get<std::uint64_t>() != fnv1a64(payload.data(), payload.size())) {
        throw CheckpointError("checkpoint: checksum mismatch");
    }
    Reader p(payload);
    for (const auto& it : items) {
        Tensor t(it.rows, it.cols);
        for (auto& v : t.data) v = static_cast<double>(std::bit_cast<float>(p.get<std::uint32_t>()));
        ck.params.add(it.name, std::move(t));
    }
    return ck;
}

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
    const std::string bytes = encode_checkpoint(ck);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CheckpointError("cannot write checkpoint '" + path + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("failed writing checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return decode_checkpoint(ss.str());
}

model::AeModel to_model(const Checkpoint& ck) {
    if (ck.kind != CheckpointKind::autoencoder) throw CheckpointError("checkpoint: not an autoencoder checkpoint");
    try {
        return model::AeModel(ck.model, ck.enc_layers, ck.dec_layers, ck.params);
    } catch (const std::exception& e) {
        throw CheckpointError(std::string("checkpoint: ") + e.what());
    }
}

}  // namespace aeat::io
