#include "gaitscore/checkpoint.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <vector>

#include "gaitscore/errors.hpp"

namespace gaitscore {

namespace {

constexpr char kMagic[4] = {'G', 'S', 'C', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
}

class Reader {
public:
    Reader(std::string bytes, std::string path) : bytes_(std::move(bytes)), path_(std::move(path)) {}

    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(byte()) << (8 * i);
        return v;
    }

    std::uint64_t u64(const char* what) {
        need(8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(byte()) << (8 * i);
        return v;
    }

    float f32(const char* what) {
        std::uint32_t bits = u32(what);
        float f;
        std::memcpy(&f, &bits, 4);
        return f;
    }

    std::string str(std::size_t n, const char* what) {
        need(n, what);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    bool at_end() const { return pos_ == bytes_.size(); }

private:
    unsigned char byte() { return static_cast<unsigned char>(bytes_[pos_++]); }

    void need(std::size_t n, const char* what) {
        if (pos_ + n > bytes_.size()) {
            throw IoError("checkpoint " + path_ + ": truncated while reading " + what);
        }
    }

    std::string bytes_;
    std::string path_;
    std::size_t pos_ = 0;
};

}  // namespace

std::uint64_t fnv1a_hash(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void save_checkpoint(const ParamSet& params, const std::string& path, const CheckpointMeta& meta) {
    std::string out;
    out.append(kMagic, 4);
    put_u32(out, kVersion);
    put_u64(out, meta.seed);
    put_u32(out, meta.epoch);
    put_u64(out, meta.config_hash);
    put_u32(out, static_cast<std::uint32_t>(params.size()));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const NamedTensor& nt = params.entry(i);
        put_u32(out, static_cast<std::uint32_t>(nt.name.size()));
        out += nt.name;
        put_u32(out, static_cast<std::uint32_t>(nt.tensor.rank()));
        for (std::size_t d : nt.tensor.shape()) put_u32(out, static_cast<std::uint32_t>(d));
        for (std::size_t j = 0; j < nt.tensor.numel(); ++j) put_f32(out, nt.tensor[j]);
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("checkpoint: cannot open " + path + " for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("checkpoint: write failed for " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw MissingArtifactError("checkpoint: cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    Reader r(std::move(bytes), path);

    std::string magic = r.str(4, "magic");
    if (std::memcmp(magic.data(), kMagic, 4) != 0) {
        throw IoError("checkpoint " + path + ": bad magic, expected GSC1");
    }
    std::uint32_t version = r.u32("version");
    if (version != kVersion) {
        throw IoError("checkpoint " + path + ": unsupported version " + std::to_string(version));
    }
    CheckpointMeta meta;
    meta.seed = r.u64("seed");
    meta.epoch = r.u32("epoch");
    meta.config_hash = r.u64("config hash");
    std::uint32_t count = r.u32("tensor count");
    if (count != 10) {
        throw IoError("checkpoint " + path + ": expected 10 tensors, found " + std::to_string(count));
    }

    // Shapes are validated against the chained manifest as they are read, so
    // a corrupted shape field is reported against its tensor name instead of
    // derailing the rest of the byte stream. Conv output widths are the free
    // dimensions that define the architecture.
    EncoderArch arch;
    std::vector<NamedTensor> raw;
    raw.reserve(count);

    auto read_tensor = [&](const std::string& expected_name,
                           const std::vector<std::size_t>& expected_shape,  // 0 = free dim
                           std::vector<std::size_t>& actual_shape) {
        std::uint32_t name_len = r.u32("tensor name length");
        if (name_len > 256) throw IoError("checkpoint " + path + ": implausible tensor name length");
        const std::string name = r.str(name_len, "tensor name");
        if (name != expected_name) {
            throw IoError("checkpoint " + path + ": tensor " + std::to_string(raw.size()) +
                          " named " + name + ", expected " + expected_name);
        }
        const std::uint32_t rank = r.u32("tensor rank");
        if (rank != expected_shape.size()) {
            throw IoError("checkpoint " + path + ": tensor " + name + " has rank " +
                          std::to_string(rank) + ", expected " +
                          std::to_string(expected_shape.size()));
        }
        actual_shape.clear();
        std::size_t numel = 1;
        for (std::uint32_t d = 0; d < rank; ++d) {
            const std::uint32_t dim = r.u32("tensor dim");
            if (dim == 0 || numel > (1u << 28) / dim) {
                throw IoError("checkpoint " + path + ": tensor " + name + " has invalid shape");
            }
            if (expected_shape[d] != 0 && dim != expected_shape[d]) {
                throw IoError("checkpoint " + path + ": tensor " + name + " dimension " +
                              std::to_string(d) + " is " + std::to_string(dim) + ", expected " +
                              std::to_string(expected_shape[d]));
            }
            actual_shape.push_back(dim);
            numel *= dim;
        }
        std::vector<float> data(numel);
        for (std::size_t j = 0; j < numel; ++j) data[j] = r.f32("tensor data");
        raw.push_back({name, Tensor(actual_shape, std::move(data))});
    };

    std::vector<std::size_t> shape;
    std::size_t in_channels = 0;  // free until conv1.weight is read
    for (std::size_t l = 0; l < 4; ++l) {
        const std::string base = "conv" + std::to_string(l + 1);
        read_tensor(base + ".weight", {0, in_channels, EncoderArch::kKernel}, shape);
        if (l == 0) arch.input_channels = shape[1];
        arch.channels[l] = shape[0];
        read_tensor(base + ".bias", {arch.channels[l]}, shape);
        in_channels = arch.channels[l];
    }
    read_tensor("head.weight", {EncoderArch::kNumClasses, arch.embed_dim()}, shape);
    read_tensor("head.bias", {EncoderArch::kNumClasses}, shape);
    if (!r.at_end()) throw IoError("checkpoint " + path + ": trailing bytes after tensor table");

    ParamSet params(arch);
    for (std::size_t i = 0; i < params.size(); ++i) {
        params.entry(i).tensor = std::move(raw[i].tensor);
    }
    return {std::move(params), meta};
}

std::size_t checkpoint_byte_size(const EncoderArch& arch) {
    std::size_t n = 4 + 4 + 8 + 4 + 8 + 4;  // header through tensor count
    for (auto& [name, shape] : manifest_of(arch)) {
        std::size_t numel = 1;
        for (std::size_t d : shape) numel *= d;
        n += 4 + name.size() + 4 + 4 * shape.size() + 4 * numel;
    }
    return n;
}

}  // namespace gaitscore
