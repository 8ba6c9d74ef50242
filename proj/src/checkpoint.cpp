#include "checkpoint.hpp"

#include <array>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;

namespace lc {

namespace {

constexpr char kMagic[6] = {'L', 'C', 'N', 'E', 'T', '\0'};
constexpr std::uint16_t kVersion = 1;

// Little-endian serialization into a growing byte buffer.
struct Writer {
    std::string bytes;

    void raw(const void* p, std::size_t n) { bytes.append(static_cast<const char*>(p), n); }
    void u8(std::uint8_t v) { raw(&v, 1); }
    void u16(std::uint16_t v) {
        unsigned char b[2] = {(unsigned char)(v & 0xff), (unsigned char)(v >> 8)};
        raw(b, 2);
    }
    void u32(std::uint32_t v) {
        unsigned char b[4];
        for (int i = 0; i < 4; ++i) b[i] = (unsigned char)(v >> (8 * i));
        raw(b, 4);
    }
    void f32v(const float* p, std::size_t n) {
        static_assert(sizeof(float) == 4);
        // Float bit patterns, little endian.
        for (std::size_t i = 0; i < n; ++i) {
            std::uint32_t bits;
            std::memcpy(&bits, &p[i], 4);
            u32(bits);
        }
    }
};

struct Reader {
    const unsigned char* p;
    std::size_t len, pos = 0;
    std::string path;

    void need(std::size_t n) {
        if (pos + n > len) raise_data("checkpoint " + path + " is truncated");
    }
    std::uint8_t u8() {
        need(1);
        return p[pos++];
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = std::uint16_t(p[pos]) | std::uint16_t(p[pos + 1]) << 8;
        pos += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(p[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    void f32v(float* dst, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint32_t bits = u32();
            std::memcpy(&dst[i], &bits, 4);
        }
    }
    std::string text(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(p + pos), n);
        pos += n;
        return s;
    }
};

void write_tensor(Writer& w, const Tensor& t) {
    w.u32(std::uint32_t(t.n));
    w.u32(std::uint32_t(t.c));
    w.u32(std::uint32_t(t.h));
    w.u32(std::uint32_t(t.w));
    w.f32v(t.data.data(), t.data.size());
}

void read_tensor(Reader& r, Tensor& t) {
    const int n = int(r.u32()), c = int(r.u32()), h = int(r.u32()), w = int(r.u32());
    if (n < 1 || c < 1 || h < 1 || w < 1 || std::size_t(n) * c * h * w > (std::size_t(1) << 31))
        raise_data("checkpoint " + r.path + ": bad tensor shape");
    t.resize(n, c, h, w);
    r.f32v(t.data.data(), t.data.size());
}

void write_vec(Writer& w, const std::vector<float>& v) {
    w.u32(std::uint32_t(v.size()));
    w.f32v(v.data(), v.size());
}

void read_vec(Reader& r, std::vector<float>& v) {
    const std::uint32_t n = r.u32();
    if (n > (1u << 28)) raise_data("checkpoint " + r.path + ": bad vector length");
    v.resize(n);
    r.f32v(v.data(), v.size());
}

std::string meta_to_text(const CheckpointMeta& m) {
    std::ostringstream os;
    os.precision(17);
    os << "arch=" << arch_kind_name(m.arch) << "\n";
    os << "r=" << m.r << "\n";
    os << "sigma=" << m.sigma << "\n";
    os << "s_r=" << m.s_r << "\n";
    os << "s_e=" << m.s_e << "\n";
    os << "resize_factor=" << m.resize_factor << "\n";
    os << "target_mode=" << target_mode_name(m.target_mode) << "\n";
    os << "loss=" << loss_kind_name(m.loss) << "\n";
    os << "delta=" << m.delta << "\n";
    os << "mean_r=" << m.means.rgb[0] << "\n";
    os << "mean_g=" << m.means.rgb[1] << "\n";
    os << "mean_b=" << m.means.rgb[2] << "\n";
    os << "seed=" << m.seed << "\n";
    os << "epochs_completed=" << m.epochs_completed << "\n";
    os << "base_lr=" << m.base_lr << "\n";
    os << "momentum=" << m.momentum << "\n";
    os << "batch_size=" << m.batch_size << "\n";
    return os.str();
}

CheckpointMeta meta_from_text(const std::string& text, const std::string& path) {
    std::map<std::string, std::string> kv;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    auto get = [&](const char* key) -> std::string {
        auto it = kv.find(key);
        if (it == kv.end()) raise_data("checkpoint " + path + ": metadata key '" + key + "' missing");
        return it->second;
    };
    CheckpointMeta m;
    m.arch = parse_arch_kind(get("arch"));
    m.r = std::stoi(get("r"));
    m.sigma = std::stof(get("sigma"));
    m.s_r = std::stoi(get("s_r"));
    m.s_e = std::stoi(get("s_e"));
    m.resize_factor = std::stod(get("resize_factor"));
    m.target_mode = parse_target_mode(get("target_mode"));
    m.loss = parse_loss_kind(get("loss"));
    m.delta = std::stof(get("delta"));
    m.means.rgb[0] = std::stof(get("mean_r"));
    m.means.rgb[1] = std::stof(get("mean_g"));
    m.means.rgb[2] = std::stof(get("mean_b"));
    m.seed = std::stoull(get("seed"));
    m.epochs_completed = std::stoi(get("epochs_completed"));
    m.base_lr = std::stof(get("base_lr"));
    m.momentum = std::stof(get("momentum"));
    m.batch_size = std::stoi(get("batch_size"));
    return m;
}

}  // namespace

std::uint32_t crc32(const void* data, std::size_t len, std::uint32_t seed) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t c = seed ^ 0xFFFFFFFFu;
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) c = table[(c ^ p[i]) & 0xFF] ^ (c >> 8);
    return c ^ 0xFFFFFFFFu;
}

void save_checkpoint(const NetworkModel& model, const CheckpointMeta& meta,
                     const std::string& path) {
    Writer w;
    w.raw(kMagic, sizeof(kMagic));
    w.u16(kVersion);
    const std::string meta_text = meta_to_text(meta);
    w.u32(std::uint32_t(meta_text.size()));
    w.raw(meta_text.data(), meta_text.size());
    w.u8(model.spec.output_width > 1 ? 1 : 0);
    w.u32(std::uint32_t(model.spec.output_width));
    w.u32(std::uint32_t(model.layers.size()));
    std::uint8_t any_bn_init = 0;
    for (const auto& l : model.layers)
        if (l.kind == LayerKind::batchnorm && l.bn_initialized) any_bn_init = 1;
    w.u8(any_bn_init);
    for (const auto& l : model.layers) {
        w.u8(std::uint8_t(l.kind));
        switch (l.kind) {
            case LayerKind::conv3x3:
            case LayerKind::fullyconnected:
                write_tensor(w, l.weights);
                write_vec(w, l.bias);
                break;
            case LayerKind::batchnorm:
                write_vec(w, l.bn_gamma);
                write_vec(w, l.bn_beta);
                write_vec(w, l.bn_running_mean);
                write_vec(w, l.bn_running_var);
                break;
            case LayerKind::relu:
            case LayerKind::maxpool2x2:
                break;
        }
    }
    w.u32(crc32(w.bytes.data(), w.bytes.size()));

    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) raise_data("cannot write checkpoint " + tmp);
        out.write(w.bytes.data(), std::streamsize(w.bytes.size()));
        if (!out) raise_data("failed writing checkpoint " + tmp);
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) raise_data("cannot move checkpoint into place at " + path + ": " + ec.message());
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise_data("cannot open checkpoint " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < sizeof(kMagic) + 2 + 4 + 4)
        raise_data("checkpoint " + path + " is truncated");

    const std::uint32_t stored_crc = [&] {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= std::uint32_t((unsigned char)bytes[bytes.size() - 4 + i]) << (8 * i);
        return v;
    }();
    if (crc32(bytes.data(), bytes.size() - 4) != stored_crc)
        raise_data("checkpoint " + path + ": checksum failure (file corrupt)");

    Reader r{reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size() - 4, 0, path};
    if (std::memcmp(r.text(sizeof(kMagic)).data(), kMagic, sizeof(kMagic)) != 0)
        raise_data(path + " is not a checkpoint file (bad magic)");
    const std::uint16_t version = r.u16();
    if (version != kVersion)
        raise_data("checkpoint " + path + ": format version " + std::to_string(version) +
                   " not supported (expected " + std::to_string(kVersion) + ")");
    const std::uint32_t meta_len = r.u32();
    const std::string meta_text = r.text(meta_len);

    LoadedCheckpoint out;
    out.meta = meta_from_text(meta_text, path);
    r.u8();  // wide-output flag, informational
    const int output_width = int(r.u32());
    const std::uint32_t layer_count = r.u32();
    const bool bn_init = r.u8() != 0;

    // Rebuild the architecture skeleton, then fill the tensors in place.
    Rng rng(0);
    out.model =
        build_network(ArchitectureSpec::make(out.meta.arch, out.meta.r, output_width), rng);
    if (out.model.layers.size() != layer_count)
        raise_data("checkpoint " + path + ": layer count " + std::to_string(layer_count) +
                   " does not match architecture " + arch_kind_name(out.meta.arch));

    for (auto& l : out.model.layers) {
        const LayerKind kind = LayerKind(r.u8());
        if (kind != l.kind)
            raise_data("checkpoint " + path + ": layer kind mismatch (got " +
                       layer_kind_name(kind) + ", expected " + layer_kind_name(l.kind) + ")");
        switch (l.kind) {
            case LayerKind::conv3x3:
            case LayerKind::fullyconnected: {
                Tensor t;
                read_tensor(r, t);
                if (!t.same_shape(l.weights))
                    raise_data("checkpoint " + path + ": weight shape " + t.shape_str() +
                               " does not match architecture " + l.weights.shape_str());
                l.weights = std::move(t);
                std::vector<float> b;
                read_vec(r, b);
                if (b.size() != l.bias.size())
                    raise_data("checkpoint " + path + ": bias length mismatch");
                l.bias = std::move(b);
                break;
            }
            case LayerKind::batchnorm: {
                std::vector<float> g, be, rm, rv;
                read_vec(r, g);
                read_vec(r, be);
                read_vec(r, rm);
                read_vec(r, rv);
                if (g.size() != l.bn_gamma.size())
                    raise_data("checkpoint " + path + ": batchnorm width mismatch");
                l.bn_gamma = std::move(g);
                l.bn_beta = std::move(be);
                l.bn_running_mean = std::move(rm);
                l.bn_running_var = std::move(rv);
                l.bn_initialized = bn_init;
                break;
            }
            case LayerKind::relu:
            case LayerKind::maxpool2x2:
                break;
        }
    }
    if (r.pos != r.len) raise_data("checkpoint " + path + ": trailing bytes");
    return out;
}

}  // namespace lc
