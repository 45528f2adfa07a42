#include "w4a16/io.hpp"

#include <bit>
#include <cerrno>
#include <cstring>
#include <fstream>

namespace w4a16 {

namespace {

constexpr char kF16mMagic[5] = {'F', '1', '6', 'M', '\0'};
constexpr char kW4a16Magic[6] = {'W', '4', 'A', '1', '6', '\0'};
constexpr uint16_t kW4a16Version = 1;

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v & 0xFF));
    out.push_back(static_cast<uint8_t>(v >> 8));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_f32(std::vector<uint8_t>& out, float v) { put_u32(out, std::bit_cast<uint32_t>(v)); }

// Cursor with bounds checking; every failure carries the byte offset.
struct Reader {
    std::span<const uint8_t> bytes;
    size_t pos = 0;

    void need(size_t n, const char* what) {
        if (pos + n > bytes.size()) {
            throw ParseError(std::string("truncated file: expected ") + what, pos);
        }
    }
    uint8_t u8(const char* what) {
        need(1, what);
        return bytes[pos++];
    }
    uint16_t u16(const char* what) {
        need(2, what);
        const uint16_t v = static_cast<uint16_t>(bytes[pos]) |
                           static_cast<uint16_t>(bytes[pos + 1]) << 8;
        pos += 2;
        return v;
    }
    uint32_t u32(const char* what) {
        need(4, what);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(bytes[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
    void expect_magic(std::span<const char> magic) {
        need(magic.size(), "magic");
        if (std::memcmp(bytes.data() + pos, magic.data(), magic.size()) != 0) {
            throw ParseError("bad magic", pos);
        }
        pos += magic.size();
    }
};

std::vector<uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open " + path + " for reading");
    f.seekg(0, std::ios::end);
    const auto size = static_cast<size_t>(f.tellg());
    f.seekg(0, std::ios::beg);
    std::vector<uint8_t> bytes(size);
    if (size > 0) f.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
    if (!f) throw Error("failed reading " + path);
    return bytes;
}

void write_file_bytes(const std::string& path, std::span<const uint8_t> bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open " + path + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw Error("failed writing " + path);
}

}  // namespace

std::vector<uint8_t> encode_f16m(const Fp16Matrix& m) {
    std::vector<uint8_t> out;
    out.reserve(13 + 2 * m.size());
    out.insert(out.end(), std::begin(kF16mMagic), std::end(kF16mMagic));
    put_u32(out, m.rows);
    put_u32(out, m.cols);
    for (F16 h : m.data) put_u16(out, h.bits);
    return out;
}

Fp16Matrix decode_f16m(std::span<const uint8_t> bytes) {
    Reader r{bytes};
    r.expect_magic(kF16mMagic);
    const uint32_t rows = r.u32("rows");
    const uint32_t cols = r.u32("cols");
    const uint64_t count = static_cast<uint64_t>(rows) * cols;
    if (count > (bytes.size() - r.pos) / 2) {
        throw ParseError("element count exceeds file size", r.pos);
    }
    Fp16Matrix m(rows, cols);
    for (uint64_t i = 0; i < count; ++i) m.data[i] = F16{r.u16("f16 code")};
    if (r.pos != bytes.size()) throw ParseError("trailing bytes after matrix data", r.pos);
    return m;
}

std::vector<uint8_t> encode_w4a16(const PackedInt4Matrix& w, const QuantParams& params) {
    validate(params, w.cols);
    std::vector<uint8_t> out;
    out.insert(out.end(), std::begin(kW4a16Magic), std::end(kW4a16Magic));
    put_u16(out, kW4a16Version);
    put_u32(out, w.rows);
    put_u32(out, w.cols);
    out.push_back(static_cast<uint8_t>(params.mode));
    out.insert(out.end(), 7, 0);  // reserved
    for (float s : params.scales) put_f32(out, s);
    out.insert(out.end(), params.zero_points.begin(), params.zero_points.end());
    for (uint32_t word : w.words) put_u32(out, word);
    return out;
}

QuantizedWeights decode_w4a16(std::span<const uint8_t> bytes) {
    Reader r{bytes};
    r.expect_magic(kW4a16Magic);
    const uint16_t version = r.u16("version");
    if (version != kW4a16Version) {
        throw ParseError("unsupported version " + std::to_string(version), r.pos - 2);
    }
    const uint32_t k = r.u32("K");
    const uint32_t n = r.u32("N");
    const uint8_t mode_raw = r.u8("mode");
    if (mode_raw > 1) throw ParseError("bad quantization mode " + std::to_string(mode_raw), r.pos - 1);
    if (k < 1) throw ParseError("K must be >= 1", r.pos);
    if (n == 0 || n % 8 != 0) throw ParseError("N must be a nonzero multiple of 8", r.pos);
    r.need(7, "reserved");
    r.pos += 7;

    QuantizedWeights qw;
    qw.params.mode = static_cast<QuantMode>(mode_raw);
    const size_t count = qw.params.mode == QuantMode::per_tensor ? 1 : n;
    // Bound the remaining payload before allocating anything header-sized.
    const uint64_t payload = 5ull * count + 4ull * k * (n / 8);
    if (payload != bytes.size() - r.pos) {
        throw ParseError("payload size mismatch: header implies " + std::to_string(payload) +
                             " bytes, file has " + std::to_string(bytes.size() - r.pos),
                         r.pos);
    }
    qw.params.scales.resize(count);
    for (size_t i = 0; i < count; ++i) qw.params.scales[i] = r.f32("scale");
    qw.params.zero_points.resize(count);
    for (size_t i = 0; i < count; ++i) qw.params.zero_points[i] = r.u8("zero point");

    const size_t pre_validate_pos = r.pos;
    try {
        validate(qw.params, n);
    } catch (const Error& e) {
        throw ParseError(e.what(), pre_validate_pos);
    }

    qw.packed = PackedInt4Matrix(k, n);
    for (uint32_t& word : qw.packed.words) word = r.u32("packed word");
    if (r.pos != bytes.size()) throw ParseError("trailing bytes after packed words", r.pos);
    return qw;
}

void write_f16m(const std::string& path, const Fp16Matrix& m) {
    write_file_bytes(path, encode_f16m(m));
}

Fp16Matrix read_f16m(const std::string& path) { return decode_f16m(read_file_bytes(path)); }

void write_w4a16(const std::string& path, const PackedInt4Matrix& w, const QuantParams& params) {
    write_file_bytes(path, encode_w4a16(w, params));
}

QuantizedWeights read_w4a16(const std::string& path) {
    return decode_w4a16(read_file_bytes(path));
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

double parse_number(std::string_view value, size_t line_no) {
    // std::from_chars<double> is incomplete in some standard libraries; strtod
    // on a NUL-terminated copy is portable and locale issues do not arise for
    // the plain formats used here.
    const std::string buf(value);
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(buf.c_str(), &end);
    if (end != buf.c_str() + buf.size() || buf.empty() || errno == ERANGE) {
        throw Error("machine config line " + std::to_string(line_no) + ": bad number '" +
                    buf + "'");
    }
    return v;
}

}  // namespace

MachineConfig parse_machine_config(std::string_view text) {
    MachineConfig cfg;
    size_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        const size_t nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);

        if (const size_t hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) continue;

        const size_t eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw Error("machine config line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string_view key = trim(line.substr(0, eq));
        const double value = parse_number(trim(line.substr(eq + 1)), line_no);

        if (key == "num_ai_cores") {
            cfg.num_ai_cores = static_cast<uint32_t>(value);
        } else if (key == "cube_per_core") {
            cfg.cube_per_core = static_cast<uint32_t>(value);
        } else if (key == "vec_per_core") {
            cfg.vec_per_core = static_cast<uint32_t>(value);
        } else if (key == "gm_bandwidth") {
            cfg.gm_bandwidth = value;
        } else if (key == "cube_macs_per_cycle_per_core") {
            cfg.cube_macs_per_cycle_per_core = value;
        } else if (key == "vec_elems_per_cycle_per_core") {
            cfg.vec_elems_per_cycle_per_core = value;
        } else if (key == "clock") {
            cfg.clock = value;
        } else if (key == "overlap_efficiency") {
            cfg.overlap_efficiency = value;
        } else {
            throw Error("machine config line " + std::to_string(line_no) + ": unknown key '" +
                        std::string(key) + "'");
        }
    }
    validate(cfg);
    return cfg;
}

MachineConfig read_machine_config(const std::string& path) {
    const std::vector<uint8_t> bytes = read_file_bytes(path);
    return parse_machine_config(
        std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

}  // namespace w4a16
