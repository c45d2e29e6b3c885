// SPDX-License-Identifier: Apache-2.0
#include "grnlab/dca/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <unordered_map>

namespace grnlab::dca {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <class T>
void put(std::string& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

class Reader {
public:
    explicit Reader(const std::string& s) : s_(s) {}
    template <class T>
    T get(const char* what) {
        if (s_.size() - pos_ < sizeof(T)) throw CheckpointError(std::string("checkpoint truncated while reading ") + what);
        T v;
        std::memcpy(&v, s_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    std::string bytes(std::size_t n, const char* what) {
        if (s_.size() - pos_ < n) throw CheckpointError(std::string("checkpoint truncated while reading ") + what);
        std::string out = s_.substr(pos_, n);
        pos_ += n;
        return out;
    }
    bool done() const { return pos_ == s_.size(); }

private:
    const std::string& s_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(std::span<const CheckpointEntry> entries) {
    std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
    put<std::uint8_t>(out, kCheckpointVersion);
    for (const CheckpointEntry& e : entries) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
        out += e.name;
        put<std::uint8_t>(out, static_cast<std::uint8_t>(e.dtype));
        put<std::uint32_t>(out, static_cast<std::uint32_t>(e.value.rank()));
        for (std::size_t x : e.value.shape()) put<std::uint64_t>(out, x);
        for (double v : e.value.values()) {
            if (e.dtype == DType::F64) {
                put<double>(out, v);
            } else {
                put<float>(out, static_cast<float>(v));
            }
        }
    }
    return out;
}

std::vector<CheckpointEntry> decode_checkpoint(const std::string& bytes) {
    Reader r(bytes);
    if (r.bytes(sizeof(kCheckpointMagic), "magic") != std::string(kCheckpointMagic, sizeof(kCheckpointMagic))) {
        throw CheckpointError("not a GRNCKPT1 checkpoint (bad magic)");
    }
    if (const auto v = r.get<std::uint8_t>("version"); v != kCheckpointVersion) {
        throw CheckpointError("unsupported checkpoint version " + std::to_string(v));
    }
    std::vector<CheckpointEntry> out;
    std::set<std::string> seen;
    while (!r.done()) {
        CheckpointEntry e;
        const auto len = r.get<std::uint32_t>("name length");
        e.name = r.bytes(len, "name");
        if (!seen.insert(e.name).second) throw CheckpointError("duplicate checkpoint record '" + e.name + "'");
        const auto dtype = r.get<std::uint8_t>("dtype");
        if (dtype > 1) throw CheckpointError("record '" + e.name + "': unknown dtype " + std::to_string(dtype));
        e.dtype = static_cast<DType>(dtype);
        const auto rank = r.get<std::uint32_t>("rank");
        Shape shape(rank);
        for (auto& x : shape) x = r.get<std::uint64_t>("extent");
        Tensor t(shape);
        for (double& v : t.values()) v = e.dtype == DType::F64 ? r.get<double>("values") : r.get<float>("values");
        e.value = std::move(t);
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<CheckpointEntry> snapshot(std::span<const ad::Parameter* const> params) {
    std::vector<CheckpointEntry> out;
    out.reserve(params.size());
    for (const ad::Parameter* p : params) out.push_back({p->name(), p->value(), DType::F64});
    return out;
}

void save_checkpoint(const std::filesystem::path& path, std::span<const CheckpointEntry> entries) {
    const std::string bytes = encode_checkpoint(entries);
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw CheckpointError("cannot open " + tmp.string() + " for writing");
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!f.flush()) throw CheckpointError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void save_checkpoint(const std::filesystem::path& path, std::span<const ad::Parameter* const> params) {
    const auto entries = snapshot(params);
    save_checkpoint(path, entries);
}

std::vector<CheckpointEntry> load_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CheckpointError("cannot open checkpoint " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return decode_checkpoint(bytes);
}

void load_into(std::span<const CheckpointEntry> entries, std::span<ad::Parameter* const> params) {
    std::unordered_map<std::string, const CheckpointEntry*> by_name;
    for (const CheckpointEntry& e : entries) by_name[e.name] = &e;
    if (by_name.size() != params.size()) {
        throw CheckpointError("checkpoint has " + std::to_string(by_name.size()) + " records, model has " +
                              std::to_string(params.size()) + " parameters");
    }
    for (ad::Parameter* p : params) {
        const auto it = by_name.find(p->name());
        if (it == by_name.end()) throw CheckpointError("checkpoint lacks parameter '" + p->name() + "'");
        if (it->second->value.shape() != p->value().shape()) {
            throw CheckpointError("parameter '" + p->name() + "': checkpoint shape " +
                                  shape_string(it->second->value.shape()) + " vs model " +
                                  shape_string(p->value().shape()));
        }
    }
    for (ad::Parameter* p : params) p->value() = by_name.at(p->name())->value;
}

}  // namespace grnlab::dca
