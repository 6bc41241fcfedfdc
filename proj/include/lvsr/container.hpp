// Binary tensor container: a JSON metadata block plus named f64 blobs.
// Round-trips bit-exactly; used for checkpoints and latent dumps.
//
// Layout (little-endian):
//   "LVTC" | u32 version | u64 meta_len | meta (UTF-8 JSON)
//   u64 blob_count | per blob: u64 name_len, name, u64 ndim, i64 dims..., f64 data...
#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lvsr/tensor.hpp"

namespace lvsr {

namespace detail {

inline void write_u32(std::ostream& os, uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_u64(std::ostream& os, uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    os.write(reinterpret_cast<const char*>(b), 8);
}

inline uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    check(static_cast<bool>(is), "container: truncated file");
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
    return v;
}

inline uint64_t read_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    check(static_cast<bool>(is), "container: truncated file");
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
}

inline void write_f64_block(std::ostream& os, const std::vector<double>& d) {
    // doubles serialized as their raw IEEE-754 bit pattern, little-endian
    std::vector<unsigned char> buf(d.size() * 8);
    for (size_t i = 0; i < d.size(); ++i) {
        uint64_t bits;
        std::memcpy(&bits, &d[i], 8);
        for (int k = 0; k < 8; ++k) buf[i * 8 + static_cast<size_t>(k)] = static_cast<unsigned char>((bits >> (8 * k)) & 0xFF);
    }
    os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

inline void read_f64_block(std::istream& is, std::vector<double>& d) {
    std::vector<unsigned char> buf(d.size() * 8);
    is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    check(static_cast<bool>(is), "container: truncated blob data");
    for (size_t i = 0; i < d.size(); ++i) {
        uint64_t bits = 0;
        for (int k = 0; k < 8; ++k) bits |= static_cast<uint64_t>(buf[i * 8 + static_cast<size_t>(k)]) << (8 * k);
        std::memcpy(&d[i], &bits, 8);
    }
}

}  // namespace detail

struct Container {
    static constexpr uint32_t kVersion = 1;

    nlohmann::json meta = nlohmann::json::object();
    std::vector<std::pair<std::string, Tensor>> blobs;

    void add(const std::string& name, const Tensor& t) {
        check(find(name) == nullptr, "container: duplicate blob name '" + name + "'");
        blobs.emplace_back(name, t);
    }

    const Tensor* find(const std::string& name) const {
        for (const auto& [n, t] : blobs)
            if (n == name) return &t;
        return nullptr;
    }

    const Tensor& at(const std::string& name) const {
        const Tensor* t = find(name);
        check(t != nullptr, "container: missing blob '" + name + "'");
        return *t;
    }

    void save(const std::string& path) const {
        std::ofstream os(path, std::ios::binary);
        check(static_cast<bool>(os), "container: cannot open for write: " + path);
        os.write("LVTC", 4);
        detail::write_u32(os, kVersion);
        std::string m = meta.dump();
        detail::write_u64(os, m.size());
        os.write(m.data(), static_cast<std::streamsize>(m.size()));
        detail::write_u64(os, blobs.size());
        for (const auto& [name, t] : blobs) {
            detail::write_u64(os, name.size());
            os.write(name.data(), static_cast<std::streamsize>(name.size()));
            detail::write_u64(os, t.shape.size());
            for (int d : t.shape) detail::write_u64(os, static_cast<uint64_t>(static_cast<int64_t>(d)));
            detail::write_f64_block(os, t.data);
        }
        check(static_cast<bool>(os), "container: write failed: " + path);
    }

    static Container load(const std::string& path) {
        std::ifstream is(path, std::ios::binary);
        check(static_cast<bool>(is), "container: cannot open: " + path);
        char magic[4];
        is.read(magic, 4);
        check(static_cast<bool>(is) && std::memcmp(magic, "LVTC", 4) == 0, "container: bad magic in " + path);
        uint32_t ver = detail::read_u32(is);
        check(ver == kVersion, "container: unsupported version " + std::to_string(ver));
        uint64_t mlen = detail::read_u64(is);
        check(mlen <= (1ull << 30), "container: metadata block too large");
        std::string m(mlen, '\0');
        is.read(m.data(), static_cast<std::streamsize>(mlen));
        check(static_cast<bool>(is), "container: truncated metadata");
        Container c;
        c.meta = nlohmann::json::parse(m, nullptr, false);
        check(!c.meta.is_discarded(), "container: metadata is not valid JSON");
        uint64_t nblobs = detail::read_u64(is);
        check(nblobs <= (1ull << 20), "container: implausible blob count");
        for (uint64_t i = 0; i < nblobs; ++i) {
            uint64_t nlen = detail::read_u64(is);
            check(nlen >= 1 && nlen <= 4096, "container: bad blob name length");
            std::string name(nlen, '\0');
            is.read(name.data(), static_cast<std::streamsize>(nlen));
            check(static_cast<bool>(is), "container: truncated blob name");
            uint64_t nd = detail::read_u64(is);
            check(nd <= 8, "container: implausible rank");
            std::vector<int> shape;
            int64_t n = 1;
            for (uint64_t k = 0; k < nd; ++k) {
                int64_t d = static_cast<int64_t>(detail::read_u64(is));
                check(d >= 1 && d <= (1 << 28), "container: bad dimension");
                shape.push_back(static_cast<int>(d));
                n *= d;
            }
            check(n <= (1ll << 32), "container: blob too large");
            Tensor t(shape);
            detail::read_f64_block(is, t.data);
            c.blobs.emplace_back(std::move(name), std::move(t));
        }
        return c;
    }
};

}  // namespace lvsr
