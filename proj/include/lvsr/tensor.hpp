// Dense row-major double tensor plus the small numeric utilities
// (seeded RNG, checksums, error kinds) everything else builds on.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace lvsr {

struct Error : std::runtime_error {
    enum class Kind { validation, numeric };
    Kind kind;
    Error(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

inline void check(bool cond, const std::string& msg) {
    if (!cond) throw Error(Error::Kind::validation, msg);
}

inline void check_numeric(bool cond, const std::string& msg) {
    if (!cond) throw Error(Error::Kind::numeric, msg);
}

struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
        data.assign(static_cast<size_t>(numel_of(shape)), 0.0);
    }

    static int64_t numel_of(const std::vector<int>& s) {
        int64_t n = 1;
        for (int d : s) {
            if (d <= 0) throw Error(Error::Kind::validation, "tensor dims must be positive");
            n *= d;
        }
        return n;
    }

    static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }

    static Tensor full(std::vector<int> s, double v) {
        Tensor t(std::move(s));
        std::fill(t.data.begin(), t.data.end(), v);
        return t;
    }

    static Tensor scalar(double v) {
        Tensor t({1});
        t.data[0] = v;
        return t;
    }

    int64_t numel() const { return static_cast<int64_t>(data.size()); }
    int ndim() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape[static_cast<size_t>(i)]; }
    bool empty() const { return data.empty(); }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    // index helpers; hot loops index data directly instead
    double& at(int i) { return data[static_cast<size_t>(i)]; }
    double at(int i) const { return data[static_cast<size_t>(i)]; }
    double& operator()(int i, int j) { return data[static_cast<size_t>(i) * shape[1] + j]; }
    double operator()(int i, int j) const { return data[static_cast<size_t>(i) * shape[1] + j]; }
    double& operator()(int i, int j, int k) {
        return data[(static_cast<size_t>(i) * shape[1] + j) * shape[2] + k];
    }
    double operator()(int i, int j, int k) const {
        return data[(static_cast<size_t>(i) * shape[1] + j) * shape[2] + k];
    }
    double& operator()(int i, int j, int k, int l) {
        return data[((static_cast<size_t>(i) * shape[1] + j) * static_cast<size_t>(shape[2]) + k) * shape[3] + l];
    }
    double operator()(int i, int j, int k, int l) const {
        return data[((static_cast<size_t>(i) * shape[1] + j) * static_cast<size_t>(shape[2]) + k) * shape[3] + l];
    }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    double min_value() const { return *std::min_element(data.begin(), data.end()); }
    double max_value() const { return *std::max_element(data.begin(), data.end()); }

    double mean() const {
        double s = 0.0;
        for (double v : data) s += v;
        return s / static_cast<double>(data.size());
    }
};

inline bool bits_equal(const Tensor& a, const Tensor& b) {
    if (a.shape != b.shape) return false;
    return std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(double)) == 0;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
    check(a.same_shape(b), "max_abs_diff: shape mismatch");
    double m = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::fabs(a.data[i] - b.data[i]));
    return m;
}

inline double mean_abs_diff(const Tensor& a, const Tensor& b) {
    check(a.same_shape(b), "mean_abs_diff: shape mismatch");
    double s = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) s += std::fabs(a.data[i] - b.data[i]);
    return s / static_cast<double>(a.data.size());
}

inline std::string shape_str(const std::vector<int>& s) {
    std::string r = "(";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) r += ",";
        r += std::to_string(s[i]);
    }
    return r + ")";
}

// ---------------------------------------------------------------------------
// Seeded RNG. splitmix64 core with explicit state, so streams are stable
// across platforms and can be derived per (seed, stream) pair.
// ---------------------------------------------------------------------------

inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline uint64_t mix_seed(uint64_t seed, uint64_t stream) {
    uint64_t s = seed ^ (0x9E3779B97F4A7C15ULL * (stream + 1));
    splitmix64(s);
    return splitmix64(s);
}

struct Rng {
    uint64_t state;
    bool have_cached = false;
    double cached = 0.0;

    explicit Rng(uint64_t seed) : state(seed) {}

    uint64_t next_u64() { return splitmix64(state); }

    // [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    int64_t below(int64_t n) {
        check(n > 0, "Rng::below: n must be positive");
        return static_cast<int64_t>(next_u64() % static_cast<uint64_t>(n));
    }

    // Box-Muller; second value cached
    double normal() {
        if (have_cached) {
            have_cached = false;
            return cached;
        }
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * 3.14159265358979323846 * u2;
        cached = r * std::sin(a);
        have_cached = true;
        return r * std::cos(a);
    }

    void fill_normal(Tensor& t, double scale = 1.0) {
        for (double& v : t.data) v = normal() * scale;
    }

    Tensor normal_tensor(std::vector<int> shape, double scale = 1.0) {
        Tensor t(std::move(shape));
        fill_normal(t, scale);
        return t;
    }
};

// ---------------------------------------------------------------------------
// FNV-1a over raw bytes; used for parameter freeze checks and output digests.
// ---------------------------------------------------------------------------

inline uint64_t fnv1a64(const void* bytes, size_t n, uint64_t h = 0xcbf29ce484222325ULL) {
    const unsigned char* p = static_cast<const unsigned char*>(bytes);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline uint64_t checksum(const Tensor& t, uint64_t h = 0xcbf29ce484222325ULL) {
    return fnv1a64(t.data.data(), t.data.size() * sizeof(double), h);
}

}  // namespace lvsr
