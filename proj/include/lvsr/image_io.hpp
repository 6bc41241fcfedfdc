// Frame I/O: binary PPM (P6, maxval 255) plus directory helpers.
// A video is a directory of frames named frame_000000.ppm, frame_000001.ppm, ...
// Byte <-> double mapping is fixed so a write/read cycle is exact on
// quantized values: b -> b/255, v -> round(clamp(v)*255).
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "lvsr/tensor.hpp"
#include "lvsr/types.hpp"

namespace lvsr {

inline Tensor read_ppm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    check(static_cast<bool>(is), "ppm: cannot open: " + path);
    std::string magic;
    is >> magic;
    check(magic == "P6", "ppm: expected P6 format in " + path);
    auto next_int = [&is, &path]() {
        // skip whitespace and # comments between header fields
        int c = is.peek();
        while (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '#') {
            if (c == '#') {
                std::string line;
                std::getline(is, line);
            } else {
                is.get();
            }
            c = is.peek();
        }
        int v = -1;
        is >> v;
        check(static_cast<bool>(is) && v >= 0, "ppm: malformed header in " + path);
        return v;
    };
    int w = next_int();
    int h = next_int();
    int maxval = next_int();
    check(w >= 1 && h >= 1 && w <= 65536 && h <= 65536, "ppm: bad dimensions in " + path);
    check(maxval == 255, "ppm: only maxval 255 is supported, got " + std::to_string(maxval));
    is.get();  // single whitespace byte after maxval
    std::vector<unsigned char> raw(static_cast<size_t>(w) * h * 3);
    is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    check(static_cast<bool>(is), "ppm: truncated pixel data in " + path);
    Tensor img({3, h, w});
    int64_t plane = static_cast<int64_t>(h) * w;
    for (int64_t p = 0; p < plane; ++p)
        for (int c = 0; c < 3; ++c)
            img.data[static_cast<size_t>(c * plane + p)] = raw[static_cast<size_t>(p * 3 + c)] / 255.0;
    return img;
}

inline void write_ppm(const std::string& path, const Tensor& img) {
    check(img.ndim() == 3 && img.dim(0) == 3, "ppm: expected (3,H,W), got " + shape_str(img.shape));
    int h = img.dim(1), w = img.dim(2);
    std::ofstream os(path, std::ios::binary);
    check(static_cast<bool>(os), "ppm: cannot open for write: " + path);
    os << "P6\n" << w << " " << h << "\n255\n";
    int64_t plane = static_cast<int64_t>(h) * w;
    std::vector<unsigned char> raw(static_cast<size_t>(plane) * 3);
    for (int64_t p = 0; p < plane; ++p)
        for (int c = 0; c < 3; ++c) {
            double v = img.data[static_cast<size_t>(c * plane + p)];
            v = std::min(1.0, std::max(0.0, v));
            raw[static_cast<size_t>(p * 3 + c)] = static_cast<unsigned char>(std::lround(v * 255.0));
        }
    os.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    check(static_cast<bool>(os), "ppm: write failed: " + path);
}

// sorted .ppm paths in a directory; order is lexicographic for determinism
inline std::vector<std::string> list_frames(const std::string& dir) {
    namespace fs = std::filesystem;
    check(fs::is_directory(dir), "frames: not a directory: " + dir);
    std::vector<std::string> out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".ppm") out.push_back(e.path().string());
    std::sort(out.begin(), out.end());
    return out;
}

inline VideoSegment read_video_dir(const std::string& dir) {
    std::vector<std::string> paths = list_frames(dir);
    check(!paths.empty(), "frames: no .ppm files in " + dir);
    Tensor first = read_ppm(paths[0]);
    int h = first.dim(1), w = first.dim(2);
    VideoSegment seg;
    seg.frames = Tensor({static_cast<int>(paths.size()), 3, h, w});
    seg.source_id = std::filesystem::path(dir).filename().string();
    int64_t per = static_cast<int64_t>(3) * h * w;
    std::copy(first.data.begin(), first.data.end(), seg.frames.data.begin());
    for (size_t i = 1; i < paths.size(); ++i) {
        Tensor f = read_ppm(paths[i]);
        check(f.dim(1) == h && f.dim(2) == w,
              "frames: size mismatch at " + paths[i] + " (" + shape_str(f.shape) + " vs first frame)");
        std::copy(f.data.begin(), f.data.end(), seg.frames.data.begin() + static_cast<int64_t>(i) * per);
    }
    return seg;
}

inline std::string frame_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%06d.ppm", index);
    return buf;
}

inline void write_video_dir(const std::string& dir, const Tensor& frames) {
    check(frames.ndim() == 4 && frames.dim(1) == 3, "frames: expected (L,3,H,W), got " + shape_str(frames.shape));
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    int L = frames.dim(0), h = frames.dim(2), w = frames.dim(3);
    int64_t per = static_cast<int64_t>(3) * h * w;
    for (int l = 0; l < L; ++l) {
        Tensor f({3, h, w});
        std::copy(frames.data.begin() + l * per, frames.data.begin() + (l + 1) * per, f.data.begin());
        write_ppm((fs::path(dir) / frame_name(l)).string(), f);
    }
}

// immediate subdirectories, sorted; a video dataset root holds one dir per clip
inline std::vector<std::string> list_subdirs(const std::string& dir) {
    namespace fs = std::filesystem;
    check(fs::is_directory(dir), "dataset: not a directory: " + dir);
    std::vector<std::string> out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_directory()) out.push_back(e.path().string());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace lvsr
