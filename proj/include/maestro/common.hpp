#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace maestro {

using Mat = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Errors. Each carries the process exit code the CLI maps it to:
//   2 arguments/config/validation, 3 IO, 4 training divergence, 5 sampling.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
    Error(std::string msg, int exit_code)
        : std::runtime_error(std::move(msg)), exit_code_(exit_code) {}
    int exit_code() const { return exit_code_; }

private:
    int exit_code_;
};

struct ArgumentError : Error {
    explicit ArgumentError(const std::string& m) : Error("argument error: " + m, 2) {}
};
struct ShapeError : Error {
    explicit ShapeError(const std::string& m) : Error("shape error: " + m, 2) {}
};
struct ConfigError : Error {
    explicit ConfigError(const std::string& m) : Error("configuration error: " + m, 2) {}
};
struct ValidationError : Error {
    explicit ValidationError(const std::string& m) : Error("validation error: " + m, 2) {}
};
struct UndefinedMetricError : Error {
    explicit UndefinedMetricError(const std::string& m) : Error("undefined metric: " + m, 2) {}
};
struct IoError : Error {
    explicit IoError(const std::string& m) : Error("io error: " + m, 3) {}
};
struct TrainingDiverged : Error {
    explicit TrainingDiverged(const std::string& m) : Error("training diverged: " + m, 4) {}
};
struct SamplingDiverged : Error {
    explicit SamplingDiverged(const std::string& m) : Error("sampling diverged: " + m, 5) {}
};

// ---------------------------------------------------------------------------
// Seeded RNG. All draws are hand-rolled on top of mt19937_64 so streams are
// reproducible independent of the standard library's distribution internals.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    return splitmix64(a ^ splitmix64(b));
}

inline std::uint64_t hash_str(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(splitmix64(seed)) {}

    // uniform in [0, 1)
    double uniform() {
        return (eng_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // standard normal via Box-Muller; one value per call, cache the pair
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * M_PI * u2);
        have_spare_ = true;
        return r * std::cos(2.0 * M_PI * u2);
    }

    // uniform integer in [lo, hi] inclusive
    std::int64_t integer(std::int64_t lo, std::int64_t hi) {
        std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<std::int64_t>(eng_() % span);
    }

    Mat normal_matrix(Eigen::Index rows, Eigen::Index cols) {
        Mat m(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal();
        return m;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(integer(0, static_cast<std::int64_t>(i) - 1));
            std::swap(v[i - 1], v[j]);
        }
    }

    std::mt19937_64& engine() { return eng_; }

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// ---------------------------------------------------------------------------
// Raw little-endian float32 tensor files (row-major).
// ---------------------------------------------------------------------------

static_assert(std::endian::native == std::endian::little,
              "dataset/checkpoint formats assume a little-endian host");

inline void write_f32(std::ostream& out, const Mat& m) {
    std::vector<float> buf(static_cast<std::size_t>(m.rows()) * static_cast<std::size_t>(m.cols()));
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) buf[k++] = static_cast<float>(m(i, j));
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

inline void write_f32_file(const std::filesystem::path& path, const Mat& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    write_f32(out, m);
    if (!out) throw IoError("short write: " + path.string());
}

inline Mat read_f32(std::istream& in, Eigen::Index rows, Eigen::Index cols) {
    std::vector<float> buf(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(buf.size() * sizeof(float)))
        throw IoError("short read of f32 tensor");
    Mat m(rows, cols);
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = buf[k++];
    return m;
}

inline Mat read_f32_file(const std::filesystem::path& path, Eigen::Index rows, Eigen::Index cols) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    Mat m = read_f32(in, rows, cols);
    // trailing bytes mean the manifest shape disagrees with the file
    char extra;
    if (in.read(&extra, 1))
        throw ValidationError("file larger than declared shape: " + path.string());
    return m;
}

inline bool all_finite(const Mat& m) { return m.allFinite(); }

}  // namespace maestro
