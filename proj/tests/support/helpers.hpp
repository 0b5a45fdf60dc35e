#pragma once

#include "polyboot/cli.hpp"
#include "polyboot/sample.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace testing {

using polyboot::Observation;
using polyboot::PolyadicSample;
using polyboot::UnitId;

inline std::vector<std::string> labels(std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t k = 0; k < n; ++k) {
        out.push_back("U" + std::to_string(k));
    }
    return out;
}

/// Full ordered-pair sample with variables f(i, j).
inline PolyadicSample dyads(std::size_t n, const std::function<std::vector<double>(UnitId, UnitId)>& f,
                            std::vector<std::string> names) {
    std::vector<Observation> obs;
    for (UnitId i = 0; i < n; ++i) {
        for (UnitId j = 0; j < n; ++j) {
            if (i != j) {
                obs.push_back({{i, j}, f(i, j), 0});
            }
        }
    }
    return PolyadicSample::build(2, labels(n), std::move(names), std::move(obs));
}

/// Full dyadic sample with columns y, x and unit effects, from std::mt19937_64.
inline PolyadicSample random_dyads(std::size_t n, std::uint64_t seed, double slope = 1.0) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd;
    std::vector<double> a(n), c(n);
    for (std::size_t k = 0; k < n; ++k) {
        a[k] = nd(gen);
        c[k] = nd(gen);
    }
    return dyads(
        n,
        [&](UnitId i, UnitId j) {
            const double x = a[i] + a[j] + nd(gen);
            return std::vector<double>{slope * x + c[i] + c[j] + nd(gen), x};
        },
        {"y", "x"});
}

struct CliRun {
    int code = 0;
    std::string out;
    std::string err;
};

inline CliRun run(const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = polyboot::run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

/// Fresh directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("polyboot-test-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream(path, std::ios::binary) << text;
    return path.string();
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace testing
