#include "polyboot/fixtures.hpp"

#include "polyboot/coverage.hpp"
#include "polyboot/csv_io.hpp"
#include "polyboot/errors.hpp"
#include "polyboot/rng.hpp"

#include <cmath>

namespace polyboot {

namespace {

std::vector<std::string> unit_labels(std::size_t n, const char* prefix) {
    std::vector<std::string> labels(n);
    for (std::size_t k = 0; k < n; ++k) {
        labels[k] = prefix + std::to_string(k + 1);
    }
    return labels;
}

PolyadicSample exact_line(std::uint64_t seed) {
    const std::size_t n = 6;
    Stream s(seed, 0, StreamRole::fixture, 1);
    std::vector<Observation> obs;
    for (UnitId i = 0; i < n; ++i) {
        for (UnitId j = 0; j < n; ++j) {
            if (i != j) {
                const double x = 0.5 + 3.0 * s.uniform();
                obs.push_back({{i, j}, {2.0 * x, x}, 0});
            }
        }
    }
    return PolyadicSample::build(2, unit_labels(n, "c"), {"lnflow", "lncost"}, std::move(obs));
}

PolyadicSample iv_overidentified(std::uint64_t seed) {
    const std::size_t n = 15;
    Stream latent(seed, 0, StreamRole::fixture, 3);
    Stream noise(seed, 1, StreamRole::fixture, 3);
    std::vector<double> a(n * 3);
    for (auto& v : a) {
        v = latent.normal();
    }
    std::vector<Observation> obs;
    for (UnitId i = 0; i < n; ++i) {
        for (UnitId j = 0; j < n; ++j) {
            if (i == j) {
                continue;
            }
            double z[3];
            for (int m = 0; m < 3; ++m) {
                z[m] = a[i * 3 + m] + a[j * 3 + m] + noise.normal();
            }
            const double v = noise.normal();
            const double x = z[0] + 0.5 * z[1] + 0.25 * z[2] + v;
            const double y = 1.5 * x + 0.8 * v + noise.normal();
            obs.push_back({{i, j}, {y, x, z[0], z[1], z[2]}, 0});
        }
    }
    return PolyadicSample::build(2, unit_labels(n, "m"), {"y", "x", "z1", "z2", "z3"}, std::move(obs));
}

PolyadicSample triadic(std::uint64_t seed) {
    const std::size_t n = 6;
    Stream latent(seed, 0, StreamRole::fixture, 4);
    Stream noise(seed, 1, StreamRole::fixture, 4);
    std::vector<double> c(n);
    for (auto& v : c) {
        v = latent.normal();
    }
    std::vector<Observation> obs;
    for (UnitId i = 0; i < n; ++i) {
        for (UnitId j = 0; j < n; ++j) {
            for (UnitId k = 0; k < n; ++k) {
                if (i == j || i == k || j == k) {
                    continue;
                }
                obs.push_back({{i, j, k}, {c[i] + c[j] + c[k] + 0.3 * noise.normal()}, 0});
            }
        }
    }
    return PolyadicSample::build(3, unit_labels(n, "t"), {"x"}, std::move(obs));
}

PolyadicSample gravity(std::uint64_t seed) {
    const std::size_t n = 20;
    Stream latent(seed, 0, StreamRole::fixture, 5);
    Stream noise(seed, 1, StreamRole::fixture, 5);
    std::vector<double> px(n), py(n), exporter(n), importer(n);
    for (std::size_t k = 0; k < n; ++k) {
        px[k] = 10.0 * latent.uniform();
        py[k] = 10.0 * latent.uniform();
        exporter[k] = 0.5 * latent.normal();
        importer[k] = 0.5 * latent.normal();
    }
    std::vector<Observation> obs;
    for (UnitId i = 0; i < n; ++i) {
        for (UnitId j = 0; j < n; ++j) {
            if (i == j) {
                continue;
            }
            const double dist = std::hypot(px[i] - px[j], py[i] - py[j]) + 0.1;
            const double lndist = std::log(dist);
            const double border = dist < 2.0 ? 1.0 : 0.0;
            const double mu = std::exp(3.0 - lndist + 0.5 * border + exporter[i] + importer[j]);
            // Multiplicative mean-one noise plus occasional zero flows.
            double flow = mu * noise.exponential();
            if (noise.uniform() < 0.1) {
                flow = 0.0;
            }
            obs.push_back({{i, j}, {flow, lndist, border}, 0});
        }
    }
    return PolyadicSample::build(2, unit_labels(n, "r"), {"flow", "lndist", "border"}, std::move(obs));
}

}  // namespace

std::vector<std::string> fixture_names() {
    return {"exact-line", "unit-effects", "iv-overidentified", "triadic", "gravity"};
}

std::string fixture_description(const std::string& name) {
    if (name == "exact-line") {
        return "n=6 full dyads, lnflow = 2 * lncost";
    }
    if (name == "unit-effects") {
        return "n=40 full dyads, x = C_i + C_j + eps, sd(C) = 1, sd(eps) = 0.3";
    }
    if (name == "iv-overidentified") {
        return "n=15 full dyads, y = 1.5 x + u with endogenous x and instruments z1..z3";
    }
    if (name == "triadic") {
        return "n=6 full ordered triples, x = C_i + C_j + C_k + eps";
    }
    if (name == "gravity") {
        return "n=20 full dyads, flow ~ exp(3 - lndist + 0.5 border + effects) with zeros";
    }
    throw ParamError("unknown fixture '" + name + "'");
}

PolyadicSample make_fixture(const std::string& name, std::uint64_t seed) {
    if (name == "exact-line") {
        return exact_line(seed);
    }
    if (name == "unit-effects") {
        return generate_synthetic(unit_effects_dgp(40, 1.0, 0.3), seed, 0);
    }
    if (name == "iv-overidentified") {
        return iv_overidentified(seed);
    }
    if (name == "triadic") {
        return triadic(seed);
    }
    if (name == "gravity") {
        return gravity(seed);
    }
    throw ParamError("unknown fixture '" + name + "'");
}

std::filesystem::path write_fixture(const std::string& name, std::uint64_t seed, const std::filesystem::path& dir) {
    const auto sample = make_fixture(name, seed);
    std::filesystem::create_directories(dir);
    const auto path = dir / (name + ".csv");
    write_csv(sample, path);
    return path;
}

}  // namespace polyboot
