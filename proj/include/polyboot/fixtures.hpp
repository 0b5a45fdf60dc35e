#pragma once

#include "polyboot/sample.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace polyboot {

inline constexpr std::uint64_t kDefaultFixtureSeed = 20240;

/// exact-line, unit-effects, iv-overidentified, triadic, gravity.
std::vector<std::string> fixture_names();
std::string fixture_description(const std::string& name);

/// Deterministic synthetic sample; ParamError for an unknown name.
PolyadicSample make_fixture(const std::string& name, std::uint64_t seed = kDefaultFixtureSeed);

/// Writes <dir>/<name>.csv and returns its path.
std::filesystem::path write_fixture(const std::string& name, std::uint64_t seed, const std::filesystem::path& dir);

}  // namespace polyboot
