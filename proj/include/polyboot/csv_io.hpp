#pragma once

#include "polyboot/sample.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace polyboot {

/// Column mapping for polyadic CSV files.
///
/// The header must contain the unit columns (`u1`..`uP` unless overridden).
/// An optional `group` column assigns the group of the row's first unit; an
/// optional `cluster` column names the level of an extra clustering
/// dimension. Every other column is a numeric variable unless
/// `variable_columns` restricts the selection.
struct CsvSchema {
    int order = 2;
    std::vector<std::string> unit_columns;
    std::string group_column = "group";
    std::string cluster_column = "cluster";
    std::vector<std::string> variable_columns;
};

PolyadicSample load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
PolyadicSample parse_csv(std::istream& in, const CsvSchema& schema = {});

/// Writes a sample in the layout accepted by load_csv. Values use the
/// shortest representation that round-trips exactly.
void write_csv(const PolyadicSample& sample, std::ostream& out);
void write_csv(const PolyadicSample& sample, const std::filesystem::path& path);

/// Shortest round-trip decimal form of a double.
std::string format_double(double value);

}  // namespace polyboot
