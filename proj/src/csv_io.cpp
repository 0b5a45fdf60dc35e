#include "polyboot/csv_io.hpp"

#include "polyboot/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace polyboot {

namespace {

std::vector<std::string> split_record(const std::string& line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field += c;
        }
    }
    if (quoted) {
        throw DataError("line " + std::to_string(line_no) + ": unterminated quote");
    }
    fields.push_back(std::move(field));
    for (auto& f : fields) {
        const auto first = f.find_first_not_of(" \t");
        const auto last = f.find_last_not_of(" \t");
        f = first == std::string::npos ? std::string{} : f.substr(first, last - first + 1);
    }
    return fields;
}

double parse_real(const std::string& text, const std::string& column, std::size_t line_no) {
    double value = 0.0;
    const char* begin = text.data();
    const char* end = text.data() + text.size();
    if (begin != end && *begin == '+') {
        ++begin;
    }
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end || text.empty()) {
        throw DataError("line " + std::to_string(line_no) + ": column '" + column +
                        "' is not a number: '" + text + "'");
    }
    if (!std::isfinite(value)) {
        throw DataError("line " + std::to_string(line_no) + ": non-finite value in column '" + column + "'");
    }
    return value;
}

std::size_t find_column(const std::vector<std::string>& header, const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
        throw DataError("missing column '" + name + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
}

std::string quote_if_needed(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (const char c : s) {
        out += c;
        if (c == '"') {
            out += '"';
        }
    }
    return out + "\"";
}

}  // namespace

std::string format_double(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

PolyadicSample parse_csv(std::istream& in, const CsvSchema& schema) {
    const int p = schema.order;
    if (p < 2) {
        throw DataError("tuple order must be at least 2");
    }
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
            line.erase(0, 3);
        }
        if (!line.empty()) {
            header = split_record(line, line_no);
            break;
        }
    }
    if (header.empty()) {
        throw DataError("empty CSV input");
    }

    std::vector<std::string> unit_cols = schema.unit_columns;
    if (unit_cols.empty()) {
        for (int a = 1; a <= p; ++a) {
            unit_cols.push_back("u" + std::to_string(a));
        }
    }
    if (unit_cols.size() != static_cast<std::size_t>(p)) {
        throw DataError("schema lists " + std::to_string(unit_cols.size()) + " unit columns for order " +
                        std::to_string(p));
    }
    std::vector<std::size_t> unit_idx;
    for (const auto& c : unit_cols) {
        unit_idx.push_back(find_column(header, c));
    }
    const auto group_it = std::find(header.begin(), header.end(), schema.group_column);
    const bool has_group = !schema.group_column.empty() && group_it != header.end();
    const std::size_t group_idx = static_cast<std::size_t>(group_it - header.begin());
    const auto cluster_it = std::find(header.begin(), header.end(), schema.cluster_column);
    const bool has_cluster = !schema.cluster_column.empty() && cluster_it != header.end();
    const std::size_t cluster_idx = static_cast<std::size_t>(cluster_it - header.begin());

    std::vector<std::string> var_names = schema.variable_columns;
    std::vector<std::size_t> var_idx;
    if (var_names.empty()) {
        for (std::size_t c = 0; c < header.size(); ++c) {
            const bool reserved = std::find(unit_idx.begin(), unit_idx.end(), c) != unit_idx.end() ||
                                  (has_group && c == group_idx) || (has_cluster && c == cluster_idx);
            if (!reserved) {
                var_names.push_back(header[c]);
                var_idx.push_back(c);
            }
        }
    } else {
        for (const auto& c : var_names) {
            var_idx.push_back(find_column(header, c));
        }
    }

    std::map<std::string, UnitId> unit_ids;
    std::vector<std::string> unit_labels;
    std::map<std::string, std::uint32_t> group_ids;
    std::vector<std::string> group_labels;
    std::map<UnitId, std::uint32_t> unit_group;
    std::map<std::string, std::uint32_t> level_ids;
    std::vector<std::string> level_labels;
    std::vector<Observation> observations;

    auto intern = [](auto& ids, auto& labels, const std::string& key) {
        const auto it = ids.find(key);
        if (it != ids.end()) {
            return it->second;
        }
        const auto id = static_cast<typename std::decay_t<decltype(ids)>::mapped_type>(labels.size());
        ids.emplace(key, id);
        labels.push_back(key);
        return id;
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }
        const auto fields = split_record(line, line_no);
        if (fields.size() != header.size()) {
            throw DataError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
        }
        Observation obs;
        for (std::size_t a = 0; a < unit_idx.size(); ++a) {
            const auto& label = fields[unit_idx[a]];
            if (label.empty()) {
                throw DataError("line " + std::to_string(line_no) + ": empty unit label in column '" +
                                unit_cols[a] + "'");
            }
            obs.index.push_back(intern(unit_ids, unit_labels, label));
        }
        for (std::size_t a = 0; a < obs.index.size(); ++a) {
            for (std::size_t b = 0; b < a; ++b) {
                if (obs.index[a] == obs.index[b]) {
                    throw DataError("line " + std::to_string(line_no) + ": tuple repeats unit '" +
                                    unit_labels[obs.index[a]] + "'");
                }
            }
        }
        if (has_group) {
            const auto g = intern(group_ids, group_labels, fields[group_idx]);
            const auto [it, inserted] = unit_group.emplace(obs.index[0], g);
            if (!inserted && it->second != g) {
                throw DataError("line " + std::to_string(line_no) + ": unit '" + unit_labels[obs.index[0]] +
                                "' assigned to two groups");
            }
        }
        if (has_cluster) {
            obs.cluster_level = intern(level_ids, level_labels, fields[cluster_idx]);
        }
        for (std::size_t c = 0; c < var_idx.size(); ++c) {
            obs.variables.push_back(parse_real(fields[var_idx[c]], var_names[c], line_no));
        }
        observations.push_back(std::move(obs));
    }

    std::optional<GroupMap> groups;
    if (has_group) {
        GroupMap g{std::vector<std::uint32_t>(unit_labels.size(), 0), group_labels};
        for (std::size_t u = 0; u < unit_labels.size(); ++u) {
            const auto it = unit_group.find(static_cast<UnitId>(u));
            if (it == unit_group.end()) {
                throw DataError("unit '" + unit_labels[u] + "' never appears first in a row, so its group is unknown");
            }
            g.group_of_unit[u] = it->second;
        }
        groups = std::move(g);
    }
    std::optional<ClusterDimension> cluster;
    if (has_cluster) {
        cluster = ClusterDimension{schema.cluster_column, level_labels};
    }
    return PolyadicSample::build(p, std::move(unit_labels), std::move(var_names), std::move(observations),
                                 std::move(groups), std::move(cluster));
}

PolyadicSample load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open '" + path.string() + "'");
    }
    return parse_csv(in, schema);
}

void write_csv(const PolyadicSample& sample, std::ostream& out) {
    const int p = sample.order();
    for (int a = 1; a <= p; ++a) {
        out << (a > 1 ? "," : "") << 'u' << a;
    }
    if (sample.has_groups()) {
        out << ",group";
    }
    if (sample.has_cluster()) {
        out << ',' << quote_if_needed(sample.cluster().name);
    }
    for (const auto& name : sample.variable_names()) {
        out << ',' << quote_if_needed(name);
    }
    out << '\n';
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const auto t = sample.tuple(i);
        for (std::size_t a = 0; a < t.size(); ++a) {
            out << (a ? "," : "") << quote_if_needed(sample.unit_labels()[t[a]]);
        }
        if (sample.has_groups()) {
            const auto& g = sample.groups();
            out << ',' << quote_if_needed(g.labels[g.group_of_unit[t[0]]]);
        }
        if (sample.has_cluster()) {
            out << ',' << quote_if_needed(sample.cluster().labels[sample.cluster_level(i)]);
        }
        for (const double v : sample.row(i)) {
            out << ',' << format_double(v);
        }
        out << '\n';
    }
}

void write_csv(const PolyadicSample& sample, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write '" + path.string() + "'");
    }
    write_csv(sample, out);
}

}  // namespace polyboot
