#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace srl {

/// Shortest round-trippable decimal rendering of a double for CSV cells.
inline std::string csv_num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string csv_opt(const std::optional<double>& v) {
    return v ? csv_num(*v) : std::string("NA");
}

/// A header plus string rows; writes comma-separated text with a trailing
/// newline. Cells are expected to be comma-free (numbers, identifiers, NA).
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> cells) {
        if (cells.size() != header.size())
            throw std::invalid_argument("csv: row width does not match header");
        rows.push_back(std::move(cells));
    }

    std::string to_string() const {
        std::string out;
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i) out += ',';
            out += header[i];
        }
        out += '\n';
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (i) out += ',';
                out += row[i];
            }
            out += '\n';
        }
        return out;
    }

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("csv: cannot write " + path);
        out << to_string();
        if (!out) throw std::runtime_error("csv: write failed for " + path);
    }
};

}  // namespace srl
