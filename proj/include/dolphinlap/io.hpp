#pragma once

// Small CSV reader/writer and the fixed numeric formatting used by every
// exported artifact (9 significant digits, "nan"/"inf" literals).

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dolphinlap/error.hpp"

namespace dolphinlap::io {

inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0.0) return "0";  // folds -0
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r' || s[b] == '\n')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' || s[e - 1] == '\n')) --e;
    return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            cells.push_back(trim(line.substr(start, i - start)));
            start = i + 1;
        }
    }
    return cells;
}

/// Parses a numeric cell. Empty cells yield false; "nan"/"inf" parse to
/// non-finite values so callers can flag them.
inline bool parse_cell(const std::string& cell, double& out) {
    const std::string c = trim(cell);
    if (c.empty()) return false;
    char* end = nullptr;
    out = std::strtod(c.c_str(), &end);
    if (end == c.c_str() || *end != '\0')
        throw InputError("unparseable numeric cell '" + cell + "'");
    return true;
}

/// Whole-file CSV table with a header row. Cells are kept as text.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        return -1;
    }

    double number(std::size_t row, const std::string& name) const {
        const int c = column(name);
        if (c < 0) throw InputError("missing column '" + name + "'");
        double v = std::nan("");
        const auto& r = rows.at(row);
        if (static_cast<std::size_t>(c) < r.size()) parse_cell(r[c], v);
        return v;
    }

    const std::string& text(std::size_t row, const std::string& name) const {
        const int c = column(name);
        if (c < 0) throw InputError("missing column '" + name + "'");
        return rows.at(row).at(c);
    }
};

inline Table read_table(std::istream& in) {
    Table table;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto cells = split_csv_line(line);
        if (!have_header) {
            table.header = std::move(cells);
            have_header = true;
        } else {
            table.rows.push_back(std::move(cells));
        }
    }
    if (!have_header) throw InputError("empty file");
    return table;
}

inline Table read_table_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    return read_table(in);
}

/// Row-oriented CSV builder; every numeric value goes through format_number.
class CsvWriter {
   public:
    explicit CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
        append_row_text(header);
    }

    CsvWriter& text(const std::string& s) {
        row_.push_back(s);
        return *this;
    }
    CsvWriter& num(double v) {
        row_.push_back(format_number(v));
        return *this;
    }
    CsvWriter& integer(long long v) {
        row_.push_back(std::to_string(v));
        return *this;
    }
    void end_row() {
        if (row_.size() != columns_)
            throw Error("csv row has " + std::to_string(row_.size()) + " cells, expected " +
                        std::to_string(columns_));
        append_row_text(row_);
        row_.clear();
    }

    const std::string& str() const { return out_; }

    void save(const std::string& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw InputError("cannot write '" + path + "'");
        f << out_;
    }

   private:
    void append_row_text(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ += ',';
            out_ += cells[i];
        }
        out_ += '\n';
    }

    std::size_t columns_;
    std::vector<std::string> row_;
    std::string out_;
};

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot write '" + path + "'");
    f << content;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

/// 64-bit FNV-1a; stable across platforms, used for config hashes.
inline std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace dolphinlap::io
