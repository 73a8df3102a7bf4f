// csv.hpp — deterministic CSV reading/writing (9 significant digits, no locale)

#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "djt/errors.hpp"

namespace djt {

// Fixed "%.9g" rendering so identical inputs produce byte-identical files.
inline std::string format_g9(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header) : columns_(std::move(header)) {
        join(columns_);
    }

    void row(const std::vector<std::string>& cells) {
        if (cells.size() != columns_.size())
            throw ConfigError("csv row width does not match header");
        join(cells);
    }

    const std::string& str() const { return body_; }

    // Whole-buffer write: either the complete file appears or nothing does.
    void write(const std::string& path) const {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot open output file: " + path);
        out << body_;
        if (!out) throw NumericError("failed writing " + path);
    }

private:
    void join(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) body_ += ',';
            body_ += cells[i];
        }
        body_ += '\n';
    }

    std::vector<std::string> columns_;
    std::string body_;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open file: " + path);
    CsvTable table;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (line.back() == ',') cells.emplace_back();
        if (lineno == 1) {
            table.header = std::move(cells);
        } else {
            if (cells.size() != table.header.size())
                throw ParseError("csv row width does not match header in " + path, lineno);
            table.rows.push_back(std::move(cells));
        }
    }
    if (table.header.empty()) throw ParseError("empty csv file: " + path);
    return table;
}

inline double parse_double(const std::string& cell, std::size_t row) {
    try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
        return v;
    } catch (const std::exception&) {
        throw ParseError("cannot parse numeric cell '" + cell + "'", row);
    }
}

} // namespace djt
