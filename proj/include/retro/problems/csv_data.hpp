#pragma once

#include <cerrno>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "retro/problems/dataset.hpp"

namespace retro {

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

inline double parse_double_strict(const std::string& s, std::size_t line_no) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    while (end && (*end == ' ' || *end == '\r' || *end == '\t')) ++end;
    if (end == s.c_str() || (end && *end != '\0') || errno == ERANGE)
        throw config_error("csv line " + std::to_string(line_no) +
                           ": cannot parse value '" + s + "'");
    return v;
}

} // namespace detail

/// Loads a finite dataset from CSV. Expects a header row; the column named
/// "y" is the response, every other column is a feature. All values are
/// parsed as 64-bit floats.
inline DatasetPtr load_csv_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw config_error("cannot open csv file: " + path.string());
    auto ds = std::make_shared<Dataset>();

    std::string line;
    if (!std::getline(in, line))
        throw config_error("csv file is empty: " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = detail::split_csv_line(line);
    std::ptrdiff_t y_col = -1;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (header[j] == "y") {
            if (y_col >= 0)
                throw config_error("csv has more than one 'y' column");
            y_col = static_cast<std::ptrdiff_t>(j);
        } else {
            ds->feature_names.push_back(header[j]);
        }
    }
    if (y_col < 0)
        throw config_error("csv header has no column named 'y': " +
                           path.string());
    ds->cols = header.size() - 1;
    if (ds->cols == 0)
        throw config_error("csv has no feature columns: " + path.string());

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != header.size())
            throw config_error("csv line " + std::to_string(line_no) +
                               ": expected " + std::to_string(header.size()) +
                               " fields, got " +
                               std::to_string(fields.size()));
        for (std::size_t j = 0; j < fields.size(); ++j) {
            const double v = detail::parse_double_strict(fields[j], line_no);
            if (static_cast<std::ptrdiff_t>(j) == y_col)
                ds->responses.push_back(v);
            else
                ds->features.push_back(v);
        }
        ++ds->rows;
    }
    if (ds->rows == 0)
        throw config_error("csv has a header but no data rows: " +
                           path.string());
    return ds;
}

} // namespace retro
