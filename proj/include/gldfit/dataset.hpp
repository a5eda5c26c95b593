#pragma once

#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace gldfit {

struct Dataset {
    std::vector<double> response;
    std::vector<std::string> covariate_names;
    std::vector<std::vector<double>> covariates; // column-major, parallel to names
    std::size_t dropped_rows = 0;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

inline bool parse_number(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size();
}

} // namespace detail

/// Reads a headered CSV, keeping the named response and covariate columns.
/// Rows with a missing or non-numeric cell in any kept column are dropped
/// and counted.
inline Dataset ingest(const std::string& path, const std::string& response_column,
                      const std::vector<std::string>& covariate_columns) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open input file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty input file: " + path);
    const auto header = detail::split_csv_line(line);

    auto column_index = [&header](const std::string& name) {
        for (std::size_t j = 0; j < header.size(); ++j)
            if (header[j] == name) return j;
        throw std::runtime_error("missing column: " + name);
    };

    const std::size_t resp_idx = column_index(response_column);
    std::vector<std::size_t> cov_idx;
    for (const auto& name : covariate_columns) cov_idx.push_back(column_index(name));

    Dataset out;
    out.covariate_names = covariate_columns;
    out.covariates.assign(covariate_columns.size(), {});
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split_csv_line(line);
        double resp = 0.0;
        bool ok = resp_idx < cells.size() && detail::parse_number(cells[resp_idx], resp);
        std::vector<double> covs(cov_idx.size());
        for (std::size_t k = 0; ok && k < cov_idx.size(); ++k)
            ok = cov_idx[k] < cells.size() && detail::parse_number(cells[cov_idx[k]], covs[k]);
        if (!ok) {
            ++out.dropped_rows;
            continue;
        }
        out.response.push_back(resp);
        for (std::size_t k = 0; k < covs.size(); ++k) out.covariates[k].push_back(covs[k]);
    }
    if (out.response.empty()) throw std::runtime_error("no usable rows in: " + path);
    return out;
}

/// Truncation and log transform of the response.  Values strictly below the
/// threshold become exact zeros; with the log transform on, remaining
/// non-zero values are replaced by their natural log while zeros stay zero
/// and carry the hurdle atom.
inline Dataset transform(Dataset data, std::optional<double> truncate_threshold,
                         bool log_transform) {
    if (truncate_threshold) {
        for (double& y : data.response)
            if (y < *truncate_threshold) y = 0.0;
    }
    if (log_transform) {
        for (double& y : data.response) {
            if (y == 0.0) continue;
            if (!(y > 0.0))
                throw std::runtime_error("log transform requires positive non-zero responses");
            y = std::log(y);
        }
    }
    return data;
}

} // namespace gldfit
