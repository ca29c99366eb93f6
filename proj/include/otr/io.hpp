#pragma once

// CSV ingestion and plain-text output helpers.

#include <Eigen/Dense>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "otr/error.hpp"
#include "otr/samplers/dataset.hpp"

namespace otr::io {

// Shortest text that reads back to the same double.
inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    std::string out(s.substr(b, e - b + 1));
    if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
    return out;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    bool quoted = false;
    for (char ch : line) {
        if (ch == '"') {
            quoted = !quoted;
            cell.push_back(ch);
        } else if (ch == ',' && !quoted) {
            out.push_back(trim(cell));
            cell.clear();
        } else {
            cell.push_back(ch);
        }
    }
    out.push_back(trim(cell));
    return out;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const {
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (header[c] == name) return static_cast<int>(c);
        }
        return -1;
    }
};

inline CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::missing_file, "cannot open " + path.string());
    CsvTable table;
    std::string line;
    bool have_header = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!have_header) {
            if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
            if (trim(line).empty()) continue;
            table.header = split_csv_line(line);
            have_header = true;
            continue;
        }
        if (trim(line).empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != table.header.size()) {
            throw Error(ErrorKind::bad_schema, path.string() + " line " + std::to_string(line_no) + ": expected " +
                                                   std::to_string(table.header.size()) + " fields, found " +
                                                   std::to_string(cells.size()));
        }
        table.rows.push_back(std::move(cells));
    }
    if (!have_header) throw Error(ErrorKind::bad_schema, path.string() + ": no header row");
    return table;
}

inline bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* first = s.data();
    if (*first == '+') ++first;
    const auto res = std::from_chars(first, s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

inline bool is_missing(const std::string& s) {
    return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "." || s == "NULL";
}

struct DatasetColumns {
    std::string outcome = "y";
    std::string treatment = "w";
    std::vector<std::string> covariates;
};

// Rows are reported 1-based, counting data rows after the header.
inline DataSet load_dataset(const std::filesystem::path& path, const DatasetColumns& cols) {
    if (cols.covariates.empty()) throw Error(ErrorKind::bad_schema, "no covariate columns configured");
    const CsvTable table = read_csv(path);
    auto need = [&](const std::string& name) {
        const int c = table.column(name);
        if (c < 0) throw Error(ErrorKind::bad_schema, "column '" + name + "' not found in " + path.string());
        return static_cast<std::size_t>(c);
    };
    const std::size_t y_col = need(cols.outcome);
    const std::size_t w_col = need(cols.treatment);
    std::vector<std::size_t> x_cols;
    for (const auto& name : cols.covariates) x_cols.push_back(need(name));
    if (table.rows.empty()) throw Error(ErrorKind::bad_schema, path.string() + " has no data rows");

    std::vector<std::size_t> missing_rows;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        bool missing = is_missing(row[y_col]) || is_missing(row[w_col]);
        for (auto c : x_cols) missing = missing || is_missing(row[c]);
        if (missing) missing_rows.push_back(r + 1);
    }
    if (!missing_rows.empty()) {
        std::string list;
        for (std::size_t i = 0; i < missing_rows.size(); ++i) {
            if (i == 10) {
                list += ", ...";
                break;
            }
            list += (i ? ", " : "") + std::to_string(missing_rows[i]);
        }
        throw Error(ErrorKind::missing_values, std::to_string(missing_rows.size()) +
                                                   " row(s) with missing values (imputation is not supported): rows " +
                                                   list);
    }

    DataSet data;
    const auto n = static_cast<Eigen::Index>(table.rows.size());
    data.covariates.resize(n, static_cast<Eigen::Index>(x_cols.size()));
    data.covariate_names = cols.covariates;
    auto binary = [](const std::string& s, int& out) {
        double v = 0.0;
        if (!parse_double(s, v) || (v != 0.0 && v != 1.0)) return false;
        out = static_cast<int>(v);
        return true;
    };
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string where = "row " + std::to_string(r + 1);
        int y = 0;
        int w = 0;
        if (!binary(row[y_col], y)) {
            throw Error(ErrorKind::non_binary_outcome, where + ": outcome '" + row[y_col] + "' is not 0/1");
        }
        if (!binary(row[w_col], w)) {
            throw Error(ErrorKind::non_binary_treatment, where + ": treatment '" + row[w_col] + "' is not 0/1");
        }
        data.outcome.push_back(y);
        data.treatment.push_back(w);
        for (std::size_t k = 0; k < x_cols.size(); ++k) {
            double v = 0.0;
            if (!parse_double(row[x_cols[k]], v) || !std::isfinite(v)) {
                throw Error(ErrorKind::bad_schema,
                            where + ": covariate '" + cols.covariates[k] + "' value '" + row[x_cols[k]] + "' is not numeric");
            }
            data.covariates(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = v;
        }
    }
    data.validate();
    return data;
}

inline void write_dataset(const std::filesystem::path& path, const DataSet& data) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::missing_file, "cannot write " + path.string());
    out << "id,y,w";
    for (const auto& name : data.covariate_names) out << ',' << name;
    out << '\n';
    for (std::size_t i = 0; i < data.size(); ++i) {
        out << (i + 1) << ',' << data.outcome[i] << ',' << data.treatment[i];
        for (Eigen::Index k = 0; k < data.covariates.cols(); ++k) {
            out << ',' << fmt(data.covariates(static_cast<Eigen::Index>(i), k));
        }
        out << '\n';
    }
}

}  // namespace otr::io
