#pragma once

// CSV and JSON output helpers shared by the command-line tools.  CSV follows
// RFC 4180: CRLF line endings, a header row, quoting only where required.
// Numbers are written with shortest round-trip formatting and a '.' decimal
// separator regardless of locale.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace pcdyn {

inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    if (res.ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
    return std::string(buf, res.ptr);
}

inline std::string csv_escape(std::string_view field) {
    const bool needs_quotes = field.find_first_of(",\"\r\n") != std::string_view::npos;
    if (!needs_quotes) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

class CsvWriter {
  public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
        : out_(path, std::ios::binary), n_cols_(header.size()) {
        if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
        write_row_strings(header);
    }

    void write_row(const std::vector<double>& values) {
        if (values.size() != n_cols_)
            throw std::invalid_argument("csv row width does not match header");
        std::string line;
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) line += ',';
            line += format_double(values[i]);
        }
        line += "\r\n";
        out_ << line;
    }

    void write_row_strings(const std::vector<std::string>& fields) {
        if (fields.size() != n_cols_)
            throw std::invalid_argument("csv row width does not match header");
        std::string line;
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) line += ',';
            line += csv_escape(fields[i]);
        }
        line += "\r\n";
        out_ << line;
    }

    void close() {
        out_.close();
        if (out_.fail()) throw std::runtime_error("csv write failed");
    }

  private:
    std::ofstream out_;
    std::size_t n_cols_;
};

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << doc.dump(2) << '\n';
    out.close();
    if (out.fail()) throw std::runtime_error("json write failed");
}

}  // namespace pcdyn
