#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mclab/errors.hpp"

namespace mclab {

// RFC 4180 CSV with '.' decimal separator and 17 significant digits, per the
// output contract.

inline std::string format_real(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline std::string csv_quote(const std::string& field) {
    const bool needs_quote = field.find_first_of(",\"\r\n") != std::string::npos;
    if (!needs_quote) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

class CsvWriter {
  public:
    explicit CsvWriter(const std::filesystem::path& path) : out_(path) {
        if (!out_) throw IOError("cannot open CSV file for writing: " + path.string());
    }

    void row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out_ << ',';
            out_ << csv_quote(fields[i]);
        }
        out_ << "\r\n";
        if (!out_) throw IOError("CSV write failed");
    }

  private:
    std::ofstream out_;
};

}  // namespace mclab
