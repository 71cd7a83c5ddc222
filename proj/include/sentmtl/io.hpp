#ifndef SENTMTL_IO_HPP
#define SENTMTL_IO_HPP

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "sentmtl/errors.hpp"
#include "sentmtl/text.hpp"

namespace sentmtl::io {

/// Splits one delimited line. Comma-delimited files get RFC-style quote
/// handling ("" escapes a quote inside a quoted field); tab-delimited files
/// are split verbatim, which matches how the corpora are distributed.
inline std::vector<std::string> split_line(std::string_view line, char delimiter)
{
    std::vector<std::string> fields;
    if (delimiter != ',') {
        std::size_t start = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == delimiter) {
                fields.emplace_back(line.substr(start, i - start));
                start = i + 1;
            }
        }
        return fields;
    }
    std::string cur;
    bool in_quote = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (c == '"') {
            if (in_quote && i + 1 < line.size() && line[i + 1] == '"') {
                cur.push_back('"');
                ++i;
            } else {
                in_quote = !in_quote;
            }
            continue;
        }
        if (c == delimiter && !in_quote) {
            fields.push_back(std::move(cur));
            cur.clear();
            continue;
        }
        cur.push_back(c);
    }
    fields.push_back(std::move(cur));
    return fields;
}

inline std::string quote_field(std::string_view field, char delimiter)
{
    if (delimiter != ',') {
        return std::string(field);
    }
    const bool needs_quotes = field.find_first_of(",\"\n\r") != std::string_view::npos;
    if (!needs_quotes) {
        return std::string(field);
    }
    std::string out;
    out.reserve(field.size() + 2);
    out.push_back('"');
    for (const char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

/// Guesses the delimiter from the header line: a tab wins, otherwise comma.
inline char sniff_delimiter(std::string_view header_line)
{
    return header_line.find('\t') != std::string_view::npos ? '\t' : ',';
}

struct DelimitedRow {
    std::size_t line_number = 0;  // 1-based, header is line 1
    std::vector<std::string> fields;
};

/// Reads a delimited file with a mandatory header row: `on_header` runs
/// first with the parsed header, then every non-empty data row is streamed
/// to `on_row`. `delimiter` 0 means auto-detect from the header line.
inline void read_delimited(const std::filesystem::path& path, char delimiter,
                           const std::function<void(const std::vector<std::string>&)>& on_header,
                           const std::function<void(const DelimitedRow&)>& on_row)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open file: " + path.string());
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw FormatError("file has no header row: " + path.string());
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    line = text::strip_utf8_bom(line);
    if (delimiter == '\0') {
        delimiter = sniff_delimiter(line);
    }
    on_header(split_line(line, delimiter));

    DelimitedRow row;
    row.line_number = 1;
    while (std::getline(in, line)) {
        ++row.line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        row.fields = split_line(line, delimiter);
        on_row(row);
    }
}

class DelimitedWriter {
public:
    DelimitedWriter(const std::filesystem::path& path, char delimiter,
                    const std::vector<std::string>& header)
        : out_(path, std::ios::binary), delimiter_(delimiter)
    {
        if (!out_) {
            throw IoError("cannot open file for writing: " + path.string());
        }
        write_row(header);
    }

    void write_row(const std::vector<std::string>& fields)
    {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i > 0) out_ << delimiter_;
            out_ << quote_field(fields[i], delimiter_);
        }
        out_ << '\n';
    }

private:
    std::ofstream out_;
    char delimiter_;
};

inline std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open file: " + path.string());
    }
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::filesystem::path& path, std::string_view data)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open file for writing: " + path.string());
    }
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

}  // namespace sentmtl::io

#endif  // SENTMTL_IO_HPP
