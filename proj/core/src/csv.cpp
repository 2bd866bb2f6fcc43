#include "popsyn/csv.hpp"

#include "popsyn/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace popsyn {

std::size_t CsvDocument::column(std::string_view name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
        throw SchemaError(fmt::format("missing CSV column '{}'", name));
    }
    return static_cast<std::size_t>(it - header.begin());
}

namespace {

// Splits one logical record. Returns false at end of input.
bool read_record(std::istream &in, std::vector<std::string> &fields) {
    fields.clear();
    std::string field;
    bool in_quotes = false;
    bool any = false;
    char c = 0;
    while (in.get(c)) {
        any = true;
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c == '\n') {
            break;
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    if (!any) {
        return false;
    }
    fields.push_back(std::move(field));
    return true;
}

bool needs_quotes(std::string_view s) {
    return s.find_first_of(",\"\n\r") != std::string_view::npos;
}

void write_field(std::ostream &out, std::string_view s) {
    if (!needs_quotes(s)) {
        out << s;
        return;
    }
    out << '"';
    for (char c : s) {
        if (c == '"') {
            out << '"';
        }
        out << c;
    }
    out << '"';
}

} // namespace

CsvDocument parse_csv(std::istream &in, std::string_view source) {
    CsvDocument doc;
    if (!read_record(in, doc.header)) {
        throw IoError(fmt::format("{}: empty CSV file", source));
    }
    std::vector<std::string> fields;
    std::size_t line = 1;
    while (read_record(in, fields)) {
        ++line;
        if (fields.size() == 1 && fields[0].empty()) {
            continue;
        }
        if (fields.size() != doc.header.size()) {
            throw IoError(fmt::format("{}:{}: expected {} fields, found {}", source, line,
                                      doc.header.size(), fields.size()));
        }
        doc.rows.push_back(fields);
    }
    return doc;
}

CsvDocument read_csv(const std::filesystem::path &path) {
    std::ifstream in{path, std::ios::binary};
    if (!in) {
        throw IoError(fmt::format("cannot open '{}'", path.string()));
    }
    return parse_csv(in, path.string());
}

void write_csv(std::ostream &out, const CsvDocument &doc) {
    auto write_row = [&](const std::vector<std::string> &row) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i > 0) {
                out << ',';
            }
            write_field(out, row[i]);
        }
        out << '\n';
    };
    write_row(doc.header);
    for (const auto &row : doc.rows) {
        write_row(row);
    }
}

void write_csv(const std::filesystem::path &path, const CsvDocument &doc) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out{path, std::ios::binary};
    if (!out) {
        throw IoError(fmt::format("cannot write '{}'", path.string()));
    }
    write_csv(out, doc);
}

std::string format_real(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

} // namespace popsyn
