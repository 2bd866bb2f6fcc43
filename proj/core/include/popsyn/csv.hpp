#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace popsyn {

struct CsvDocument {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column position by name; throws SchemaError when absent.
    std::size_t column(std::string_view name) const;
};

/// Reads a comma-separated file with a header row. Double-quoted fields may
/// contain commas and doubled quotes.
CsvDocument read_csv(const std::filesystem::path &path);
CsvDocument parse_csv(std::istream &in, std::string_view source = "<stream>");

void write_csv(const std::filesystem::path &path, const CsvDocument &doc);
void write_csv(std::ostream &out, const CsvDocument &doc);

/// Shortest decimal text that round-trips to the same double.
std::string format_real(double value);

} // namespace popsyn
