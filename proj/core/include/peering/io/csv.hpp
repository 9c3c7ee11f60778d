#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace peering::io {

struct CsvRow {
    std::size_t line = 0;  // 1-based line where the record starts
    std::vector<std::string> fields;
};

/// Comma-separated records with double-quote escaping ("" inside quotes).
/// Quoted fields may span lines. Blank lines are skipped. Throws ParseError on
/// an unterminated quote or stray characters after a closing quote.
std::vector<CsvRow> parse_csv(std::string_view text, const std::string& source);

/// Reads a whole file; throws IoError if it cannot be opened.
std::string read_file(const std::string& path);

/// Quotes the field if it contains a comma, quote, CR or LF.
std::string csv_escape(std::string_view field);

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace peering::io
