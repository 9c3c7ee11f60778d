#include "peering/io/csv.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include "peering/error.hpp"

namespace peering::io {

std::vector<CsvRow> parse_csv(std::string_view text, const std::string& source) {
    if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

    std::vector<CsvRow> rows;
    CsvRow row;
    std::string field;
    std::size_t line = 1;
    bool quoted = false, after_quote = false, any = false;

    auto end_field = [&] {
        row.fields.push_back(std::move(field));
        field.clear();
        after_quote = false;
    };
    auto end_row = [&] {
        if (any) {
            end_field();
            rows.push_back(std::move(row));
        }
        row = CsvRow{};
        any = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (!any) {
            row.line = line;
        }
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                    after_quote = true;
                }
            } else {
                if (c == '\n') ++line;
                field += c;
            }
            continue;
        }
        switch (c) {
            case ',':
                any = true;
                end_field();
                break;
            case '\r':
                break;
            case '\n':
                end_row();
                ++line;
                break;
            case '"':
                if (!field.empty() || after_quote)
                    throw ParseError(source, line, "", "unexpected quote inside an unquoted field");
                quoted = true;
                any = true;
                break;
            default:
                if (after_quote) throw ParseError(source, line, "", "characters after a closing quote");
                field += c;
                any = true;
        }
    }
    if (quoted) throw ParseError(source, row.line, "", "unterminated quoted field");
    end_row();
    return rows;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("error reading " + path);
    return ss.str();
}

std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "," : "") << csv_escape(fields[i]);
    out << '\n';
}

}  // namespace peering::io
