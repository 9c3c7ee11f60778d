#include "peering/io/result_table.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "peering/error.hpp"
#include "peering/io/csv.hpp"
#include "peering/io/records.hpp"

namespace peering::io {

namespace {

// Inverse of format_number, which writes non-finite values as nan / inf / -inf.
bool parse_cell(std::string_view text, double& out) {
    if (text == "nan") out = std::numeric_limits<double>::quiet_NaN();
    else if (text == "inf") out = std::numeric_limits<double>::infinity();
    else if (text == "-inf") out = -std::numeric_limits<double>::infinity();
    else return parse_double(text, out);
    return true;
}

constexpr std::string_view type_names[] = {"money", "fraction", "km", "count", "number", "text"};

double canonical(double v) {
    double out = 0.0;
    const std::string s = format_number(v);
    std::from_chars(s.data(), s.data() + s.size(), out);
    return std::isnan(v) ? v : out;
}

std::string cell_text(const Cell& c) {
    if (const double* d = std::get_if<double>(&c)) return format_number(*d);
    return std::get<std::string>(c);
}

}  // namespace

std::string_view to_string(ColumnType t) { return type_names[static_cast<int>(t)]; }

ColumnType column_type_from(std::string_view name) {
    for (int i = 0; i < 6; ++i)
        if (type_names[i] == name) return static_cast<ColumnType>(i);
    throw ValidationError("unknown column type '" + std::string(name) + "'");
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific, 8);
    return std::string(buf, res.ptr);
}

ResultTable::ResultTable(std::string experiment, std::string fingerprint, std::vector<Column> columns)
    : experiment_(std::move(experiment)), fingerprint_(std::move(fingerprint)), columns_(std::move(columns)) {
    if (columns_.empty()) throw ValidationError("result table needs at least one column");
}

void ResultTable::add_row(std::vector<Cell> row) {
    if (row.size() != columns_.size())
        throw ValidationError("row has " + std::to_string(row.size()) + " cells; table has " +
                              std::to_string(columns_.size()) + " columns");
    for (std::size_t i = 0; i < row.size(); ++i) {
        const bool is_text = columns_[i].type == ColumnType::text;
        if (is_text != std::holds_alternative<std::string>(row[i]))
            throw ValidationError("cell kind does not match column '" + columns_[i].name + "'");
        if (double* d = std::get_if<double>(&row[i])) *d = canonical(*d);
    }
    rows_.push_back(std::move(row));
}

std::size_t ResultTable::column_index(std::string_view name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i)
        if (columns_[i].name == name) return i;
    throw ValidationError("no column named '" + std::string(name) + "'");
}

double ResultTable::number(std::size_t row, std::string_view column) const {
    return std::get<double>(rows_.at(row).at(column_index(column)));
}

const std::string& ResultTable::text(std::size_t row, std::string_view column) const {
    return std::get<std::string>(rows_.at(row).at(column_index(column)));
}

bool operator==(const ResultTable& a, const ResultTable& b) {
    if (a.experiment_ != b.experiment_ || a.fingerprint_ != b.fingerprint_ || a.columns_ != b.columns_ ||
        a.rows_.size() != b.rows_.size())
        return false;
    for (std::size_t r = 0; r < a.rows_.size(); ++r)
        for (std::size_t c = 0; c < a.columns_.size(); ++c)
            if (cell_text(a.rows_[r][c]) != cell_text(b.rows_[r][c])) return false;
    return true;
}

std::string render_results(const ResultTable& t) {
    std::ostringstream os;
    os << "# experiment=" << t.experiment() << '\n';
    os << "# fingerprint=" << t.fingerprint() << '\n';
    os << "# types=";
    for (std::size_t i = 0; i < t.columns().size(); ++i) os << (i ? "," : "") << to_string(t.columns()[i].type);
    os << '\n';
    std::vector<std::string> names;
    for (const auto& c : t.columns()) names.push_back(c.name);
    write_csv_row(os, names);
    for (const auto& r : t.rows()) {
        std::vector<std::string> cells;
        for (const auto& c : r) cells.push_back(cell_text(c));
        write_csv_row(os, cells);
    }
    return os.str();
}

ResultTable parse_results(std::string_view text, const std::string& source) {
    std::string experiment, fingerprint, types;
    std::size_t line = 0;
    std::size_t pos = 0;
    while (pos < text.size() && text[pos] == '#') {
        std::size_t end = pos;
        while (end < text.size() && text[end] != '\n') ++end;
        std::string_view l = text.substr(pos, end - pos);
        ++line;
        if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
        const auto eq = l.find('=');
        if (l.substr(0, 2) == "# " && eq != std::string_view::npos) {
            const auto key = l.substr(2, eq - 2);
            const std::string value(l.substr(eq + 1));
            if (key == "experiment") experiment = value;
            else if (key == "fingerprint") fingerprint = value;
            else if (key == "types") types = value;
        }
        pos = std::min(text.size(), end + 1);
    }
    if (types.empty()) throw ParseError(source, line + 1, "", "missing '# types=' comment");

    auto rows = parse_csv(text.substr(pos), source);
    if (rows.empty()) throw ParseError(source, line + 1, "", "missing header row");
    const auto type_row = parse_csv(types, source);
    const auto& names = rows.front().fields;
    if (type_row.empty() || type_row.front().fields.size() != names.size())
        throw ParseError(source, line, "", "types comment does not match the header");

    std::vector<Column> cols;
    for (std::size_t i = 0; i < names.size(); ++i) cols.push_back({names[i], column_type_from(type_row.front().fields[i])});
    ResultTable t(experiment, fingerprint, cols);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const std::size_t at = row.line + line;
        if (row.fields.size() != cols.size()) throw ParseError(source, at, "", "wrong number of fields");
        std::vector<Cell> cells;
        for (std::size_t i = 0; i < cols.size(); ++i) {
            if (cols[i].type == ColumnType::text) {
                cells.emplace_back(row.fields[i]);
                continue;
            }
            double v = 0.0;
            if (!parse_cell(row.fields[i], v)) throw ParseError(source, at, cols[i].name, "not a number");
            cells.emplace_back(v);
        }
        t.add_row(std::move(cells));
    }
    return t;
}

void write_results(const ResultTable& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << render_results(table);
    if (!out) throw IoError("error writing " + path);
}

ResultTable read_results(const std::string& path) { return parse_results(read_file(path), path); }

void write_plot_data(const std::string& path, const std::vector<std::string>& names,
                     const std::vector<std::vector<double>>& columns) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << '#';
    for (const auto& n : names) out << ' ' << n;
    out << '\n';
    const std::size_t rows = columns.empty() ? 0 : columns.front().size();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? " " : "") << format_number(columns[c].at(r));
        out << '\n';
    }
    if (!out) throw IoError("error writing " + path);
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    return s;
}

}  // namespace peering::io
