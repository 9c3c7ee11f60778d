#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace peering::io {

enum class ColumnType { money, fraction, km, count, number, text };

std::string_view to_string(ColumnType t);
ColumnType column_type_from(std::string_view name);

struct Column {
    std::string name;
    ColumnType type = ColumnType::number;

    friend bool operator==(const Column&, const Column&) = default;
};

using Cell = std::variant<double, std::string>;

/// Numbers as 9-significant-digit scientific text ("1.23456789e+01"), independent of locale.
std::string format_number(double v);

/// A typed table tagged with the experiment and the scenario fingerprint.
/// Numeric cells are stored at output precision, so a written table reads back equal.
class ResultTable {
public:
    ResultTable() = default;
    ResultTable(std::string experiment, std::string fingerprint, std::vector<Column> columns);

    const std::string& experiment() const { return experiment_; }
    const std::string& fingerprint() const { return fingerprint_; }
    const std::vector<Column>& columns() const { return columns_; }
    const std::vector<std::vector<Cell>>& rows() const { return rows_; }

    /// Throws ValidationError if the row width or a cell's kind does not match the columns.
    void add_row(std::vector<Cell> row);

    std::size_t column_index(std::string_view name) const;
    double number(std::size_t row, std::string_view column) const;
    const std::string& text(std::size_t row, std::string_view column) const;

    /// Cell-wise equality of the written text (so NaN cells compare equal).
    friend bool operator==(const ResultTable& a, const ResultTable& b);

private:
    std::string experiment_;
    std::string fingerprint_;
    std::vector<Column> columns_;
    std::vector<std::vector<Cell>> rows_;
};

std::string render_results(const ResultTable& table);
ResultTable parse_results(std::string_view text, const std::string& source);

/// Throws IoError if the file cannot be written.
void write_results(const ResultTable& table, const std::string& path);
ResultTable read_results(const std::string& path);

/// Whitespace-separated columns with a '#' header line, one file per curve, for plotting tools.
void write_plot_data(const std::string& path, const std::vector<std::string>& names,
                     const std::vector<std::vector<double>>& columns);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 14695981039346656037ull);
std::string hex64(std::uint64_t v);

}  // namespace peering::io
