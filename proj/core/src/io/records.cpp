#include "peering/io/records.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

#include "peering/error.hpp"
#include "peering/io/csv.hpp"

namespace peering::io {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

std::vector<std::string> split_header(std::string_view header) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = header.find(',', start);
        out.emplace_back(header.substr(start, comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

// Rows after a header that must match `expected` exactly (field-wise, trimmed).
std::vector<CsvRow> table_rows(std::string_view text, const std::string& source, std::string_view expected) {
    auto rows = parse_csv(text, source);
    const auto want = split_header(expected);
    if (rows.empty()) throw ParseError(source, 1, "", "missing header row; expected " + std::string(expected));
    const auto& head = rows.front();
    bool ok = head.fields.size() == want.size();
    for (std::size_t i = 0; ok && i < want.size(); ++i) ok = trim(head.fields[i]) == want[i];
    if (!ok) throw ParseError(source, head.line, "", "header does not match schema " + std::string(expected));
    rows.erase(rows.begin());
    for (const auto& r : rows)
        if (r.fields.size() != want.size()) {
            std::ostringstream os;
            os << "expected " << want.size() << " fields, found " << r.fields.size();
            throw ParseError(source, r.line, "", os.str());
        }
    return rows;
}

double number(const CsvRow& row, std::size_t i, const std::string& column, const std::string& source) {
    double v = 0.0;
    if (!parse_double(row.fields[i], v))
        throw ParseError(source, row.line, column, "not a number: '" + row.fields[i] + "'");
    return v;
}

std::string text_field(const CsvRow& row, std::size_t i, const std::string& column, const std::string& source) {
    std::string s(trim(row.fields[i]));
    if (s.empty()) throw ParseError(source, row.line, column, "empty value");
    return s;
}

}  // namespace

bool parse_double(std::string_view text, double& out) {
    text = trim(text);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    if (text.empty()) return false;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(out);
}

std::vector<geo::County> parse_counties(std::string_view text, const std::string& source) {
    std::vector<geo::County> out;
    std::map<std::string, std::size_t> seen;
    for (const auto& r : table_rows(text, source, county_header)) {
        geo::County c;
        c.fips = text_field(r, 0, "fips", source);
        c.name = std::string(trim(r.fields[1]));
        c.lat = number(r, 2, "lat", source);
        c.lon = number(r, 3, "lon", source);
        c.population = number(r, 4, "population", source);
        c.land_area_km2 = number(r, 5, "land_area_km2", source);
        if (!(std::abs(c.lat) <= 90)) throw ParseError(source, r.line, "lat", "latitude outside [-90, 90]");
        if (!(std::abs(c.lon) <= 180)) throw ParseError(source, r.line, "lon", "longitude outside [-180, 180]");
        if (!(c.population >= 0 && std::isfinite(c.population)))
            throw ParseError(source, r.line, "population", "population must be non-negative");
        if (!(c.land_area_km2 > 0 && std::isfinite(c.land_area_km2)))
            throw ParseError(source, r.line, "land_area_km2", "land area must be positive");
        if (auto [it, fresh] = seen.emplace(c.fips, r.line); !fresh)
            throw ParseError(source, r.line, "fips",
                             "duplicate FIPS code " + c.fips + " (first seen on line " + std::to_string(it->second) + ")");
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<geo::County> load_counties(const std::string& path) { return parse_counties(read_file(path), path); }

std::vector<geo::IxpSite> parse_ixps(std::string_view text, const std::string& source) {
    std::vector<geo::IxpSite> out;
    std::map<int, std::size_t> seen;
    for (const auto& r : table_rows(text, source, ixp_header)) {
        geo::IxpSite x;
        const double rank = number(r, 0, "rank", source);
        if (!(rank >= 1 && rank == std::floor(rank) && rank < 1e6))
            throw ParseError(source, r.line, "rank", "rank must be a positive integer");
        x.rank = static_cast<int>(rank);
        x.name = text_field(r, 1, "name", source);
        x.metro = std::string(trim(r.fields[2]));
        x.lat = number(r, 3, "lat", source);
        x.lon = number(r, 4, "lon", source);
        if (!(std::abs(x.lat) <= 90)) throw ParseError(source, r.line, "lat", "latitude outside [-90, 90]");
        if (!(std::abs(x.lon) <= 180)) throw ParseError(source, r.line, "lon", "longitude outside [-180, 180]");
        if (auto [it, fresh] = seen.emplace(x.rank, r.line); !fresh)
            throw ParseError(source, r.line, "rank",
                             "duplicate rank " + std::to_string(x.rank) + " (first seen on line " +
                                 std::to_string(it->second) + ")");
        out.push_back(std::move(x));
    }
    return out;
}

std::vector<geo::IxpSite> load_ixps(const std::string& path) { return parse_ixps(read_file(path), path); }

}  // namespace peering::io
