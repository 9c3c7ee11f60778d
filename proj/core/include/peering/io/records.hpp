#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "peering/geo.hpp"

namespace peering::io {

inline constexpr std::string_view county_header = "fips,name,lat,lon,population,land_area_km2";
inline constexpr std::string_view ixp_header = "rank,name,metro,lat,lon";

/// County table with the header above. Every record is validated; errors name the
/// line and column. Duplicate FIPS codes are rejected.
std::vector<geo::County> load_counties(const std::string& path);
std::vector<geo::County> parse_counties(std::string_view text, const std::string& source);

/// IXP table with the header above. Ranks must be unique positive integers.
std::vector<geo::IxpSite> load_ixps(const std::string& path);
std::vector<geo::IxpSite> parse_ixps(std::string_view text, const std::string& source);

/// Strict number parsing: the whole (trimmed) field must be a finite number.
bool parse_double(std::string_view text, double& out);

}  // namespace peering::io
