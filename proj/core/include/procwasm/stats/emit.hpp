#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "procwasm/stats/stats.hpp"

namespace procwasm::stats {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Summary rows in the times CSV use these benchmark names.
inline constexpr std::string_view kGeomeanRow = "(geomean)";
inline constexpr std::string_view kMedianRow = "(median)";

/// Two sections separated by a blank line:
///   benchmark,system,mean_ms,stderr_ms,ratio
///   event,system,geomean_ratio
/// The baseline system is listed first for every benchmark. Values are
/// printed at full double precision. The counter section is omitted when
/// the report has no counter rows.
std::string emit_csv(const Report& r);

/// Times table (mean ± SE per system, ratio in parentheses, geomean and
/// median footer), then counter and overhead tables when present. Times are
/// printed to 6 significant digits, ratios to 2 decimals.
std::string emit_markdown(const Report& r);

/// Inverse of emit_csv. Overhead percentages are not part of the CSV.
Report parse_csv(std::string_view text);
/// Inverse of emit_markdown, at the printed precision.
Report parse_markdown(std::string_view text);

}  // namespace procwasm::stats
