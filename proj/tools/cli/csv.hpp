#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace fewmeta::cli {

/// Splits one line on commas. Fields are not quoted by any writer in this tool.
std::vector<std::string> split_csv_line(std::string_view line);

/// Parses CSV text into rows of fields (header included).
std::vector<std::vector<std::string>> read_csv(std::string_view text);

/// "%.12g"; "NA" for NaN; "inf"/"-inf" for infinities.
std::string format_number(double v);
/// Fixed six decimals; "NA" for NaN.
std::string format_rate(double v);

/// Inverse of format_number / format_rate.
double parse_number(const std::string& field);

}  // namespace fewmeta::cli
