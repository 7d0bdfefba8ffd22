#include "cli/dataset.hpp"

#include <charconv>
#include <fstream>
#include <unordered_map>

#include "cli/csv.hpp"
#include "fewmeta/errors.hpp"

namespace fewmeta::cli {

namespace {

std::int64_t parse_count(const std::string& field, const char* name, std::size_t line) {
  std::int64_t v = 0;
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || field.empty()) {
    throw ParseError(std::string("field ") + name + " is not an integer: '" + field + "'", line);
  }
  return v;
}

}  // namespace

std::vector<MetaDataset> parse_dataset(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::vector<MetaDataset> out;
  std::unordered_map<std::string, std::size_t> index;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    if (!have_header) {
      if (line != kDatasetHeader) {
        throw ParseError(std::string("expected header '") + kDatasetHeader + "'", line_no);
      }
      have_header = true;
      continue;
    }
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 6) {
      throw ParseError("expected 6 fields, found " + std::to_string(fields.size()), line_no);
    }
    if (fields[0].empty()) throw ParseError("empty meta_id", line_no);
    TwoByTwoTable t{parse_count(fields[2], "events_trt", line_no),
                    parse_count(fields[3], "n_trt", line_no),
                    parse_count(fields[4], "events_ctl", line_no),
                    parse_count(fields[5], "n_ctl", line_no)};
    try {
      validate_table(t);
    } catch (const DomainError& e) {
      throw ParseError(e.what(), line_no);
    }
    auto [it, inserted] = index.try_emplace(fields[0], out.size());
    if (inserted) out.push_back(MetaDataset{fields[0], {}});
    out[it->second].studies.push_back(t);
  }
  if (!have_header) throw ParseError("missing header row", line_no ? line_no : 1);
  return out;
}

std::vector<MetaDataset> parse_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  return parse_dataset(in);
}

}  // namespace fewmeta::cli
