#pragma once

#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "fewmeta/tables.hpp"

namespace fewmeta::cli {

inline constexpr const char* kDatasetHeader =
    "meta_id,study_id,events_trt,n_trt,events_ctl,n_ctl";

/// One MetaDataset per distinct meta_id, in order of first appearance; rows
/// keep file order within a group. Throws ParseError naming the line.
std::vector<MetaDataset> parse_dataset(std::istream& in);
std::vector<MetaDataset> parse_dataset(const std::filesystem::path& path);

}  // namespace fewmeta::cli
