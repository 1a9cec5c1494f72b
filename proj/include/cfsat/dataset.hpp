#pragma once

#include "cfsat/schema.hpp"

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cfsat {

// Rows are schema-valid raw instances in file order; rows with a missing
// cell (empty, "?", "NA") are dropped and counted.
struct Dataset {
    FeatureSchema schema;
    std::vector<RawInstance> rows;
    std::vector<int> labels;
    std::size_t dropped = 0;

    std::size_t size() const { return rows.size(); }
    // Observed [min, max] per feature.
    std::vector<std::pair<Rational, Rational>> observed_ranges() const;
};

// CSV with a header naming every schema feature and the label column, in any
// order. Throws ParseError naming row and column for unreadable cells,
// ValidationError on header mismatch or an empty result.
Dataset parse_dataset(std::string_view csv, const FeatureSchema& schema);
Dataset load_dataset(const std::string& csv_path, const FeatureSchema& schema);
Dataset load_dataset(const std::string& csv_path, const std::string& schema_path);

std::string format_dataset(const Dataset& data);

} // namespace cfsat
