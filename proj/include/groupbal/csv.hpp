#pragma once

#include <string>
#include <vector>

#include "groupbal/dataset.hpp"

namespace groupbal {

struct CsvSchema {
    std::string class_column = "y";
    std::string attribute_column = "a";
};

// Dataset loaded from CSV plus the categorical-token -> dense-id maps
// (first-appearance order).
struct LoadedCsv {
    GroupedDataset dataset;
    std::vector<std::string> feature_columns;
    std::vector<std::string> class_tokens;      // index = class id
    std::vector<std::string> attribute_tokens;  // index = attribute id
};

// Reads a header CSV: feature columns are every column not named in the
// schema and must be numeric; class/attribute cells are categorical tokens.
LoadedCsv load_csv(const std::string& path, const CsvSchema& schema = {});

// Writes feature columns (f0..f{p-1} unless names are given), then the class
// and attribute columns. Features are printed with %.17g so a reload
// reproduces them exactly.
void save_csv(const std::string& path, const GroupedDataset& ds, const CsvSchema& schema = {},
              const std::vector<std::string>& feature_names = {});

}  // namespace groupbal
