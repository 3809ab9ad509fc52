#include "groupbal/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace groupbal {

static std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

static double parse_number(const std::string& cell, std::size_t line_no, const std::string& col) {
    double value = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    while (begin != end && (*begin == ' ' || *begin == '\t')) ++begin;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end)
        throw DataError("load_csv: non-numeric value '" + cell + "' in column '" + col +
                        "' at line " + std::to_string(line_no));
    return value;
}

LoadedCsv load_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw DataError("load_csv: cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw DataError("load_csv: empty file " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> header = split_line(line);

    int class_col = -1, attr_col = -1;
    std::vector<std::size_t> feature_cols;
    LoadedCsv out;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == schema.class_column) {
            class_col = static_cast<int>(i);
        } else if (header[i] == schema.attribute_column) {
            attr_col = static_cast<int>(i);
        } else {
            feature_cols.push_back(i);
            out.feature_columns.push_back(header[i]);
        }
    }
    if (class_col < 0)
        throw DataError("load_csv: missing class column '" + schema.class_column + "'");
    if (attr_col < 0)
        throw DataError("load_csv: missing attribute column '" + schema.attribute_column + "'");
    if (feature_cols.empty()) throw DataError("load_csv: no feature columns");

    std::map<std::string, int> class_ids, attr_ids;
    auto intern = [](std::map<std::string, int>& ids, std::vector<std::string>& tokens,
                     const std::string& tok) {
        auto it = ids.find(tok);
        if (it != ids.end()) return it->second;
        const int id = static_cast<int>(tokens.size());
        ids.emplace(tok, id);
        tokens.push_back(tok);
        return id;
    };

    std::vector<double> features;
    std::vector<int> classes, attributes;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> cells = split_line(line);
        if (cells.size() != header.size())
            throw DataError("load_csv: wrong cell count at line " + std::to_string(line_no));
        for (std::size_t c : feature_cols)
            features.push_back(parse_number(cells[c], line_no, header[c]));
        classes.push_back(intern(class_ids, out.class_tokens, cells[static_cast<std::size_t>(class_col)]));
        attributes.push_back(intern(attr_ids, out.attribute_tokens, cells[static_cast<std::size_t>(attr_col)]));
    }
    if (classes.empty()) throw DataError("load_csv: no data rows in " + path);

    out.dataset = build_grouped_dataset(std::move(features), feature_cols.size(),
                                        std::move(classes), std::move(attributes));
    return out;
}

void save_csv(const std::string& path, const GroupedDataset& ds, const CsvSchema& schema,
              const std::vector<std::string>& feature_names) {
    std::ofstream out(path);
    if (!out) throw DataError("save_csv: cannot open " + path + " for writing");
    for (std::size_t j = 0; j < ds.dim(); ++j) {
        if (j < feature_names.size())
            out << feature_names[j];
        else
            out << 'f' << j;
        out << ',';
    }
    out << schema.class_column << ',' << schema.attribute_column << '\n';

    char buf[64];
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto row = ds.row(i);
        for (double v : row) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            out << buf << ',';
        }
        out << ds.class_of(i) << ',' << ds.attribute_of(i) << '\n';
    }
    if (!out) throw DataError("save_csv: write failed for " + path);
}

}  // namespace groupbal
