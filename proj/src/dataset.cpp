#include "groupbal/dataset.hpp"

#include <algorithm>
#include <cmath>

namespace groupbal {

std::vector<std::size_t> GroupedDataset::class_members(int y) const {
    std::vector<std::size_t> out;
    for (int a = 0; a < num_attributes_; ++a) {
        const auto& g = group_index_[group_id(y, a)];
        out.insert(out.end(), g.begin(), g.end());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::size_t GroupedDataset::class_size(int y) const {
    std::size_t n = 0;
    for (int a = 0; a < num_attributes_; ++a) n += group_index_[group_id(y, a)].size();
    return n;
}

GroupedDataset build_grouped_dataset(std::vector<double> features, std::size_t dim,
                                     std::vector<int> classes, std::vector<int> attributes,
                                     int num_classes, int num_attributes) {
    const std::size_t n = classes.size();
    if (attributes.size() != n)
        throw DataError("build_grouped_dataset: classes/attributes length mismatch");
    if (dim == 0 || features.size() != n * dim)
        throw DataError("build_grouped_dataset: feature matrix shape does not match label count");
    for (double v : features)
        if (!std::isfinite(v)) throw DataError("build_grouped_dataset: non-finite feature value");

    auto check_ids = [](const std::vector<int>& ids, int declared, const char* what) {
        int max_id = -1;
        for (int v : ids) {
            if (v < 0) throw DataError(std::string("build_grouped_dataset: negative ") + what + " id");
            max_id = std::max(max_id, v);
        }
        if (declared == 0) {
            const int count = max_id + 1;
            std::vector<char> seen(static_cast<std::size_t>(count), 0);
            for (int v : ids) seen[static_cast<std::size_t>(v)] = 1;
            for (int v = 0; v < count; ++v)
                if (!seen[static_cast<std::size_t>(v)])
                    throw DataError(std::string("build_grouped_dataset: ") + what +
                                    " ids are not dense from 0");
            return count;
        }
        if (max_id >= declared)
            throw DataError(std::string("build_grouped_dataset: ") + what +
                            " id exceeds declared cardinality");
        return declared;
    };
    if (n == 0) throw DataError("build_grouped_dataset: empty dataset");
    num_classes = check_ids(classes, num_classes, "class");
    num_attributes = check_ids(attributes, num_attributes, "attribute");

    GroupedDataset ds;
    ds.features_ = std::move(features);
    ds.dim_ = dim;
    ds.classes_ = std::move(classes);
    ds.attributes_ = std::move(attributes);
    ds.num_classes_ = num_classes;
    ds.num_attributes_ = num_attributes;
    ds.group_index_.assign(static_cast<std::size_t>(num_classes * num_attributes), {});
    for (std::size_t i = 0; i < n; ++i)
        ds.group_index_[static_cast<std::size_t>(ds.group_of(i))].push_back(i);
    return ds;
}

static GroupStats stats_from_count_table(std::vector<std::size_t> counts, int num_classes,
                                         int num_attributes) {
    GroupStats st;
    st.num_classes = num_classes;
    st.num_attributes = num_attributes;
    st.counts = std::move(counts);
    st.p_y_given_a.assign(st.counts.size(), 0.0);
    st.p_y.assign(static_cast<std::size_t>(num_classes), 0.0);

    std::size_t total = 0;
    for (std::size_t c : st.counts) total += c;
    if (total == 0) throw DataError("group_stats: empty dataset");

    for (int a = 0; a < num_attributes; ++a) {
        std::size_t stratum = 0;
        for (int y = 0; y < num_classes; ++y) stratum += st.counts[static_cast<std::size_t>(y * num_attributes + a)];
        if (stratum == 0)
            throw DataError("group_stats: attribute stratum " + std::to_string(a) + " is empty");
        for (int y = 0; y < num_classes; ++y) {
            const std::size_t idx = static_cast<std::size_t>(y * num_attributes + a);
            st.p_y_given_a[idx] =
                static_cast<double>(st.counts[idx]) / static_cast<double>(stratum);
        }
    }
    for (int y = 0; y < num_classes; ++y) {
        std::size_t ny = 0;
        for (int a = 0; a < num_attributes; ++a) ny += st.counts[static_cast<std::size_t>(y * num_attributes + a)];
        st.p_y[static_cast<std::size_t>(y)] = static_cast<double>(ny) / static_cast<double>(total);
    }
    return st;
}

GroupStats group_stats(const GroupedDataset& ds) {
    std::vector<std::size_t> counts(static_cast<std::size_t>(ds.num_groups()));
    for (int g = 0; g < ds.num_groups(); ++g) counts[static_cast<std::size_t>(g)] = ds.group_size(g);
    return stats_from_count_table(std::move(counts), ds.num_classes(), ds.num_attributes());
}

GroupStats group_stats_from_counts(const std::vector<std::size_t>& counts, int num_classes,
                                   int num_attributes) {
    if (counts.size() != static_cast<std::size_t>(num_classes * num_attributes))
        throw DataError("group_stats_from_counts: count table shape mismatch");
    return stats_from_count_table(counts, num_classes, num_attributes);
}

}  // namespace groupbal
