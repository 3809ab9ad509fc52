#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace groupbal {

// Raised for malformed inputs (files, schemas, contract violations on data).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Immutable dataset of (features, class id, attribute id) triplets with a
// precomputed (class, attribute) -> sorted member-index map. Classes and
// attributes are dense ids starting at 0. Safe to share across threads.
class GroupedDataset {
public:
    GroupedDataset() = default;

    std::size_t size() const { return classes_.size(); }
    std::size_t dim() const { return dim_; }
    int num_classes() const { return num_classes_; }
    int num_attributes() const { return num_attributes_; }
    int num_groups() const { return num_classes_ * num_attributes_; }

    std::span<const double> row(std::size_t i) const {
        return {features_.data() + i * dim_, dim_};
    }
    const std::vector<double>& features() const { return features_; }
    int class_of(std::size_t i) const { return classes_[i]; }
    int attribute_of(std::size_t i) const { return attributes_[i]; }
    const std::vector<int>& classes() const { return classes_; }
    const std::vector<int>& attributes() const { return attributes_; }

    int group_id(int y, int a) const { return y * num_attributes_ + a; }
    int group_of(std::size_t i) const { return group_id(classes_[i], attributes_[i]); }
    std::pair<int, int> group_key(int gid) const {
        return {gid / num_attributes_, gid % num_attributes_};
    }

    // Sorted row indices of group (y, a).
    const std::vector<std::size_t>& group_members(int gid) const { return group_index_[gid]; }
    std::size_t group_size(int gid) const { return group_index_[gid].size(); }

    std::vector<std::size_t> class_members(int y) const;
    std::size_t class_size(int y) const;

    friend GroupedDataset build_grouped_dataset(std::vector<double> features, std::size_t dim,
                                                std::vector<int> classes, std::vector<int> attributes,
                                                int num_classes, int num_attributes);

private:
    std::vector<double> features_;  // row-major, size n * dim
    std::size_t dim_ = 0;
    std::vector<int> classes_;
    std::vector<int> attributes_;
    int num_classes_ = 0;
    int num_attributes_ = 0;
    std::vector<std::vector<std::size_t>> group_index_;
};

// Builds a GroupedDataset and validates its invariants. Pass num_classes /
// num_attributes = 0 to infer them from the data, in which case every id in
// [0, max] must occur (dense ids). Passing explicit cardinalities allows
// declared-but-empty groups (e.g. a minority stratum that drew no samples).
GroupedDataset build_grouped_dataset(std::vector<double> features, std::size_t dim,
                                     std::vector<int> classes, std::vector<int> attributes,
                                     int num_classes = 0, int num_attributes = 0);

// Group counts plus conditional P(Y=y | A=a) and marginal P(Y=y) estimates.
struct GroupStats {
    int num_classes = 0;
    int num_attributes = 0;
    std::vector<std::size_t> counts;   // indexed y * num_attributes + a
    std::vector<double> p_y_given_a;   // same indexing
    std::vector<double> p_y;           // indexed y

    std::size_t count(int y, int a) const { return counts[y * num_attributes + a]; }
    double conditional(int y, int a) const { return p_y_given_a[y * num_attributes + a]; }
    double marginal(int y) const { return p_y[y]; }
};

// Computes GroupStats from a dataset. Every attribute value must have at
// least one example; throws DataError otherwise.
GroupStats group_stats(const GroupedDataset& ds);

// Computes GroupStats directly from a (y, a) -> count table, e.g. published
// benchmark tallies. Same validation as the dataset overload.
GroupStats group_stats_from_counts(const std::vector<std::size_t>& counts, int num_classes,
                                   int num_attributes);

}  // namespace groupbal
