#include "groupbal/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace groupbal {

std::string to_string(SamplerKind kind) {
    switch (kind) {
        case SamplerKind::Uniform: return "uniform";
        case SamplerKind::SUBY: return "suby";
        case SamplerKind::SUBG: return "subg";
        case SamplerKind::RWY: return "rwy";
        case SamplerKind::RWG: return "rwg";
    }
    return "?";
}

SamplerKind sampler_kind_from_string(const std::string& name) {
    if (name == "uniform") return SamplerKind::Uniform;
    if (name == "suby") return SamplerKind::SUBY;
    if (name == "subg") return SamplerKind::SUBG;
    if (name == "rwy") return SamplerKind::RWY;
    if (name == "rwg") return SamplerKind::RWG;
    throw DataError("unknown sampler kind '" + name + "'");
}

bool is_reweighting(SamplerKind kind) {
    return kind == SamplerKind::RWY || kind == SamplerKind::RWG;
}

bool uses_attributes(SamplerKind kind) {
    return kind == SamplerKind::SUBG || kind == SamplerKind::RWG;
}

SamplerSpec uniform_sampler(const GroupedDataset& ds) {
    SamplerSpec spec;
    spec.kind = SamplerKind::Uniform;
    spec.dataset_size = ds.size();
    return spec;
}

namespace {

// Retains, for every stratum (list of member indices), a seeded uniform
// subset of size min-stratum-size. Performed once; training never resamples.
SamplerSpec subsample_strata(const GroupedDataset& ds, std::vector<std::vector<std::size_t>> strata,
                             SamplerKind kind, std::uint64_t seed, const char* what) {
    std::size_t min_size = SIZE_MAX;
    for (const auto& s : strata) min_size = std::min(min_size, s.size());
    if (min_size == 0) throw DataError(std::string("subsample: empty ") + what);

    SamplerSpec spec;
    spec.kind = kind;
    spec.dataset_size = ds.size();
    spec.seed = seed;
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(kind)));
    for (auto& s : strata) {
        auto kept = rng.sample_without_replacement(std::move(s), min_size);
        spec.retained_indices.insert(spec.retained_indices.end(), kept.begin(), kept.end());
    }
    std::sort(spec.retained_indices.begin(), spec.retained_indices.end());
    return spec;
}

SamplerSpec reweight_strata(const GroupedDataset& ds, const std::vector<int>& stratum_of,
                            std::size_t num_strata, SamplerKind kind, const char* what) {
    std::vector<std::size_t> counts(num_strata, 0);
    for (int s : stratum_of) ++counts[static_cast<std::size_t>(s)];
    for (std::size_t s = 0; s < num_strata; ++s)
        if (counts[s] == 0) throw DataError(std::string("reweight: empty ") + what);

    SamplerSpec spec;
    spec.kind = kind;
    spec.dataset_size = ds.size();
    spec.weights.resize(ds.size());
    const double norm = 1.0 / static_cast<double>(num_strata);
    for (std::size_t i = 0; i < ds.size(); ++i)
        spec.weights[i] = norm / static_cast<double>(counts[static_cast<std::size_t>(stratum_of[i])]);
    return spec;
}

}  // namespace

SamplerSpec subsample_classes(const GroupedDataset& ds, std::uint64_t seed) {
    if (ds.num_classes() < 2) throw DataError("subsample_classes: need at least two classes");
    std::vector<std::vector<std::size_t>> strata;
    for (int y = 0; y < ds.num_classes(); ++y) strata.push_back(ds.class_members(y));
    return subsample_strata(ds, std::move(strata), SamplerKind::SUBY, seed, "class");
}

SamplerSpec subsample_groups(const GroupedDataset& ds, std::uint64_t seed) {
    std::vector<std::vector<std::size_t>> strata;
    for (int g = 0; g < ds.num_groups(); ++g) strata.push_back(ds.group_members(g));
    return subsample_strata(ds, std::move(strata), SamplerKind::SUBG, seed, "group");
}

SamplerSpec reweight_classes(const GroupedDataset& ds) {
    if (ds.num_classes() < 2) throw DataError("reweight_classes: need at least two classes");
    return reweight_strata(ds, ds.classes(), static_cast<std::size_t>(ds.num_classes()),
                           SamplerKind::RWY, "class");
}

SamplerSpec reweight_groups(const GroupedDataset& ds) {
    std::vector<int> gid(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) gid[i] = ds.group_of(i);
    return reweight_strata(ds, gid, static_cast<std::size_t>(ds.num_groups()), SamplerKind::RWG,
                           "group");
}

SamplerSpec make_sampler(SamplerKind kind, const GroupedDataset& ds, std::uint64_t seed) {
    switch (kind) {
        case SamplerKind::Uniform: return uniform_sampler(ds);
        case SamplerKind::SUBY: return subsample_classes(ds, seed);
        case SamplerKind::SUBG: return subsample_groups(ds, seed);
        case SamplerKind::RWY: return reweight_classes(ds);
        case SamplerKind::RWG: return reweight_groups(ds);
    }
    throw DataError("make_sampler: bad kind");
}

BatchStream::BatchStream(const SamplerSpec& spec, std::uint64_t stream_seed)
    : spec_(spec), rng_(stream_seed) {
    if (is_reweighting(spec_.kind)) {
        cumulative_.resize(spec_.weights.size());
        double acc = 0.0;
        for (std::size_t i = 0; i < spec_.weights.size(); ++i) {
            acc += spec_.weights[i];
            cumulative_[i] = acc;
        }
        cumulative_.back() = 1.0;  // guards the binary search against rounding
    } else {
        if (spec_.retained_indices.empty()) {
            permutation_.resize(spec_.dataset_size);
            std::iota(permutation_.begin(), permutation_.end(), std::size_t{0});
        } else {
            permutation_ = spec_.retained_indices;
        }
        rng_.shuffle(permutation_);
    }
}

std::vector<std::size_t> BatchStream::next_batch(std::size_t batch_size) {
    if (batch_size == 0) throw DataError("next_batch: batch_size must be positive");
    std::vector<std::size_t> batch;
    if (is_reweighting(spec_.kind)) {
        batch.reserve(batch_size);
        for (std::size_t k = 0; k < batch_size; ++k) {
            const double u = rng_.uniform();
            const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
            batch.push_back(static_cast<std::size_t>(it - cumulative_.begin()));
        }
        return batch;
    }
    if (cursor_ >= permutation_.size()) {
        rng_.shuffle(permutation_);
        cursor_ = 0;
    }
    const std::size_t take = std::min(batch_size, permutation_.size() - cursor_);
    batch.assign(permutation_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                 permutation_.begin() + static_cast<std::ptrdiff_t>(cursor_ + take));
    cursor_ += take;
    return batch;
}

double expected_unique(std::size_t n_maj, std::size_t k) {
    if (n_maj == 0) throw DataError("expected_unique: n_maj must be positive");
    const double n = static_cast<double>(n_maj);
    // n * (1 - (1 - 1/n)^k) via expm1/log1p to stay accurate for large k.
    const double log_keep = static_cast<double>(k) * std::log1p(-1.0 / n);
    return -n * std::expm1(log_keep);
}

}  // namespace groupbal
