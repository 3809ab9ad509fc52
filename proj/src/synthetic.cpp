#include "groupbal/synthetic.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "groupbal/rng.hpp"

namespace groupbal {

namespace {
constexpr std::uint64_t kSplitTag = 0x73796e7468ULL;  // stream tag for splits
}

void SyntheticConfig::validate() const {
    auto in_unit = [](double r) { return r >= -1.0 && r <= 1.0; };
    if (!in_unit(rho_core) || !in_unit(rho_spu))
        throw DataError("SyntheticConfig: correlations must lie in [-1, 1]");
    if (gamma_spu <= 0 || gamma_core <= 0 || gamma_noise <= 0)
        throw DataError("SyntheticConfig: scale factors must be positive");
    if (sigma <= 0) throw DataError("SyntheticConfig: sigma must be positive");
    if (d == 0) throw DataError("SyntheticConfig: noise dimension must be positive");
    if (n_train == 0 || n_val == 0 || n_test == 0)
        throw DataError("SyntheticConfig: split sizes must be positive");
}

SyntheticConfig load_synthetic_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("load_synthetic_config: cannot open " + path);
    SyntheticConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw DataError("load_synthetic_config: expected key=value at line " +
                            std::to_string(line_no));
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "rho_core") cfg.rho_core = std::stod(value);
            else if (key == "rho_spu") cfg.rho_spu = std::stod(value);
            else if (key == "gamma_spu") cfg.gamma_spu = std::stod(value);
            else if (key == "gamma_core") cfg.gamma_core = std::stod(value);
            else if (key == "gamma_noise") cfg.gamma_noise = std::stod(value);
            else if (key == "sigma") cfg.sigma = std::stod(value);
            else if (key == "d") cfg.d = std::stoul(value);
            else if (key == "n_train") cfg.n_train = std::stoul(value);
            else if (key == "n_val") cfg.n_val = std::stoul(value);
            else if (key == "n_test") cfg.n_test = std::stoul(value);
            else if (key == "seed") cfg.seed = std::stoull(value);
            else throw DataError("load_synthetic_config: unknown key '" + key + "'");
        } catch (const std::invalid_argument&) {
            throw DataError("load_synthetic_config: bad value for '" + key + "' at line " +
                            std::to_string(line_no));
        }
    }
    cfg.validate();
    return cfg;
}

namespace {

// Fills one feature row; y_sign and s_spu are already decided, s_core is
// drawn here. Draw order is fixed: x_spu, x_core, then the d noise values.
void fill_row(const SyntheticConfig& cfg, Rng& rng, int y_sign, int s_spu, double* row) {
    const int s_core = rng.bernoulli((1.0 + cfg.rho_core) / 2.0) ? 1 : -1;
    const double a_spu = static_cast<double>(y_sign * s_spu);
    const double a_core = static_cast<double>(y_sign * s_core);
    row[0] = cfg.gamma_spu * rng.normal(a_spu, cfg.sigma);
    row[1] = cfg.gamma_core * rng.normal(a_core, cfg.sigma);
    for (std::size_t j = 0; j < cfg.d; ++j)
        row[2 + j] = cfg.gamma_noise * rng.normal(0.0, cfg.sigma);
}

GroupedDataset assemble(const SyntheticConfig& cfg, std::vector<double> features,
                        std::vector<int> classes, std::vector<int> attributes) {
    return build_grouped_dataset(std::move(features), cfg.d + 2, std::move(classes),
                                 std::move(attributes), 2, 2);
}

}  // namespace

GroupedDataset synth_generate(const SyntheticConfig& cfg, std::uint64_t split_seed_offset,
                              std::size_t n) {
    cfg.validate();
    Rng rng(mix_seed(cfg.seed, kSplitTag, split_seed_offset));
    const std::size_t dim = cfg.d + 2;
    std::vector<double> features(n * dim);
    std::vector<int> classes(n), attributes(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int y_sign = rng.bernoulli(0.5) ? 1 : -1;
        const int s_spu = rng.bernoulli((1.0 + cfg.rho_spu) / 2.0) ? 1 : -1;
        fill_row(cfg, rng, y_sign, s_spu, features.data() + i * dim);
        classes[i] = y_sign > 0 ? 1 : 0;
        attributes[i] = s_spu > 0 ? 0 : 1;  // 1 = spurious-mismatched (minority)
    }
    return assemble(cfg, std::move(features), std::move(classes), std::move(attributes));
}

GroupedDataset synth_generate_balanced(const SyntheticConfig& cfg, std::uint64_t split_seed_offset,
                                       std::size_t n) {
    cfg.validate();
    if (n % 4 != 0) throw DataError("synth_generate_balanced: n must be divisible by 4");
    Rng rng(mix_seed(cfg.seed, kSplitTag, split_seed_offset));
    const std::size_t dim = cfg.d + 2;
    std::vector<double> features(n * dim);
    std::vector<int> classes(n), attributes(n);
    const std::size_t per_cell = n / 4;
    std::size_t i = 0;
    for (int y_sign : {-1, 1}) {
        for (int s_spu : {1, -1}) {
            for (std::size_t k = 0; k < per_cell; ++k, ++i) {
                fill_row(cfg, rng, y_sign, s_spu, features.data() + i * dim);
                classes[i] = y_sign > 0 ? 1 : 0;
                attributes[i] = s_spu > 0 ? 0 : 1;
            }
        }
    }
    return assemble(cfg, std::move(features), std::move(classes), std::move(attributes));
}

double core_only_error(double sigma) {
    if (sigma <= 0) throw DataError("core_only_error: sigma must be positive");
    return 0.5 * std::erfc((1.0 / sigma) / std::sqrt(2.0));
}

}  // namespace groupbal
