#include "groupbal/stats.hpp"

#include <cmath>
#include <limits>

#include "groupbal/dataset.hpp"

namespace groupbal {

namespace {

// P(a, x) by series expansion, valid and fast for x < a + 1.
double gamma_p_series(double a, double x) {
    const double lg = std::lgamma(a);
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < 1000; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-16)
            return sum * std::exp(-x + a * std::log(x) - lg);
    }
    return sum * std::exp(-x + a * std::log(x) - lg);
}

// Q(a, x) by modified Lentz continued fraction, for x >= a + 1.
double gamma_q_cf(double a, double x) {
    const double lg = std::lgamma(a);
    const double tiny = std::numeric_limits<double>::min() / 1e-30;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 1000; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - lg) * h;
}

}  // namespace

double gamma_q(double a, double x) {
    if (a <= 0) throw DataError("gamma_q: a must be positive");
    if (x < 0) throw DataError("gamma_q: x must be non-negative");
    if (x == 0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_cf(a, x);
}

double chi_square_sf(double x, int df) {
    if (df < 1) throw DataError("chi_square_sf: df must be >= 1");
    if (x < 0) throw DataError("chi_square_sf: x must be non-negative");
    return gamma_q(0.5 * static_cast<double>(df), 0.5 * x);
}

AgResult alexander_govern(const std::vector<std::vector<double>>& groups) {
    const std::size_t J = groups.size();
    if (J < 2) throw DataError("alexander_govern: need at least two groups");

    std::vector<double> mean(J), se(J);
    for (std::size_t j = 0; j < J; ++j) {
        const auto& g = groups[j];
        const double n = static_cast<double>(g.size());
        if (g.size() < 2)
            throw DataError("alexander_govern: group " + std::to_string(j) +
                            " needs at least two observations");
        double m = 0.0;
        for (double v : g) m += v;
        m /= n;
        double ss = 0.0;
        for (double v : g) ss += (v - m) * (v - m);
        const double var = ss / (n - 1.0);
        if (var <= 0.0)
            throw DataError("alexander_govern: group " + std::to_string(j) + " has zero variance");
        mean[j] = m;
        se[j] = std::sqrt(var / n);  // standard error of the group mean
    }

    // Variance-weighted grand mean.
    double inv_sum = 0.0;
    for (std::size_t j = 0; j < J; ++j) inv_sum += 1.0 / (se[j] * se[j]);
    double grand = 0.0;
    for (std::size_t j = 0; j < J; ++j) grand += (1.0 / (se[j] * se[j]) / inv_sum) * mean[j];

    AgResult out;
    out.df = static_cast<int>(J) - 1;
    out.per_group_z.resize(J);
    for (std::size_t j = 0; j < J; ++j) {
        const double t = (mean[j] - grand) / se[j];
        const double nu = static_cast<double>(groups[j].size()) - 1.0;
        // Hill's normalizing transform of the t statistic.
        const double a = nu - 0.5;
        const double b = 48.0 * a * a;
        double c = std::sqrt(a * std::log1p(t * t / nu));
        if (t < 0) c = -c;
        const double c2 = c * c;
        const double z = c + (c * c2 + 3.0 * c) / b -
                         (4.0 * c2 * c2 * c2 * c + 33.0 * c2 * c2 * c + 240.0 * c2 * c + 855.0 * c) /
                             (10.0 * b * b + 8.0 * b * c2 * c2 + 1000.0 * b);
        out.per_group_z[j] = z;
        out.statistic += z * z;
    }
    out.p_value = chi_square_sf(out.statistic, out.df);
    return out;
}

SignificanceDecision significance_flags(const std::map<std::string, std::vector<double>>& per_method_values,
                                        double alpha) {
    std::vector<std::vector<double>> groups;
    groups.reserve(per_method_values.size());
    for (const auto& [name, values] : per_method_values) groups.push_back(values);
    SignificanceDecision out;
    out.alpha = alpha;
    out.result = alexander_govern(groups);
    out.reject = out.result.p_value < alpha;
    return out;
}

}  // namespace groupbal
