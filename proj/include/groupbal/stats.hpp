#pragma once

#include <map>
#include <string>
#include <vector>

namespace groupbal {

// Regularized upper incomplete gamma Q(a, x); series for x < a+1, Lentz
// continued fraction otherwise. Absolute accuracy around 1e-14.
double gamma_q(double a, double x);

// Upper-tail probability of the chi-square distribution with df degrees of
// freedom: Q(df/2, x/2).
double chi_square_sf(double x, int df);

struct AgResult {
    double statistic = 0.0;  // A = sum z_j^2
    double p_value = 1.0;    // chi-square upper tail at J-1 dof
    int df = 0;
    std::vector<double> per_group_z;
};

// Alexander-Govern test for equality of means under heterogeneous
// variances. Each group needs n >= 2 observations and non-zero variance.
AgResult alexander_govern(const std::vector<std::vector<double>>& groups);

struct SignificanceDecision {
    AgResult result;
    double alpha = 0.05;
    bool reject = false;  // true when the groups' means differ at level alpha
};

// Applies the test across per-method sample sets (e.g. per-seed test worst
// accuracies) and flags when p < alpha.
SignificanceDecision significance_flags(const std::map<std::string, std::vector<double>>& per_method_values,
                                        double alpha = 0.05);

}  // namespace groupbal
