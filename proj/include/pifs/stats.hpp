#pragma once

#include <utility>
#include <vector>

namespace pifs::stats {

double mean(const std::vector<double>& xs);
// Sample standard deviation (n-1 denominator).
double stddev(const std::vector<double>& xs);
// Population standard deviation (n denominator).
double stddev_population(const std::vector<double>& xs);

// std/mean with the sample (n-1) convention; {1,2,3} -> 0.5.
// Throws on zero mean or empty input.
double cv(const std::vector<double>& xs);
double cv_population(const std::vector<double>& xs);

// Average ranks (ties share the mean rank), 1-based.
std::vector<double> ranks(const std::vector<double>& xs);

double pearson(const std::vector<double>& a, const std::vector<double>& b);

// Spearman rank correlation. Throws if either vector is constant or the
// lengths differ or n < 3.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

struct SpearmanResult {
    double rho;
    double p_value;      // two-sided
    bool exact;          // true: permutation enumeration (n < 10); false: t approximation
};

// rho with a two-sided p-value: exact permutation enumeration for n < 10,
// Student-t approximation t = rho*sqrt((n-2)/(1-rho^2)) otherwise.
SpearmanResult spearman_test(const std::vector<double>& a, const std::vector<double>& b);

struct OlsFit {
    double slope;
    double intercept;
    double r2;
    double ci95_slope_lo;
    double ci95_slope_hi;
};

// OLS of log(y) on log(x); all inputs must be positive, n >= 3.
OlsFit ols_loglog(const std::vector<double>& x, const std::vector<double>& y);
// Plain OLS on the given coordinates.
OlsFit ols(const std::vector<double>& x, const std::vector<double>& y);

// Regularized incomplete beta I_x(a,b) and the Student-t distribution built
// on it; exposed because the tests pin them against reference values.
double incomplete_beta(double a, double b, double x);
double student_t_cdf(double t, double dof);
double student_t_quantile(double p, double dof);

}  // namespace pifs::stats
