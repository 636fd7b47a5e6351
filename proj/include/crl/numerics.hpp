#pragma once

#include <functional>

namespace crl::num {

struct Argmax {
    double x;
    double value;
};

// Golden-section search for a unimodal function on [lo, hi].
Argmax golden_max(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-13);

// Grid scan then golden refinement around the best cell. Ties go to the smaller x.
Argmax grid_golden_max(const std::function<double(double)>& f, double lo, double hi, double step,
                       double tol = 1e-13);

// Maximizer of a concave function, returning the leftmost point whose value is within
// tie_tol of the maximum.
Argmax concave_max(const std::function<double(double)>& f, double lo, double hi, double step,
                   double tie_tol = 1e-15);

// Bisection for a sign change of f on [lo, hi]; f(lo) and f(hi) must differ in sign.
double bisect(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-14,
              int max_iter = 200);

// Right end of the interval {f >= 0} starting at lo where f(lo) >= 0 and f(hi) < 0.
double last_nonnegative(const std::function<double(double)>& f, double lo, double hi,
                        double tol = 1e-14);

}  // namespace crl::num
