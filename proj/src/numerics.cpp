#include "crl/numerics.hpp"

#include <cmath>
#include <limits>

#include "crl/error.hpp"

namespace crl::num {

namespace {
constexpr double kInvPhi = 0.6180339887498949;

void keep_better(Argmax& best, double x, double v) {
    if (v > best.value || (v == best.value && x < best.x)) best = {x, v};
}
}  // namespace

Argmax golden_max(const std::function<double(double)>& f, double lo, double hi, double tol) {
    if (hi < lo) fail(ErrorKind::Domain, "golden_max: empty interval");
    Argmax best{lo, f(lo)};
    keep_better(best, hi, f(hi));
    double a = lo, b = hi;
    double c = b - kInvPhi * (b - a);
    double d = a + kInvPhi * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < 300 && b - a > tol; ++it) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kInvPhi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kInvPhi * (b - a);
            fd = f(d);
        }
    }
    keep_better(best, c, fc);
    keep_better(best, d, fd);
    double m = 0.5 * (a + b);
    keep_better(best, m, f(m));
    return best;
}

Argmax grid_golden_max(const std::function<double(double)>& f, double lo, double hi, double step,
                       double tol) {
    if (hi <= lo) return {lo, f(lo)};
    long n = static_cast<long>(std::ceil((hi - lo) / step - 1e-9));
    if (n < 2) n = 2;
    double h = (hi - lo) / static_cast<double>(n);
    long ibest = 0;
    double vbest = -std::numeric_limits<double>::infinity();
    for (long i = 0; i <= n; ++i) {
        double x = (i == n) ? hi : lo + h * static_cast<double>(i);
        double v = f(x);
        if (v > vbest) {
            vbest = v;
            ibest = i;
        }
    }
    double xb = (ibest == n) ? hi : lo + h * static_cast<double>(ibest);
    Argmax best{xb, vbest};
    double a = (ibest == 0) ? lo : lo + h * static_cast<double>(ibest - 1);
    double b = (ibest >= n - 1) ? hi : lo + h * static_cast<double>(ibest + 1);
    Argmax g = golden_max(f, a, b, tol);
    keep_better(best, g.x, g.value);
    return best;
}

Argmax concave_max(const std::function<double(double)>& f, double lo, double hi, double step,
                   double tie_tol) {
    Argmax best = grid_golden_max(f, lo, hi, step);
    double floor_v = best.value - tie_tol * std::max(1.0, std::fabs(best.value));
    if (f(lo) >= floor_v) return {lo, f(lo)};
    double a = lo, b = best.x;
    for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
        double m = 0.5 * (a + b);
        if (f(m) >= floor_v)
            b = m;
        else
            a = m;
    }
    double vb = f(b);
    if (vb >= floor_v && b < best.x) return {b, vb};
    return best;
}

double bisect(const std::function<double(double)>& f, double lo, double hi, double tol,
              int max_iter) {
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0) == (fhi > 0)) fail(ErrorKind::Numeric, "bisect: no sign change on interval");
    for (int it = 0; it < max_iter && hi - lo > tol; ++it) {
        double m = 0.5 * (lo + hi);
        double fm = f(m);
        if (fm == 0.0) return m;
        if ((fm > 0) == (flo > 0)) {
            lo = m;
            flo = fm;
        } else {
            hi = m;
        }
    }
    return 0.5 * (lo + hi);
}

double last_nonnegative(const std::function<double(double)>& f, double lo, double hi, double tol) {
    for (int it = 0; it < 400 && hi - lo > tol; ++it) {
        double m = 0.5 * (lo + hi);
        if (f(m) >= 0.0)
            lo = m;
        else
            hi = m;
    }
    return lo;
}

}  // namespace crl::num
