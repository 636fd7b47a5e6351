#include "crl/content.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "crl/error.hpp"

namespace crl {

namespace {

constexpr double kShapeTol = 1e-9;
constexpr double kDomainSlack = 1e-12;

double check_unit(double x, const char* what) {
    if (!(x >= -kDomainSlack && x <= 1.0 + kDomainSlack))
        fail(ErrorKind::Domain, std::string(what) + ": argument " + std::to_string(x) + " outside [0,1]");
    return std::clamp(x, 0.0, 1.0);
}

struct Eval {
    double x;
    double operator()(const ExponentialCoverage& e) const {
        double k = e.paths;
        double lr = std::log1p(-k * e.items_per_user / e.total_items);
        return (e.total_items / k) * -std::expm1(e.users * x * lr);
    }
    double operator()(const PiecewiseLinearCap& p) const {
        return x <= p.knee ? p.cap * x / p.knee : p.cap;
    }
    double operator()(const Tabulated& t) const {
        const auto& pts = t.points;
        auto it = std::upper_bound(pts.begin(), pts.end(), x,
                                   [](double v, const std::pair<double, double>& p) { return v < p.first; });
        if (it == pts.begin()) return pts.front().second;
        if (it == pts.end()) return pts.back().second;
        auto prev = std::prev(it);
        double w = (x - prev->first) / (it->first - prev->first);
        return prev->second + w * (it->second - prev->second);
    }
};

struct Deriv {
    double x;
    Slope operator()(const ExponentialCoverage& e) const {
        double k = e.paths;
        double lr = std::log1p(-k * e.items_per_user / e.total_items);
        double d = -(e.total_items / k) * e.users * lr * std::exp(e.users * x * lr);
        return {d, d};
    }
    Slope operator()(const PiecewiseLinearCap& p) const {
        double s = p.cap / p.knee;
        if (x < p.knee) return {s, s};
        if (x > p.knee) return {0.0, 0.0};
        if (p.knee >= 1.0) return {s, s};
        return {s, 0.0};
    }
    Slope operator()(const Tabulated& t) const {
        const auto& pts = t.points;
        auto slope = [&](std::size_t i) {
            return (pts[i + 1].second - pts[i].second) / (pts[i + 1].first - pts[i].first);
        };
        std::size_t nseg = pts.size() - 1;
        std::size_t i = 0;
        while (i + 1 < nseg && pts[i + 1].first <= x) ++i;
        double right = slope(i);
        double left = right;
        if (x == pts[i].first && i > 0) left = slope(i - 1);
        if (x >= pts.back().first) left = right = slope(nseg - 1);
        return {left, right};
    }
};

}  // namespace

ContentFunction::ContentFunction(ExponentialCoverage e) : form_(e) { validate(); }
ContentFunction::ContentFunction(PiecewiseLinearCap p) : form_(p) { validate(); }
ContentFunction::ContentFunction(Tabulated t) : form_(std::move(t)) { validate(); }

void ContentFunction::validate() const {
    if (auto* e = std::get_if<ExponentialCoverage>(&form_)) {
        if (!(e->total_items > 0 && e->users > 0 && e->items_per_user > 0))
            fail(ErrorKind::Config, "exponential content: N, n, phi must be positive");
        if (e->paths < 2) fail(ErrorKind::Config, "exponential content: K must be at least 2");
        if (!(e->paths * e->items_per_user < e->total_items))
            fail(ErrorKind::Config, "exponential content: requires K*phi < N");
    } else if (auto* p = std::get_if<PiecewiseLinearCap>(&form_)) {
        if (!(p->cap >= 0)) fail(ErrorKind::Config, "piecewise content: cap must be nonnegative");
        if (!(p->knee > 0 && p->knee <= 1)) fail(ErrorKind::Config, "piecewise content: knee must lie in (0,1]");
    } else {
        const auto& pts = std::get<Tabulated>(form_).points;
        if (pts.size() < 2) fail(ErrorKind::Config, "tabulated content: need at least two breakpoints");
        if (pts.front().first != 0.0 || pts.back().first != 1.0)
            fail(ErrorKind::Config, "tabulated content: breakpoints must span x=0 to x=1");
        for (std::size_t i = 1; i < pts.size(); ++i)
            if (!(pts[i].first > pts[i - 1].first))
                fail(ErrorKind::Config, "tabulated content: breakpoints must be strictly increasing in x");
        double prev = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
            double s = (pts[i + 1].second - pts[i].second) / (pts[i + 1].first - pts[i].first);
            if (s < -kShapeTol) fail(ErrorKind::Config, "tabulated content: values must be nondecreasing");
            if (s > prev + kShapeTol) fail(ErrorKind::Config, "tabulated content: curve must be concave");
            prev = s;
        }
    }
    const int n = 1000;
    std::vector<double> v(n + 1);
    for (int i = 0; i <= n; ++i) v[i] = std::visit(Eval{static_cast<double>(i) / n}, form_);
    double scale = std::max(1.0, std::fabs(v[n]));
    if (std::fabs(v[0]) > kShapeTol * scale) fail(ErrorKind::Config, "content: Q1(0) must be 0");
    for (int i = 1; i <= n; ++i)
        if (v[i] < v[i - 1] - kShapeTol * scale) fail(ErrorKind::Config, "content: Q1 must be nondecreasing");
    for (int i = 1; i < n; ++i)
        if (v[i + 1] - 2 * v[i] + v[i - 1] > kShapeTol * scale)
            fail(ErrorKind::Config, "content: Q1 must be concave");
}

double q1_eval(const ContentFunction& f, double x) {
    x = check_unit(x, "q1_eval");
    return std::visit(Eval{x}, f.form());
}

Slope q1_derivative(const ContentFunction& f, double x) {
    x = check_unit(x, "q1_derivative");
    return std::visit(Deriv{x}, f.form());
}

double q_total(const ContentFunction& f, double x_h, double b) {
    b = check_unit(b, "q_total");
    if (x_h < -kDomainSlack || x_h > b + kDomainSlack)
        fail(ErrorKind::Domain, "q_total: x_H must lie in [0,b]");
    x_h = std::clamp(x_h, 0.0, b);
    return q1_eval(f, x_h) + q1_eval(f, std::max(0.0, b - x_h));
}

double overlap_value(const OverlapSegment& o) {
    return -o.items * std::expm1(o.users * std::log1p(-o.items_per_user / o.items));
}

double q_multi(const ContentFunction& f, const std::vector<double>& flows,
               const std::optional<OverlapSegment>& overlap) {
    double sum = 0.0;
    for (double x : flows) {
        if (x < -1e-12) fail(ErrorKind::Domain, "q_multi: negative flow");
        sum += x;
    }
    if (std::fabs(sum - 1.0) > 1e-9) fail(ErrorKind::Domain, "q_multi: flows must sum to 1");
    double q = overlap ? overlap_value(*overlap) : 0.0;
    for (double x : flows) q += q1_eval(f, std::clamp(x, 0.0, 1.0));
    return q;
}

double DynamicParams::retention() const {
    return std::exp(users * std::log1p(-2.0 * items_per_user / total_items));
}

DynamicContentState dynamic_step(const DynamicParams& p, const DynamicContentState& s, double x_h) {
    x_h = check_unit(x_h, "dynamic_step");
    double half = 0.5 * p.total_items;
    double r = p.retention();
    double dh = half * (1.0 - std::pow(r, x_h));
    double dl = half * (1.0 - std::pow(r, 1.0 - x_h));
    DynamicContentState out;
    out.q_h = half * (1.0 - (1.0 - p.gamma * s.q_h / half) * (1.0 - dh / half));
    out.q_l = half * (1.0 - (1.0 - p.gamma * s.q_l / half) * (1.0 - dl / half));
    return out;
}

DynamicContentState dynamic_stationary(const DynamicParams& p, double x_h) {
    x_h = check_unit(x_h, "dynamic_stationary");
    double half = 0.5 * p.total_items;
    double r = p.retention();
    double rh = std::pow(r, x_h), rl = std::pow(r, 1.0 - x_h);
    return {half * (1.0 - rh) / (1.0 - p.gamma * rh), half * (1.0 - rl) / (1.0 - p.gamma * rl)};
}

DynamicContentState dynamic_fixed_point(const DynamicParams& p, double x_h, DynamicContentState s,
                                        long max_steps, double tol) {
    for (long t = 0; t < max_steps; ++t) {
        DynamicContentState n = dynamic_step(p, s, x_h);
        bool done = std::fabs(n.q_h - s.q_h) < tol && std::fabs(n.q_l - s.q_l) < tol;
        s = n;
        if (done) return s;
    }
    fail(ErrorKind::Numeric, "dynamic recursion did not reach a fixed point");
}

}  // namespace crl
