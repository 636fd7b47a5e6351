#pragma once

#include <optional>
#include <utility>
#include <variant>
#include <vector>

namespace crl {

struct ExponentialCoverage {
    double total_items;
    double users;
    double items_per_user;
    int paths;
};

struct PiecewiseLinearCap {
    double cap;
    double knee = 0.5;
};

struct Tabulated {
    std::vector<std::pair<double, double>> points;
};

struct Slope {
    double left;
    double right;
    double mid() const { return 0.5 * (left + right); }
};

// Concave per-path coverage curve on [0,1]. Validated at construction.
class ContentFunction {
public:
    using Variant = std::variant<ExponentialCoverage, PiecewiseLinearCap, Tabulated>;

    ContentFunction(ExponentialCoverage e);
    ContentFunction(PiecewiseLinearCap p);
    ContentFunction(Tabulated t);

    const Variant& form() const { return form_; }
    bool is_smooth() const { return std::holds_alternative<ExponentialCoverage>(form_); }

private:
    void validate() const;
    Variant form_;
};

double q1_eval(const ContentFunction& f, double x);
Slope q1_derivative(const ContentFunction& f, double x);
double q_total(const ContentFunction& f, double x_h, double b);

struct OverlapSegment {
    double items;
    double users;
    double items_per_user;
};

double overlap_value(const OverlapSegment& o);
double q_multi(const ContentFunction& f, const std::vector<double>& flows,
               const std::optional<OverlapSegment>& overlap);

struct DynamicParams {
    double total_items;
    double users;
    double items_per_user;
    double gamma;
    double c_h = 0.0;
    double theta = 0.5;

    double retention() const;
};

struct DynamicContentState {
    double q_h = 0.0;
    double q_l = 0.0;
};

DynamicContentState dynamic_step(const DynamicParams& p, const DynamicContentState& s, double x_h);
DynamicContentState dynamic_stationary(const DynamicParams& p, double x_h);
DynamicContentState dynamic_fixed_point(const DynamicParams& p, double x_h,
                                        DynamicContentState start = {},
                                        long max_steps = 1000000, double tol = 1e-12);

}  // namespace crl
