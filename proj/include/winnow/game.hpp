#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "winnow/errors.hpp"

namespace winnow {

// Detection probability p on [0,1]: p(0)=0, p(1)=1, non-decreasing.
// Families: power c^k, normalized logistic, piecewise-linear table.
class DetectionProb {
public:
    static DetectionProb power(double k) {
        if (!(k > 0.0)) throw UsageError("power exponent must be > 0");
        DetectionProb p;
        p.kind_ = Kind::power;
        p.a_ = k;
        return p;
    }

    // Logistic in c rescaled so the endpoints are exactly 0 and 1.
    static DetectionProb logistic(double steepness, double midpoint) {
        if (!(steepness > 0.0)) throw UsageError("logistic steepness must be > 0");
        if (!(midpoint > 0.0 && midpoint < 1.0))
            throw UsageError("logistic midpoint must be inside (0, 1)");
        DetectionProb p;
        p.kind_ = Kind::logistic;
        p.a_ = steepness;
        p.b_ = midpoint;
        const double lo = sigmoid(steepness * (0.0 - midpoint));
        const double hi = sigmoid(steepness * (1.0 - midpoint));
        p.scale_ = 1.0 / (hi - lo);
        p.offset_ = lo;
        return p;
    }

    static DetectionProb table(std::vector<std::pair<double, double>> points) {
        if (points.size() < 2) throw UsageError("table needs at least 2 points");
        std::sort(points.begin(), points.end());
        if (points.front().first != 0.0 || points.back().first != 1.0)
            throw UsageError("table must span x=0 to x=1");
        if (std::abs(points.front().second) > 1e-12 || std::abs(points.back().second - 1.0) > 1e-12)
            throw UsageError("table must map 0 to 0 and 1 to 1");
        for (size_t i = 1; i < points.size(); ++i) {
            if (points[i].first == points[i - 1].first)
                throw UsageError("table has duplicate x values");
            if (points[i].second < points[i - 1].second)
                throw UsageError("table must be non-decreasing");
        }
        DetectionProb p;
        p.kind_ = Kind::table;
        p.points_ = std::move(points);
        return p;
    }

    // Spec strings: "pow:2", "logistic:10,0.5", "table:0=0,0.4=0.1,1=1".
    static DetectionProb parse(const std::string& spec) {
        const size_t colon = spec.find(':');
        const std::string family = spec.substr(0, colon);
        const std::string args = colon == std::string::npos ? "" : spec.substr(colon + 1);
        try {
            if (family == "pow") return power(std::stod(args));
            if (family == "logistic") {
                const size_t comma = args.find(',');
                if (comma == std::string::npos)
                    throw UsageError("logistic needs steepness,midpoint");
                return logistic(std::stod(args.substr(0, comma)),
                                std::stod(args.substr(comma + 1)));
            }
            if (family == "table") {
                std::vector<std::pair<double, double>> pts;
                std::stringstream ss(args);
                std::string item;
                while (std::getline(ss, item, ',')) {
                    const size_t eq = item.find('=');
                    if (eq == std::string::npos) throw UsageError("table point needs x=y");
                    pts.emplace_back(std::stod(item.substr(0, eq)), std::stod(item.substr(eq + 1)));
                }
                return table(std::move(pts));
            }
        } catch (const std::invalid_argument&) {
            throw UsageError("cannot parse detection spec: " + spec);
        }
        throw UsageError("unknown detection family (want pow|logistic|table): " + spec);
    }

    double operator()(double c) const {
        switch (kind_) {
            case Kind::power:
                return std::pow(c, a_);
            case Kind::logistic:
                return (sigmoid(a_ * (c - b_)) - offset_) * scale_;
            case Kind::table: {
                auto it = std::upper_bound(points_.begin(), points_.end(),
                                           std::make_pair(c, std::numeric_limits<double>::max()));
                if (it == points_.begin()) return points_.front().second;
                if (it == points_.end()) return points_.back().second;
                const auto& [x1, y1] = *(it - 1);
                const auto& [x2, y2] = *it;
                return y1 + (y2 - y1) * (c - x1) / (x2 - x1);
            }
        }
        return 0.0;
    }

    std::string describe() const {
        std::ostringstream out;
        switch (kind_) {
            case Kind::power:
                out << "pow:" << a_;
                break;
            case Kind::logistic:
                out << "logistic:" << a_ << "," << b_;
                break;
            case Kind::table:
                out << "table:" << points_.size() << " points";
                break;
        }
        return out.str();
    }

    bool is_power() const { return kind_ == Kind::power; }
    double power_exponent() const { return a_; }
    double first_parameter() const { return a_; }
    DetectionProb with_first_parameter(double v) const {
        switch (kind_) {
            case Kind::power:
                return power(v);
            case Kind::logistic:
                return logistic(v, b_);
            case Kind::table:
                throw UsageError("table detection has no sweepable parameter");
        }
        throw UsageError("unreachable");
    }

    // Endpoint and monotonicity check on an evaluation grid.
    void validate(size_t grid = 1001) const {
        if (std::abs((*this)(0.0)) > 1e-9) throw UsageError("p(0) must be 0");
        if (std::abs((*this)(1.0) - 1.0) > 1e-9) throw UsageError("p(1) must be 1");
        double prev = 0.0;
        for (size_t i = 1; i < grid; ++i) {
            const double v = (*this)(static_cast<double>(i) / (grid - 1));
            if (v < prev - 1e-12)
                throw UsageError("p must be non-decreasing on [0,1]");
            prev = v;
        }
    }

private:
    enum class Kind { power, logistic, table };
    static double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

    Kind kind_ = Kind::power;
    double a_ = 2.0;      // power k / logistic steepness
    double b_ = 0.5;      // logistic midpoint
    double scale_ = 1.0;  // logistic normalization
    double offset_ = 0.0;
    std::vector<std::pair<double, double>> points_;
};

struct GameParams {
    double m = 1.0;     // benchmark sensitivity
    double alpha = 1.0; // linear contamination cost
    double beta = 1.0;  // detection penalty
    double gamma = 0.1; // entry cost
    DetectionProb p = DetectionProb::power(2.0);

    void validate() const {
        if (!(m > 0.0)) throw UsageError("m must be > 0");
        if (!(alpha > 0.0)) throw UsageError("alpha must be > 0");
        if (!(beta > 0.0)) throw UsageError("beta must be > 0");
        if (!(gamma > 0.0)) throw UsageError("gamma must be > 0");
        p.validate();
    }

    double kappa() const { return m - alpha; }
};

// u(c; c_bar) = m(c - c_bar) - alpha*c - beta*p(c) - gamma*1{c>0}.
// The rival term -m*c_bar is additive, so best responses never depend
// on c_bar.
inline double payoff(const GameParams& params, double c, double c_bar) {
    if (c < 0.0 || c > 1.0 || c_bar < 0.0 || c_bar > 1.0)
        throw UsageError("contamination levels must lie in [0,1]");
    double u = params.m * (c - c_bar) - params.alpha * c - params.beta * params.p(c);
    if (c > 0.0) u -= params.gamma;
    return u;
}

// Net benefit of playing c>0 before the entry fee: g(c) = kappa*c - beta*p(c).
inline double entry_gain(const GameParams& params, double c) {
    return params.kappa() * c - params.beta * params.p(c);
}

enum class Regime { abstain, interior, boundary };

inline const char* regime_name(Regime r) {
    switch (r) {
        case Regime::abstain: return "abstain";
        case Regime::interior: return "interior";
        case Regime::boundary: return "boundary";
    }
    return "?";
}

struct Equilibrium {
    double c_star = 0.0;
    Regime regime = Regime::abstain;
    double net_gain = 0.0; // payoff(c_star) - payoff(0); 0 when abstaining
    double kappa = 0.0;

    nlohmann::json to_json() const {
        return {{"c_star", c_star},
                {"regime", regime_name(regime)},
                {"net_gain", net_gain},
                {"kappa", kappa}};
    }
};

namespace detail {

// Golden-section maximization to interval width <= tol.
inline double golden_max(const std::function<double(double)>& f, double a, double b,
                         double tol) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    return (a + b) / 2.0;
}

} // namespace detail

// Symmetric one-shot equilibrium. kappa <= 0 means contamination cannot
// pay even ignoring detection: the unique equilibrium is abstention.
// Otherwise maximize g over (0,1] (coarse grid, then golden-section
// refinement around the best cell; ties resolve to the smallest c) and
// adopt the maximizer iff its gain covers the entry cost (tie adopts).
inline Equilibrium solve_equilibrium(const GameParams& params) {
    params.validate();
    Equilibrium eq;
    eq.kappa = params.kappa();
    if (eq.kappa <= 0.0) return eq;

    const auto g = [&](double c) { return entry_gain(params, c); };

    constexpr int kGrid = 10000;
    double best_c = 1.0 / kGrid;
    double best_g = g(best_c);
    for (int i = 2; i <= kGrid; ++i) {
        const double c = static_cast<double>(i) / kGrid;
        const double v = g(c);
        if (v > best_g) { // strict: keeps the smallest maximizing c
            best_g = v;
            best_c = c;
        }
    }

    const double lo = std::max(0.0, best_c - 1.0 / kGrid);
    const double hi = std::min(1.0, best_c + 1.0 / kGrid);
    const double refined = detail::golden_max(g, lo, hi, 1e-9);
    double c_plus = best_c;
    double g_plus = best_g;
    if (g(refined) > g_plus) {
        c_plus = refined;
        g_plus = g(refined);
    }

    if (g_plus < params.gamma) return eq; // entry cost not covered: abstain

    eq.c_star = c_plus;
    eq.regime = c_plus >= 1.0 - 1e-9 ? Regime::boundary : Regime::interior;
    if (eq.regime == Regime::boundary) eq.c_star = 1.0;
    eq.net_gain = g_plus - params.gamma;
    return eq;
}

// Closed form for p(c) = c^k, k > 1: the stationary point of g is
// (kappa / (k*beta))^(1/(k-1)), clamped into [0,1]. Tests and the CLI
// cross-check the numeric solver against this.
inline double analytic_power_cstar(double kappa, double beta, double k) {
    if (kappa <= 0.0) return 0.0;
    if (k <= 1.0) throw UsageError("analytic form needs k > 1");
    const double c = std::pow(kappa / (k * beta), 1.0 / (k - 1.0));
    return std::min(1.0, c);
}

struct SweepPoint {
    double value = 0.0;
    Equilibrium eq;
};

// axis in {m, alpha, beta, gamma, p}: "p" sweeps the detection family's
// first parameter (power exponent / logistic steepness).
inline std::vector<SweepPoint> sweep(const GameParams& base, const std::string& axis,
                                     const std::vector<double>& values) {
    if (values.empty()) throw UsageError("sweep needs at least one value");
    std::vector<SweepPoint> out;
    out.reserve(values.size());
    for (double v : values) {
        GameParams params = base;
        if (axis == "m") params.m = v;
        else if (axis == "alpha") params.alpha = v;
        else if (axis == "beta") params.beta = v;
        else if (axis == "gamma") params.gamma = v;
        else if (axis == "p") params.p = base.p.with_first_parameter(v);
        else throw UsageError("unknown sweep axis (want m|alpha|beta|gamma|p): " + axis);
        out.push_back({v, solve_equilibrium(params)});
    }
    return out;
}

// Minimal standalone SVG line plot of c* against the swept value.
inline std::string render_sweep_svg(const std::vector<SweepPoint>& points,
                                    const std::string& axis) {
    if (points.empty()) throw UsageError("nothing to plot");
    const double width = 640, height = 420;
    const double ml = 60, mr = 20, mt = 30, mb = 50;
    const double pw = width - ml - mr, ph = height - mt - mb;

    double xmin = points.front().value, xmax = points.front().value;
    for (const auto& p : points) {
        xmin = std::min(xmin, p.value);
        xmax = std::max(xmax, p.value);
    }
    if (xmax == xmin) xmax = xmin + 1.0;
    auto sx = [&](double v) { return ml + (v - xmin) / (xmax - xmin) * pw; };
    auto sy = [&](double c) { return mt + (1.0 - c) * ph; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    svg << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    svg << "<text x=\"" << width / 2 << "\" y=\"18\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"14\">equilibrium contamination vs " << axis
        << "</text>\n";
    // axes
    svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
        << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\""
        << mt + ph << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double c = i / 4.0;
        svg << "<text x=\"" << ml - 8 << "\" y=\"" << sy(c) + 4
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << c
            << "</text>\n";
        svg << "<line x1=\"" << ml - 4 << "\" y1=\"" << sy(c) << "\" x2=\"" << ml << "\" y2=\""
            << sy(c) << "\" stroke=\"black\"/>\n";
    }
    for (int i = 0; i <= 4; ++i) {
        const double v = xmin + (xmax - xmin) * i / 4.0;
        svg << "<text x=\"" << sx(v) << "\" y=\"" << mt + ph + 20
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << v
            << "</text>\n";
        svg << "<line x1=\"" << sx(v) << "\" y1=\"" << mt + ph << "\" x2=\"" << sx(v)
            << "\" y2=\"" << mt + ph + 4 << "\" stroke=\"black\"/>\n";
    }
    svg << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 12
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << axis
        << "</text>\n";
    svg << "<text x=\"16\" y=\"" << mt + ph / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
        << "transform=\"rotate(-90 16 " << mt + ph / 2 << ")\">c*</text>\n";

    svg << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
    for (const auto& p : points) svg << sx(p.value) << "," << sy(p.eq.c_star) << " ";
    svg << "\"/>\n";
    for (const auto& p : points)
        svg << "<circle cx=\"" << sx(p.value) << "\" cy=\"" << sy(p.eq.c_star)
            << "\" r=\"3\" fill=\"" << (p.eq.regime == Regime::abstain ? "#d62728" : "#1f77b4")
            << "\"/>\n";
    svg << "</svg>\n";
    return svg.str();
}

} // namespace winnow
