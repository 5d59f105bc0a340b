// Emulation rates from shape vectors.
//
// The zero-error capacity for emulating a channel F (shape lambda_F) with
// copies of a channel G (shape lambda_G) is
//
//     C = inf_{p in [1,inf]}  log ||lambda_G||_p / log ||lambda_F||_p.
//
// This file evaluates l_p norms of shape vectors in the log domain, the rate
// curve and its infimum via a dense grid in s = 1/p plus local golden-section
// refinement, the closed forms available when either channel is an identity
// or a complete dephasing, the discrimination error floor
// 1 - min_p ||lambda_G||_p / ||lambda_F||_p over p in {1,inf}, and a
// numerical additivity check.

#pragma once

#include "idem/structure.hpp"

#include <array>
#include <cmath>
#include <limits>

namespace idem {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Shape-vector arithmetic
// ---------------------------------------------------------------------------

inline void validate_shape(const ShapeVector& v) {
    if (v.entries.empty()) throw DimensionError("shape vector is empty");
    for (std::size_t i = 0; i < v.entries.size(); ++i) {
        if (v.entries[i] < 1) throw DimensionError("shape entries must be >= 1");
        if (i > 0 && v.entries[i] > v.entries[i - 1]) {
            throw DimensionError("shape entries must be non-increasing");
        }
    }
}

inline ShapeVector make_shape(std::vector<Index> entries) {
    std::sort(entries.begin(), entries.end(), std::greater<>());
    ShapeVector v{std::move(entries)};
    validate_shape(v);
    return v;
}

inline bool all_ones(const ShapeVector& v) {
    return v.entries.empty() || v.entries.front() == 1;
}

// Entrywise products of two shapes, sorted non-increasingly.
inline ShapeVector tensor(const ShapeVector& a, const ShapeVector& b) {
    std::vector<Index> prod;
    prod.reserve(a.entries.size() * b.entries.size());
    for (Index x : a.entries)
        for (Index y : b.entries) prod.push_back(x * y);
    return make_shape(std::move(prod));
}

inline ShapeVector tensor_power(const ShapeVector& v, int n) {
    if (n < 1) throw DimensionError("tensor_power: exponent must be >= 1");
    ShapeVector out = v;
    for (int i = 1; i < n; ++i) out = tensor(out, v);
    return out;
}

// log ||v||_p computed stably: (1/p) * logsumexp(p * log d_i); p = inf gives
// log(max d_i). Requires p >= 1.
inline double log_lp_norm(const ShapeVector& v, double p) {
    validate_shape(v);
    if (std::isnan(p) || p < 1.0) {
        throw Error("lp_norm: p must satisfy p >= 1 (got " + std::to_string(p) + ")");
    }
    const double log_max = std::log(static_cast<double>(v.entries.front()));
    if (std::isinf(p)) return log_max;
    double sum = 0;
    for (Index d : v.entries) {
        sum += std::exp(p * (std::log(static_cast<double>(d)) - log_max));
    }
    return log_max + std::log(sum) / p;
}

inline double lp_norm(const ShapeVector& v, double p) {
    return std::exp(log_lp_norm(v, p));
}

// ---------------------------------------------------------------------------
// The rate curve
// ---------------------------------------------------------------------------

struct RateCurvePoint {
    double p = 1;            // in [1, inf]
    double s = 1;            // = 1/p, in [0, 1]
    double numerator = 0;    // log ||lambda_G||_p
    double denominator = 0;  // log ||lambda_F||_p
    double ratio = 0;        // with the eval_ratio conventions
};

enum class SpecialCase { none, source_shape_one, all_ones_both, denominator_zero };

inline const char* to_string(SpecialCase c) {
    switch (c) {
        case SpecialCase::none: return "none";
        case SpecialCase::source_shape_one: return "source_shape_one";
        case SpecialCase::all_ones_both: return "all_ones_both";
        case SpecialCase::denominator_zero: return "denominator_zero";
    }
    throw Error("unknown special-case tag");
}

// Ratio log||lambda_G||_p / log||lambda_F||_p with the limit conventions:
//  * lambda_F = (1): error — the capacity is infinite and handled upstream;
//  * both shapes all-ones: the ratio is constant = log K_G / log K_F (the
//    p-dependence cancels), returned for every p including inf;
//  * lambda_F all-ones, lambda_G not: at p = inf the denominator vanishes
//    while the numerator stays positive, so the ratio is +inf.
inline double eval_ratio(const ShapeVector& lam_f, const ShapeVector& lam_g, double p) {
    validate_shape(lam_f);
    validate_shape(lam_g);
    if (lam_f.entries.size() == 1 && lam_f.entries.front() == 1) {
        throw Error("eval_ratio: the emulated shape is (1); the capacity is infinite");
    }
    const bool f_ones = all_ones(lam_f);
    const bool g_ones = all_ones(lam_g);
    if (f_ones && g_ones) {
        return std::log(static_cast<double>(lam_g.entries.size())) /
               std::log(static_cast<double>(lam_f.entries.size()));
    }
    const double den = log_lp_norm(lam_f, p);
    const double num = log_lp_norm(lam_g, p);
    if (den == 0.0) {
        // Only possible at p = inf with lambda_F all-ones and lambda_G not.
        return num > 0.0 ? kInfinity : 0.0;
    }
    return num / den;
}

// ---------------------------------------------------------------------------
// Capacity optimizer
// ---------------------------------------------------------------------------

struct EndpointValues {
    double p1 = 0;    // ratio at p = 1
    double pinf = 0;  // ratio at p = inf
};

struct CapacityReport {
    double value = 0;
    double argmin_p = 1;
    std::vector<RateCurvePoint> curve_samples;
    EndpointValues endpoint_values;
    SpecialCase special_case = SpecialCase::none;
};

struct CapacityOptions {
    Index grid_points = 4096;   // samples of s = 1/p in [0, 1], endpoints included
    double refine_tol = 1e-12;  // golden-section window width in s
    bool keep_curve = true;     // retain all grid samples in the report
};

namespace detail {

inline RateCurvePoint rate_point(const ShapeVector& lam_f, const ShapeVector& lam_g,
                                 double s) {
    RateCurvePoint pt;
    pt.s = s;
    pt.p = (s == 0.0) ? kInfinity : 1.0 / s;
    pt.numerator = log_lp_norm(lam_g, pt.p);
    pt.denominator = log_lp_norm(lam_f, pt.p);
    pt.ratio = eval_ratio(lam_f, lam_g, pt.p);
    return pt;
}

}  // namespace detail

// Minimizes the rate curve over p in [1, inf], parameterized by s = 1/p so
// the domain is compact. The curve is not assumed unimodal: a dense grid
// locates the basin (scanned from p = 1 upward so ties resolve toward
// smaller p), then golden-section refinement narrows the minimizer.
inline CapacityReport capacity(const ShapeVector& lam_f, const ShapeVector& lam_g,
                               const CapacityOptions& opts = {}) {
    validate_shape(lam_f);
    validate_shape(lam_g);
    CapacityReport report;

    if (lam_f.entries.size() == 1 && lam_f.entries.front() == 1) {
        report.special_case = SpecialCase::source_shape_one;
        report.value = kInfinity;
        report.argmin_p = std::numeric_limits<double>::quiet_NaN();
        report.endpoint_values = {kInfinity, kInfinity};
        return report;
    }
    if (all_ones(lam_f) && all_ones(lam_g)) {
        report.special_case = SpecialCase::all_ones_both;
        report.value = eval_ratio(lam_f, lam_g, 1.0);
        report.argmin_p = 1.0;
        report.endpoint_values = {report.value, report.value};
        return report;
    }
    if (all_ones(lam_f)) report.special_case = SpecialCase::denominator_zero;

    const Index grid = std::max<Index>(opts.grid_points, 3);
    double best_s = 1.0;
    double best_ratio = kInfinity;
    report.curve_samples.reserve(opts.keep_curve ? grid : 0);
    for (Index i = 0; i < grid; ++i) {
        const double s =
            1.0 - static_cast<double>(i) / static_cast<double>(grid - 1);
        const RateCurvePoint pt = detail::rate_point(lam_f, lam_g, std::max(s, 0.0));
        if (opts.keep_curve) report.curve_samples.push_back(pt);
        if (pt.ratio < best_ratio) {
            best_ratio = pt.ratio;
            best_s = pt.s;
        }
    }
    report.endpoint_values.p1 = eval_ratio(lam_f, lam_g, 1.0);
    report.endpoint_values.pinf = eval_ratio(lam_f, lam_g, kInfinity);

    // Local refinement around the best grid point.
    const double h = 1.0 / static_cast<double>(grid - 1);
    double lo = std::max(0.0, best_s - h);
    double hi = std::min(1.0, best_s + h);
    const auto g = [&](double s) { return eval_ratio(lam_f, lam_g, s == 0.0 ? kInfinity : 1.0 / s); };
    constexpr double kGolden = 0.6180339887498949;  // (sqrt(5) - 1) / 2
    double x1 = hi - kGolden * (hi - lo);
    double x2 = lo + kGolden * (hi - lo);
    double f1 = g(x1), f2 = g(x2);
    while (hi - lo > opts.refine_tol) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - kGolden * (hi - lo);
            f1 = g(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + kGolden * (hi - lo);
            f2 = g(x2);
        }
    }
    const double s_ref = 0.5 * (lo + hi);
    const double f_ref = g(s_ref);
    if (f_ref < best_ratio) {
        best_ratio = f_ref;
        best_s = s_ref;
    }

    // The endpoint ratios are limits evaluated exactly, while interior samples
    // round: a curve sloping into an endpoint goes numerically flat well
    // before reaching it. The endpoints are grid points, so they can tie the
    // scan minimum but never beat it; on such a tie the endpoint is the true
    // minimizer (the curve is analytic, so an exact interior tie is a rounding
    // artifact). Ties between the two endpoints resolve toward p = 1.
    if (report.endpoint_values.p1 <= best_ratio) {
        best_s = 1.0;
    } else if (report.endpoint_values.pinf <= best_ratio) {
        best_s = 0.0;
    }

    report.value = best_ratio;
    report.argmin_p = (best_s == 0.0) ? kInfinity : 1.0 / best_s;
    return report;
}

// ---------------------------------------------------------------------------
// Closed forms when one side is an identity or a complete dephasing
// ---------------------------------------------------------------------------

// Rows of the closed-form table. "Emulated" refers to the channel being
// emulated (shape lambda_F), "emulator" to the channel supplying the copies
// (shape lambda_G); `lam` below is always the other side's shape.
enum class TableRow {
    emulated_identity,          // F = Id_d:   log||lam_G||_inf / log d
    emulator_identity,          // G = Id_d:   log d / log||lam_F||_1
    emulated_dephasing,         // F = Delta_d: log||lam_G||_1 / log d
    emulator_dephasing,         // G = Delta_d, lam_F not all-ones: 0
    emulator_dephasing_uniform  // G = Delta_d, lam_F all-ones: log d / log||lam_F||_1
};

inline double capacity_closed_form(TableRow row, const ShapeVector& lam, Index d) {
    if (d < 2) throw DimensionError("capacity_closed_form: need d >= 2");
    validate_shape(lam);
    const double log_d = std::log(static_cast<double>(d));
    switch (row) {
        case TableRow::emulated_identity:
            return log_lp_norm(lam, kInfinity) / log_d;
        case TableRow::emulator_identity:
            return log_d / log_lp_norm(lam, 1.0);
        case TableRow::emulated_dephasing:
            return log_lp_norm(lam, 1.0) / log_d;
        case TableRow::emulator_dephasing:
            if (all_ones(lam)) {
                throw Error("capacity_closed_form: shape is all-ones; "
                            "use emulator_dephasing_uniform");
            }
            return 0.0;
        case TableRow::emulator_dephasing_uniform:
            if (!all_ones(lam)) {
                throw Error("capacity_closed_form: shape is not all-ones; "
                            "use emulator_dephasing");
            }
            return log_d / log_lp_norm(lam, 1.0);
    }
    throw Error("capacity_closed_form: unknown table row");
}

// ---------------------------------------------------------------------------
// Error floor and additivity
// ---------------------------------------------------------------------------

// 1 - min(||lam_G||_1 / ||lam_F||_1, ||lam_G||_inf / ||lam_F||_inf), clamped
// to [0,1]: a lower bound on the worst-case error of any emulation attempt.
inline double converse_error_floor(const ShapeVector& lam_f, const ShapeVector& lam_g) {
    const double r1 = std::exp(log_lp_norm(lam_g, 1.0) - log_lp_norm(lam_f, 1.0));
    const double rinf =
        std::exp(log_lp_norm(lam_g, kInfinity) - log_lp_norm(lam_f, kInfinity));
    return std::clamp(1.0 - std::min(r1, rinf), 0.0, 1.0);
}

// Capacity is additive in the emulator: C(G1 (x) G2 -> F) = C(G1 -> F) + C(G2 -> F).
inline bool additivity_check(const ShapeVector& lam_f, const ShapeVector& lam_g1,
                             const ShapeVector& lam_g2, double tolerance = 1e-6) {
    if (lam_f.entries.size() == 1 && lam_f.entries.front() == 1) {
        throw Error("additivity_check: the emulated shape must not be (1)");
    }
    CapacityOptions opts;
    opts.keep_curve = false;
    const double joint = capacity(lam_f, tensor(lam_g1, lam_g2), opts).value;
    const double split =
        capacity(lam_f, lam_g1, opts).value + capacity(lam_f, lam_g2, opts).value;
    return std::abs(joint - split) <= tolerance;
}

}  // namespace idem
