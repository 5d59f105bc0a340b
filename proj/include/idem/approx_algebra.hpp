// Approximate *-algebra audits.
//
// The adjoint Phi* of a CPTP map Phi is unital and completely positive, so it
// satisfies the Kadison-Schwarz inequality Phi*(x*x) >= Phi*(x*) Phi*(x). The
// defect norms of that inequality grade how close x is to the multiplicative
// domain of Phi*: when both left and right defects of x and y are at most
// delta * norm^2, products are preserved up to 2 delta ||x|| ||y||.
//
// For an emulation attempt (E, D) of a reduced idempotent F by a reduced
// idempotent G, the audited object is the compressed adjoint composite
//
//     T(x) = e_GE  G*(D*(x))  e_GE,   e_GE = support of (G . E)(1),
//
// restricted to the fixed-point algebra Rg(F*). When the emulation is exact,
// T is a unital *-homomorphism; when it is delta-close in completely bounded
// norm, T preserves the unit exactly, shrinks norms by at most delta, and is
// multiplicative up to 6 delta d / lambda_min. delta is not computable
// exactly without an SDP, so the audits use the trace norm of the Choi
// difference, which upper-bounds the completely bounded distance and keeps
// every check conservative.

#pragma once

#include "idem/structure.hpp"

#include <cstdint>
#include <string>

namespace idem {

// ---------------------------------------------------------------------------
// Kadison-Schwarz defects and approximate multiplicative domains
// ---------------------------------------------------------------------------

struct KSDefect {
    double right_defect = 0;  // || Phi*(x*x) - Phi*(x*) Phi*(x) ||
    double left_defect = 0;   // || Phi*(xx*) - Phi*(x) Phi*(x*) ||
    double norm_x = 0;        // operator norm of x
};

// Defect norms of the Kadison-Schwarz inequality for the adjoint of `phi`.
// Requires phi trace preserving (so that Phi* is unital); verifies that both
// Kadison-Schwarz differences are PSD within eq_tol.
inline KSDefect ks_defect(const Channel& phi, const Matrix& x,
                          const ToleranceConfig& tol = {}) {
    if (x.rows() != phi.dim_out() || x.cols() != phi.dim_out()) {
        throw DimensionError("ks_defect: x must act on the adjoint's domain H_out");
    }
    const ChannelCheck check = check_channel(phi, tol);
    if (check.tp_residual > tol.eq_tol) {
        throw NumericError("ks_defect: map is not trace preserving, so its adjoint "
                           "is not unital (residual " +
                           std::to_string(check.tp_residual) + ")");
    }
    const Matrix ax = phi.adjoint_apply(x);
    const Matrix right = phi.adjoint_apply(Matrix(x.adjoint() * x)) - ax.adjoint() * ax;
    const Matrix left = phi.adjoint_apply(Matrix(x * x.adjoint())) - ax * ax.adjoint();
    if (!is_psd(hermitize(right), tol) || !is_psd(hermitize(left), tol)) {
        throw NumericError("ks_defect: a Kadison-Schwarz difference has a "
                           "significantly negative eigenvalue");
    }
    KSDefect out;
    out.right_defect = op_norm(right);
    out.left_defect = op_norm(left);
    out.norm_x = op_norm(x);
    return out;
}

struct MultDomainCheck {
    double observed = 0;  // || Phi*(xy) - Phi*(x) Phi*(y) ||
    double bound = 0;     // 2 delta ||x|| ||y||
    bool pass = false;
};

// Checks the approximate multiplicative-domain bound: if the left defect of x
// and the right defect of y are both within delta * norm^2, then
// || Phi*(xy) - Phi*(x) Phi*(y) || <= 2 delta ||x|| ||y||.
inline MultDomainCheck approx_mult_domain_check(const Channel& phi, const Matrix& x,
                                                const Matrix& y, double delta,
                                                const ToleranceConfig& tol = {}) {
    if (delta < 0) throw Error("approx_mult_domain_check: delta must be >= 0");
    const KSDefect dx = ks_defect(phi, x, tol);
    const KSDefect dy = ks_defect(phi, y, tol);
    if (dx.left_defect > delta * dx.norm_x * dx.norm_x + tol.eq_tol) {
        throw NumericError("approx_mult_domain_check: left defect of x (" +
                           std::to_string(dx.left_defect) +
                           ") exceeds delta * ||x||^2");
    }
    if (dy.right_defect > delta * dy.norm_x * dy.norm_x + tol.eq_tol) {
        throw NumericError("approx_mult_domain_check: right defect of y (" +
                           std::to_string(dy.right_defect) +
                           ") exceeds delta * ||y||^2");
    }
    MultDomainCheck out;
    const Matrix axy = phi.adjoint_apply(Matrix(x * y));
    out.observed = op_norm(axy - phi.adjoint_apply(x) * phi.adjoint_apply(y));
    out.bound = 2.0 * delta * dx.norm_x * dy.norm_x;
    out.pass = out.observed <= out.bound + tol.eq_tol;
    return out;
}

// ---------------------------------------------------------------------------
// delta-inclusion audits of the compressed adjoint composite
// ---------------------------------------------------------------------------

namespace detail {

// Support projector and smallest retained eigenvalue of a PSD operator,
// computed from one eigendecomposition so the two stay consistent.
struct SupportSpectrum {
    Matrix projector;
    double lambda_min = 0;
    Index rank = 0;
};

inline SupportSpectrum support_spectrum(const Matrix& u, const ToleranceConfig& tol) {
    const Eigensystem es = hermitian_eig(hermitize(u), tol);
    const Index n = es.values.size();
    const double top = n > 0 ? std::max(es.values(0), 0.0) : 0.0;
    const double cut = tol.rank_tol * std::max(top, 0.0);
    SupportSpectrum s;
    s.projector = Matrix::Zero(u.rows(), u.cols());
    for (Index i = 0; i < n && es.values(i) > cut; ++i) {
        s.projector += es.vectors.col(i) * es.vectors.col(i).adjoint();
        s.lambda_min = es.values(i);  // descending order: last kept is smallest
        ++s.rank;
    }
    return s;
}

// The compressed adjoint composite T(x) = e_GE G*(D*(x)) e_GE together with
// the spectral data of (G . E)(1) that defines the compression.
struct AuditMap {
    const Channel* g = nullptr;
    const Channel* decoder = nullptr;
    SupportSpectrum spectrum;

    Matrix operator()(const Matrix& x) const {
        return spectrum.projector * g->adjoint_apply(decoder->adjoint_apply(x)) *
               spectrum.projector;
    }
};

inline AuditMap make_audit_map(const Channel& g, const Channel& encoder,
                               const Channel& decoder, const ToleranceConfig& tol) {
    AuditMap map;
    map.g = &g;
    map.decoder = &decoder;
    map.spectrum =
        support_spectrum(g.apply(encoder.apply(identity(encoder.dim_in()))), tol);
    if (map.spectrum.rank == 0 || map.spectrum.lambda_min < tol.rank_tol) {
        throw NumericError("delta inclusion: (G . E)(1) has degenerate support "
                           "(lambda_min below rank_tol)");
    }
    return map;
}

// Unit-operator-norm samples from the span of an orthonormal algebra basis:
// even indices walk the basis elements, odd indices draw random combinations.
inline Matrix algebra_sample(const std::vector<Matrix>& basis, Index i, Rng& rng) {
    Matrix x;
    if (i % 2 == 0) {
        x = basis[static_cast<std::size_t>(i / 2) % basis.size()];
    } else {
        x = Matrix::Zero(basis.front().rows(), basis.front().cols());
        for (const Matrix& b : basis) x += rng.complex_gaussian() * b;
    }
    const double nx = op_norm(x);
    if (nx < 1e-12) x = basis.front();
    return x / op_norm(x);
}

}  // namespace detail

struct InclusionReport {
    double delta_cb = 0;                 // Choi trace-norm proxy for the cb distance
    double norm_preservation_worst = 0;  // worst of ||x|| - ||T(x)|| over samples
    double unitality_residual = 0;       // || T(1) - e_GE ||
    double multiplicativity_worst = 0;   // worst of || T(xy) - T(x) T(y) ||
    double lambda_min = 0;               // smallest nonzero eigenvalue of (G.E)(1)
    Index dim_source = 0;                // dimension of F's space
    double theoretical_mult_bound = 0;   // 6 delta d / lambda_min
    Index sample_count = 0;
};

// Measures how far T = e_GE G*(D*(.)) e_GE is from a unital *-homomorphism on
// the fixed-point algebra Rg(F*), and verifies the measurements against their
// bounds with delta the Choi trace-norm proxy. F and G must be idempotent
// with full support (reduced); E and D must be CPTP between their spaces.
inline InclusionReport delta_inclusion_report(const Channel& f, const Channel& g,
                                              const Channel& encoder,
                                              const Channel& decoder,
                                              Index sample_count, std::uint64_t seed,
                                              const ToleranceConfig& tol = {}) {
    if (sample_count < 1) {
        throw DimensionError("delta_inclusion_report: sample_count must be >= 1");
    }
    if (encoder.dim_in() != f.dim_in() || encoder.dim_out() != g.dim_in() ||
        decoder.dim_in() != g.dim_in() || decoder.dim_out() != f.dim_in()) {
        throw DimensionError("delta_inclusion_report: encoder/decoder dimensions "
                             "do not match F and G");
    }
    require_channel(encoder, tol, "delta_inclusion_report: encoder");
    require_channel(decoder, tol, "delta_inclusion_report: decoder");
    const ReducedChannel rc_f = reduce(f, tol);   // also verifies idempotence
    const ReducedChannel rc_g = reduce(g, tol);
    if (rc_f.support.rank != f.dim_in() || rc_g.support.rank != g.dim_in()) {
        throw NumericError("delta_inclusion_report: expected reduced channels "
                           "(full support)");
    }

    InclusionReport report;
    report.dim_source = f.dim_in();
    report.sample_count = sample_count;
    report.delta_cb = trace_norm(
        f.choi() - compose(decoder, compose(g, encoder)).choi());

    const detail::AuditMap t = detail::make_audit_map(g, encoder, decoder, tol);
    report.lambda_min = t.spectrum.lambda_min;
    report.unitality_residual =
        op_norm(t(identity(f.dim_in())) - t.spectrum.projector);

    const AlgebraBasis alg = fixed_point_algebra(rc_f, tol);
    Rng rng(seed);
    std::vector<Matrix> samples;
    samples.reserve(static_cast<std::size_t>(sample_count));
    for (Index i = 0; i < sample_count; ++i) {
        samples.push_back(detail::algebra_sample(alg.basis, i, rng));
    }
    for (Index i = 0; i < sample_count; ++i) {
        const Matrix& x = samples[static_cast<std::size_t>(i)];
        const Matrix& y = samples[static_cast<std::size_t>((i + 1) % sample_count)];
        report.norm_preservation_worst =
            std::max(report.norm_preservation_worst, 1.0 - op_norm(t(x)));
        report.multiplicativity_worst = std::max(
            report.multiplicativity_worst, op_norm(t(Matrix(x * y)) - t(x) * t(y)));
    }
    report.theoretical_mult_bound = 6.0 * report.delta_cb *
                                    static_cast<double>(report.dim_source) /
                                    report.lambda_min;
    return report;
}

// Worst multiplicativity defect of T over all ordered pairs of fixed-point
// algebra basis elements. Zero (within eq_tol) exactly when (E, D) realizes
// an exact emulation of F through G. F and G need only be idempotent; a
// rank-deficient F is handled through its support isometry.
inline double multiplicative_domain_diagnostic(const Channel& f, const Channel& g,
                                               const Channel& encoder,
                                               const Channel& decoder,
                                               const ToleranceConfig& tol = {}) {
    if (encoder.dim_in() != f.dim_in() || encoder.dim_out() != g.dim_in() ||
        decoder.dim_in() != g.dim_in() || decoder.dim_out() != f.dim_in()) {
        throw DimensionError("multiplicative_domain_diagnostic: encoder/decoder "
                             "dimensions do not match F and G");
    }
    require_channel(encoder, tol, "multiplicative_domain_diagnostic: encoder");
    require_channel(decoder, tol, "multiplicative_domain_diagnostic: decoder");
    const EqualityResult g_idem = is_idempotent(g, tol);
    if (!g_idem.equal) {
        throw NumericError("multiplicative_domain_diagnostic: G is not idempotent "
                           "(Choi residual " + std::to_string(g_idem.residual) + ")");
    }
    const ReducedChannel rc_f = reduce(f, tol);
    const detail::AuditMap t = detail::make_audit_map(g, encoder, decoder, tol);

    const AlgebraBasis alg = fixed_point_algebra(rc_f, tol);
    const Matrix& v = rc_f.support.isometry;
    std::vector<Matrix> basis;
    basis.reserve(alg.basis.size());
    for (const Matrix& b : alg.basis) basis.push_back(v * b * v.adjoint());

    double worst = 0;
    for (const Matrix& x : basis) {
        const Matrix tx = t(x);
        for (const Matrix& y : basis) {
            worst = std::max(worst, op_norm(t(Matrix(x * y)) - tx * t(y)));
        }
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Expansion bound and the dimension-dependent error threshold
// ---------------------------------------------------------------------------

// Verifies the expansion bound (lambda_min / d) ||e x e|| <= ||Phi*(x)|| for
// PSD x, where e is the support of Phi(1), lambda_min its smallest nonzero
// eigenvalue, and d the input dimension of Phi.
inline bool expansion_check(const Channel& phi, const Matrix& x,
                            const ToleranceConfig& tol = {}) {
    if (x.rows() != phi.dim_out() || x.cols() != phi.dim_out()) {
        throw DimensionError("expansion_check: x must act on H_out");
    }
    const detail::SupportSpectrum s =
        detail::support_spectrum(phi.apply(identity(phi.dim_in())), tol);
    if (s.rank == 0) return true;  // left side vanishes
    const Matrix xh = hermitize(x);
    const double lhs = s.lambda_min / static_cast<double>(phi.dim_in()) *
                       op_norm(s.projector * xh * s.projector);
    return lhs <= op_norm(phi.adjoint_apply(xh)) + tol.eq_tol;
}

struct ErrorThreshold {
    double delta_max = 0;     // configured inclusion budget
    Index d = 0;              // dimension of F's space
    int k = 0;                // copies of F emulated
    int n = 0;                // copies of G used
    double lambda_min_n = 0;  // smallest nonzero eigenvalue of (G^n . E)(1)
    double threshold = 0;     // delta_max * lambda_min_n / (6 d^k)
};

// Diamond-norm error below which an emulation attempt certifies a delta_max-
// inclusion of the fixed-point algebras. delta_max has no canonical value;
// it is supplied by configuration.
inline ErrorThreshold error_threshold(Index f_dim, int k, int n, const Channel& g,
                                      const Channel& encoder, double delta_max,
                                      const ToleranceConfig& tol = {}) {
    if (f_dim < 1 || k < 1 || n < 1) {
        throw DimensionError("error_threshold: dimensions and copy counts must be "
                             ">= 1");
    }
    if (delta_max <= 0) throw Error("error_threshold: delta_max must be positive");
    Index dk = 1;
    for (int i = 0; i < k; ++i) dk *= f_dim;
    if (encoder.dim_in() != dk) {
        throw DimensionError("error_threshold: encoder input dimension must be "
                             "f_dim^k");
    }
    const Channel gn = tensor_power(g, n);
    if (encoder.dim_out() != gn.dim_in()) {
        throw DimensionError("error_threshold: encoder output dimension must match "
                             "G^n");
    }
    const detail::SupportSpectrum s =
        detail::support_spectrum(gn.apply(encoder.apply(identity(dk))), tol);
    if (s.rank == 0 || s.lambda_min < tol.rank_tol) {
        throw NumericError("error_threshold: (G^n . E)(1) has degenerate support");
    }
    ErrorThreshold out;
    out.delta_max = delta_max;
    out.d = f_dim;
    out.k = k;
    out.n = n;
    out.lambda_min_n = s.lambda_min;
    out.threshold = delta_max * s.lambda_min / (6.0 * static_cast<double>(dk));
    return out;
}

}  // namespace idem
