// Discrimination witnesses and converse certificates.
//
// A witness (mu, sigma) with 0 <= mu <= 1 and sigma a state certifies
//
//     tr(mu (Phi1 (x) Id)(sigma)) - tr(mu (Phi2 (x) Id)(sigma))
//         <= (1/2) ||Phi1 - Phi2||_diamond,
//
// so evaluating both sides of an attempted emulation yields a lower bound on
// its diamond-norm error. Two witness families are built from a block
// decomposition: the p = 1 family (maximally correlated block states) and
// the p = inf family (maximally entangled state on the largest block,
// composed with the partial-trace half of the pinching factorization
// Fhat = F2 . P . F1). On its own channel each witness evaluates to 1; on
// any emulation attempt D . G^n . E its value is capped by the shape-norm
// ratio ||lambda_G||_p^n / ||lambda_F||_p^k, which yields the error floor
// 1 - min_p of that ratio.

#pragma once

#include "idem/emulation.hpp"

#include <cstdint>
#include <numeric>

namespace idem {

// ---------------------------------------------------------------------------
// Witness pairs and the Holevo-Helstrom gap
// ---------------------------------------------------------------------------

struct WitnessPair {
    Matrix mu;           // effect on H_out (x) C^aux
    Matrix sigma;        // density operator on H_in (x) C^aux
    Index aux_dim = 1;
};

inline void validate_witness(const WitnessPair& w, Index dim_in, Index dim_out,
                             const ToleranceConfig& tol) {
    if (w.aux_dim < 1) throw DimensionError("witness: aux_dim must be >= 1");
    if (w.mu.rows() != dim_out * w.aux_dim || w.mu.cols() != w.mu.rows()) {
        throw DimensionError("witness: mu must act on H_out (x) C^aux");
    }
    if (w.sigma.rows() != dim_in * w.aux_dim || w.sigma.cols() != w.sigma.rows()) {
        throw DimensionError("witness: sigma must act on H_in (x) C^aux");
    }
    if (hermitian_defect(w.mu) > tol.eq_tol) {
        throw NumericError("witness: mu is not Hermitian");
    }
    const Eigensystem mu_eig = hermitian_eig(hermitize(w.mu), tol);
    if (mu_eig.values(mu_eig.values.size() - 1) < -tol.eq_tol ||
        mu_eig.values(0) > 1.0 + tol.eq_tol) {
        throw NumericError("witness: mu violates 0 <= mu <= 1");
    }
    if (hermitian_defect(w.sigma) > tol.eq_tol || !is_psd(w.sigma, tol)) {
        throw NumericError("witness: sigma is not positive semidefinite");
    }
    if (std::abs(w.sigma.trace().real() - 1.0) > tol.eq_tol ||
        std::abs(w.sigma.trace().imag()) > tol.eq_tol) {
        throw NumericError("witness: sigma is not normalized");
    }
}

// tr(mu (Phi (x) Id_aux)(sigma)).
inline double witness_value(const Channel& phi, const WitnessPair& w) {
    Matrix out = Matrix::Zero(phi.dim_out() * w.aux_dim, phi.dim_out() * w.aux_dim);
    const Matrix aux_id = identity(w.aux_dim);
    for (const Matrix& k : phi.kraus()) {
        const Matrix ext = tensor_product(k, aux_id);
        out += ext * w.sigma * ext.adjoint();
    }
    return (w.mu * out).trace().real();
}

inline double holevo_helstrom_gap(const Channel& phi1, const Channel& phi2,
                                  const WitnessPair& w,
                                  const ToleranceConfig& tol = {}) {
    if (phi1.dim_in() != phi2.dim_in() || phi1.dim_out() != phi2.dim_out()) {
        throw DimensionError("holevo_helstrom_gap: channel dimensions disagree");
    }
    validate_witness(w, phi1.dim_in(), phi1.dim_out(), tol);
    return witness_value(phi1, w) - witness_value(phi2, w);
}

// ---------------------------------------------------------------------------
// Witness constructions from a decomposition
// ---------------------------------------------------------------------------

// p = 1 family: sigma is the uniform mixture over blocks k and diagonal
// coordinates nu of P_{k,nu} (x) P_{k,nu} (each normalized), with
// P_{k,nu} = e^{(k)}_{nu nu} the rank-m_k diagonal matrix unit; mu is the
// matching unnormalized projector sum. Evaluates to 1 on the channel itself.
inline WitnessPair witness_p1(const IdempotentDecomposition& dec) {
    const Index n = dec.total_dim();
    const double norm1 = static_cast<double>(
        std::accumulate(dec.shape.entries.begin(), dec.shape.entries.end(), Index{0}));
    WitnessPair w;
    w.aux_dim = n;
    w.mu = Matrix::Zero(n * n, n * n);
    w.sigma = Matrix::Zero(n * n, n * n);
    for (std::size_t k = 0; k < dec.shape.entries.size(); ++k) {
        const double m = static_cast<double>(dec.multiplicities[k]);
        for (Index nu = 0; nu < dec.shape.entries[k]; ++nu) {
            const Matrix& p = dec.matrix_units[k][nu][nu];
            w.mu += tensor_product(p, p);
            w.sigma += tensor_product(p / m, p / m) / norm1;
        }
    }
    return w;
}

// p = inf family: maximally entangled pairing of the largest block's
// preserved factor with a d-dimensional reference. sigma couples the lifted
// matrix units e^{(k_inf)}_{nu eta} to |nu><eta|; mu is the maximally
// entangled projector on the block's segment of the pinched output space
// C^S, S = sum_k d_k. Ties for the largest block resolve to the first block
// of the non-increasing shape.
inline WitnessPair witness_pinf(const IdempotentDecomposition& dec) {
    const Index n = dec.total_dim();
    const Index d = dec.shape.entries.front();
    const double m = static_cast<double>(dec.multiplicities.front());
    Index s_total = 0;
    for (Index dk : dec.shape.entries) s_total += dk;

    WitnessPair w;
    w.aux_dim = d;
    w.sigma = Matrix::Zero(n * d, n * d);
    for (Index nu = 0; nu < d; ++nu) {
        for (Index eta = 0; eta < d; ++eta) {
            Matrix ref = Matrix::Zero(d, d);
            ref(nu, eta) = 1;
            w.sigma += tensor_product(dec.matrix_units[0][nu][eta] / m, ref);
        }
    }
    w.sigma /= static_cast<double>(d);

    // The largest block occupies the leading segment of C^S.
    Vector omega = Vector::Zero(s_total * d);
    for (Index nu = 0; nu < d; ++nu) {
        omega(nu * d + nu) = 1.0 / std::sqrt(static_cast<double>(d));
    }
    w.mu = omega * omega.adjoint();
    return w;
}

// ---------------------------------------------------------------------------
// Pinching factorization Fhat = F2 . P . F1
// ---------------------------------------------------------------------------

struct PinchingFactorization {
    Channel g1;     // block partial traces into C^S, S = sum_k d_k
    Channel pinch;  // coordinate-block pinching on C^S
    Channel g2;     // re-tensors each block with its state rho_k
};

inline PinchingFactorization pinching_factorize(const IdempotentDecomposition& dec,
                                                const ToleranceConfig& tol = {}) {
    const Index n = dec.total_dim();
    const Matrix& u = dec.basis_change;
    const std::size_t nblocks = dec.shape.entries.size();
    Index s_total = 0;
    for (Index dk : dec.shape.entries) s_total += dk;

    std::vector<Index> in_off(nblocks, 0), out_off(nblocks, 0);
    for (std::size_t k = 1; k < nblocks; ++k) {
        in_off[k] = in_off[k - 1] +
                    dec.shape.entries[k - 1] * dec.multiplicities[k - 1];
        out_off[k] = out_off[k - 1] + dec.shape.entries[k - 1];
    }

    // F1: Kraus A_{k,j} map canonical coordinates (nu, j) of block k to the
    // coordinate out_off[k] + nu of C^S.
    std::vector<Matrix> a_kraus;
    for (std::size_t k = 0; k < nblocks; ++k) {
        const Index dk = dec.shape.entries[k];
        const Index mk = dec.multiplicities[k];
        for (Index j = 0; j < mk; ++j) {
            Matrix a = Matrix::Zero(s_total, n);
            for (Index nu = 0; nu < dk; ++nu) {
                a.row(out_off[k] + nu) = u.col(in_off[k] + nu * mk + j).adjoint();
            }
            a_kraus.push_back(std::move(a));
        }
    }

    // P: pinching by the segment projectors of C^S.
    std::vector<Matrix> p_kraus;
    for (std::size_t k = 0; k < nblocks; ++k) {
        Matrix q = Matrix::Zero(s_total, s_total);
        for (Index nu = 0; nu < dec.shape.entries[k]; ++nu) {
            q(out_off[k] + nu, out_off[k] + nu) = 1;
        }
        p_kraus.push_back(std::move(q));
    }

    // F2: Kraus B_{k,a} re-embed segment k and tensor with sqrt(s_a)|chi_a>.
    std::vector<Matrix> b_kraus;
    for (std::size_t k = 0; k < nblocks; ++k) {
        const Index dk = dec.shape.entries[k];
        const Index mk = dec.multiplicities[k];
        const Eigensystem rho_eig = hermitian_eig(dec.block_states[k], tol);
        for (Index a = 0; a < mk; ++a) {
            if (rho_eig.values(a) <= 0) continue;
            const double s = std::sqrt(rho_eig.values(a));
            Matrix b = Matrix::Zero(n, s_total);
            for (Index nu = 0; nu < dk; ++nu) {
                for (Index r = 0; r < mk; ++r) {
                    b.col(out_off[k] + nu) +=
                        s * rho_eig.vectors(r, a) * u.col(in_off[k] + nu * mk + r);
                }
            }
            b_kraus.push_back(std::move(b));
        }
    }

    return PinchingFactorization{Channel(n, s_total, std::move(a_kraus)),
                                 Channel(s_total, s_total, std::move(p_kraus)),
                                 Channel(s_total, n, std::move(b_kraus))};
}

// ---------------------------------------------------------------------------
// Converse certificates for emulation attempts
// ---------------------------------------------------------------------------

struct ConverseCertificate {
    double gap_p1 = 0;
    double gap_pinf = 0;
    double theoretical_floor = 0;        // 1 - min_p of the shape-norm ratio
    double certified_lower_bound = 0;    // max of the two gaps
};

struct CertificateOptions {
    ToleranceConfig tol;
    std::uint64_t seed = kDefaultSeed;
};

// Evaluates both witnesses against the attempt D . G^n . E. Conversion
// channels transport the attempt to the reduced space of F^k first; both
// steps only post/pre-process, so each gap still lower-bounds half the
// diamond distance of the unreduced pair.
inline ConverseCertificate converse_certificate(const Channel& f, const Channel& g,
                                                const Channel& encoder,
                                                const Channel& decoder, int k, int n,
                                                const CertificateOptions& opts = {}) {
    if (k < 1 || n < 1) throw DimensionError("converse_certificate: k, n must be >= 1");
    const ToleranceConfig& tol = opts.tol;

    const ReducedChannel rc_f = reduce(f, tol);
    const ReducedChannel rc_g = reduce(g, tol);
    const Channel fk_hat = tensor_power(rc_f.reduced, k);
    const ReducedChannel rc_fk = reduce(fk_hat, tol);
    const IdempotentDecomposition dec_f =
        decompose(rc_fk, fixed_point_algebra(rc_fk, tol), tol, opts.seed);

    const Channel gn = tensor_power(g, n);
    Index fk_dim = 1;
    for (int i = 0; i < k; ++i) fk_dim *= f.dim_in();
    if (encoder.dim_in() != fk_dim || encoder.dim_out() != gn.dim_in() ||
        decoder.dim_in() != gn.dim_out() || decoder.dim_out() != fk_dim) {
        throw DimensionError("converse_certificate: encoder/decoder dims do not match");
    }

    const ConversionChannels conv_f = conversion_channels(rc_f);
    const Channel e_hat_k = tensor_power(conv_f.e_hat, k);
    const Channel d_hat_k = tensor_power(conv_f.d_hat, k);
    const Channel attempt_reduced = compress(
        compose(e_hat_k, compose(decoder, compose(gn, compose(encoder, d_hat_k)))),
        tol);

    ConverseCertificate cert;
    const WitnessPair w1 = witness_p1(dec_f);
    cert.gap_p1 = holevo_helstrom_gap(fk_hat, attempt_reduced, w1, tol);

    const PinchingFactorization pf = pinching_factorize(dec_f, tol);
    const WitnessPair winf = witness_pinf(dec_f);
    cert.gap_pinf = holevo_helstrom_gap(compose(pf.g1, fk_hat),
                                        compose(pf.g1, attempt_reduced), winf, tol);

    const ShapeVector lam_f = dec_f.shape;
    const Channel gn_hat = tensor_power(rc_g.reduced, n);
    const ReducedChannel rc_gn = reduce(gn_hat, tol);
    const ShapeVector lam_g =
        decompose(rc_gn, fixed_point_algebra(rc_gn, tol), tol, opts.seed + 1).shape;
    cert.theoretical_floor = converse_error_floor(lam_f, lam_g);
    cert.certified_lower_bound = std::max(cert.gap_p1, cert.gap_pinf);
    return cert;
}

}  // namespace idem
