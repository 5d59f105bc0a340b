// Fixed-point structure of idempotent channels.
//
// For an idempotent CPTP map F, the support H_0 of F(1) carries a reduced
// idempotent channel Fhat(x) = V* F(V x V*) V whose adjoint has range equal
// to a *-algebra A = (+)_k L(H_{k,1}) (x) 1_{m_k}. This file computes that
// algebra, splits it into its Wedderburn blocks (central projections, matrix
// units, a basis-change unitary), extracts the block states rho_k with
// Fhat(x) = sum_k tr_{k,2}(P_k x P_k) (x) rho_k, and returns the shape vector
// (d_k) sorted non-increasingly, together with the four conversion channels
// relating F and Fhat.

#pragma once

#include "idem/channel.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace idem {

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

struct ReducedChannel {
    Channel original;   // the idempotent map on the ambient space
    SupportData support;  // support data of original(1)
    Channel reduced;    // idempotent map on C^{rank}
};

struct AlgebraBasis {
    Index ambient_dim = 0;       // operators act on C^{ambient_dim}
    std::vector<Matrix> basis;   // Hilbert-Schmidt orthonormal
    Index dim = 0;               // = basis.size()
};

struct ShapeVector {
    std::vector<Index> entries;  // positive, non-increasing

    Index block_count() const { return static_cast<Index>(entries.size()); }
    bool operator==(const ShapeVector& o) const { return entries == o.entries; }
};

inline std::string to_string(const ShapeVector& s) {
    std::string out = "(";
    for (std::size_t i = 0; i < s.entries.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s.entries[i]);
    }
    return out + ")";
}

struct IdempotentDecomposition {
    ShapeVector shape;                  // d_k, non-increasing
    std::vector<Index> multiplicities;  // m_k aligned with shape
    std::vector<Matrix> block_states;   // rho_k, m_k x m_k density operators
    Matrix basis_change;                // unitary U on H_0; U* A U = (+) M_{d_k} (x) 1_{m_k}
    std::vector<Matrix> central_projections;          // p_k on H_0
    std::vector<std::vector<std::vector<Matrix>>> matrix_units;  // [k][u][v] on H_0
    double residual = 0;                // Choi distance between Fhat and its rebuilt block form

    Index total_dim() const {
        Index n = 0;
        for (std::size_t k = 0; k < shape.entries.size(); ++k)
            n += shape.entries[k] * multiplicities[k];
        return n;
    }
};

// Four CPTP maps with F = d_hat . Fhat . e_hat and Fhat = d . F . e.
struct ConversionChannels {
    Channel e_hat;  // L(H) -> L(H_0), x -> V* F(x) V
    Channel d_hat;  // L(H_0) -> L(H), x -> V x V*
    Channel e;      // = d_hat
    Channel d;      // = e_hat
};

// ---------------------------------------------------------------------------
// Reduction to the support of F(1)
// ---------------------------------------------------------------------------

inline ReducedChannel reduce(const Channel& c, const ToleranceConfig& tol = {}) {
    if (c.dim_in() != c.dim_out()) {
        throw DimensionError("reduce: channel must be an endomorphism");
    }
    const EqualityResult idem_check = is_idempotent(c, tol);
    if (!idem_check.equal) {
        throw NumericError("reduce: channel is not idempotent (Choi residual " +
                           std::to_string(idem_check.residual) + ")");
    }
    SupportData supp = support_of(hermitize(c.apply(identity(c.dim_in()))), tol);
    if (supp.rank == c.dim_in()) {
        // Full support: skip the eigenbasis rotation and reduce by the identity.
        supp.isometry = identity(c.dim_in());
        supp.projector = identity(c.dim_in());
    }
    const Matrix& v = supp.isometry;

    // Every Kraus operator K satisfies K K* <= F(1), so range(K) lies in the
    // support and {V* K V} is again trace preserving.
    std::vector<Matrix> ks;
    ks.reserve(c.kraus().size());
    for (const Matrix& k : c.kraus()) ks.push_back(v.adjoint() * k * v);
    ReducedChannel rc{c, supp, Channel(supp.rank, supp.rank, std::move(ks))};

    // The reduced map must be idempotent with a full-rank fixed point.
    const EqualityResult red_idem = is_idempotent(rc.reduced, tol);
    if (!red_idem.equal) {
        throw NumericError("reduce: reduced channel lost idempotence (residual " +
                           std::to_string(red_idem.residual) + ")");
    }
    const Matrix fixed = hermitize(
        rc.reduced.apply(v.adjoint() * c.apply(identity(c.dim_in())) * v));
    if (support_of(fixed, tol).rank != supp.rank) {
        throw NumericError("reduce: reduced channel has no full-rank fixed point");
    }
    return rc;
}

// ---------------------------------------------------------------------------
// Fixed-point algebra of the adjoint reduced channel
// ---------------------------------------------------------------------------

// Range of Fhat* as an operator system: the column space of the superoperator
// matrix of Fhat* (the conjugate transpose of the superoperator of Fhat).
// Since Fhat* is idempotent this equals its fixed-point space, and because
// Fhat has a full-rank fixed point it is a *-algebra containing the unit.
inline AlgebraBasis fixed_point_algebra(const ReducedChannel& rc,
                                        const ToleranceConfig& tol = {}) {
    const Index n = rc.reduced.dim_in();
    const Matrix m_star = superoperator(rc.reduced).adjoint();

    Eigen::BDCSVD<Matrix> svd(m_star, Eigen::ComputeThinU);
    const RealVector sv = svd.singularValues();
    const double cut = (sv.size() > 0 ? sv(0) : 0.0) * tol.rank_tol;

    AlgebraBasis alg;
    alg.ambient_dim = n;
    for (Index t = 0; t < sv.size(); ++t) {
        if (sv(t) <= cut) break;
        alg.basis.push_back(unvec(svd.matrixU().col(t), n, n));
    }
    alg.dim = static_cast<Index>(alg.basis.size());

    // Structural sanity: *-closure, multiplicative closure, and the unit.
    const double unit_dist = distance_to_span(identity(n), alg.basis);
    if (unit_dist > tol.eq_tol * std::sqrt(static_cast<double>(n))) {
        throw NumericError("fixed_point_algebra: identity not in the range (distance " +
                           std::to_string(unit_dist) + ")");
    }
    for (const Matrix& b : alg.basis) {
        const double adj_dist = distance_to_span(b.adjoint(), alg.basis);
        if (adj_dist > tol.eq_tol) {
            throw NumericError("fixed_point_algebra: range not closed under adjoints "
                               "(distance " + std::to_string(adj_dist) + ")");
        }
    }
    for (const Matrix& a : alg.basis) {
        for (const Matrix& b : alg.basis) {
            const Matrix ab = a * b;
            const double prod_dist = distance_to_span(ab, alg.basis);
            if (prod_dist > tol.eq_tol * std::max(1.0, ab.norm())) {
                throw NumericError("fixed_point_algebra: range not closed under products "
                                   "(distance " + std::to_string(prod_dist) +
                                   "); idempotence may be numerically broken");
            }
        }
    }
    return alg;
}

// ---------------------------------------------------------------------------
// Wedderburn decomposition of the fixed-point algebra
// ---------------------------------------------------------------------------

namespace detail {

// Coefficient-space basis of the center: all z = sum_j c_j b_j commuting with
// every basis element. Solved via the Gram matrix of the commutation system,
// whose kernel is exactly the center's coefficient space.
inline std::vector<Matrix> center_basis(const AlgebraBasis& alg,
                                        const ToleranceConfig& tol) {
    const Index a = alg.dim;
    const Index n = alg.ambient_dim;
    Matrix gram = Matrix::Zero(a, a);
    Matrix comm_block(n * n, a);
    for (Index i = 0; i < a; ++i) {
        for (Index j = 0; j < a; ++j) {
            comm_block.col(j) = vec(alg.basis[j] * alg.basis[i] - alg.basis[i] * alg.basis[j]);
        }
        gram.noalias() += comm_block.adjoint() * comm_block;
    }
    const Eigensystem es = hermitian_eig(hermitize(gram), tol);
    const double top = es.values.size() > 0 ? std::max(es.values(0), 1.0) : 1.0;
    std::vector<Matrix> center;
    for (Index t = es.values.size() - 1; t >= 0; --t) {
        if (es.values(t) > tol.rank_tol * top) break;
        Matrix z = Matrix::Zero(n, n);
        for (Index j = 0; j < a; ++j) z += es.vectors(j, t) * alg.basis[j];
        center.push_back(std::move(z));
    }
    if (center.empty()) {
        throw NumericError("decompose: empty center (the unit always commutes; "
                           "the algebra basis is numerically inconsistent)");
    }
    return center;
}

// Tests whether p compresses the center to scalars: p z p ~ lambda p for all z.
inline bool is_minimal_central(const Matrix& p, const std::vector<Matrix>& center,
                               const ToleranceConfig& tol) {
    const double tr_p = p.trace().real();
    for (const Matrix& z : center) {
        const Matrix pzp = p * z * p;
        const Complex lambda = pzp.trace() / tr_p;
        if ((pzp - lambda * p).norm() > tol.eq_tol * std::max(1.0, z.norm())) return false;
    }
    return true;
}

struct RawBlock {
    Matrix projector;   // minimal central projection p_k
    Index d = 0;        // block matrix size
    Index m = 0;        // block multiplicity
};

// Splits the identity into minimal central projections by eigen-clustering a
// generic Hermitian central element; redraws when a cluster fails to be a
// minimal central projection inside the algebra.
inline std::vector<Matrix> central_projections(const AlgebraBasis& alg,
                                               const std::vector<Matrix>& center,
                                               const ToleranceConfig& tol, Rng& rng) {
    constexpr int kMaxRedraws = 8;
    for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
        Matrix zeta = Matrix::Zero(alg.ambient_dim, alg.ambient_dim);
        for (const Matrix& z : center) zeta += rng.complex_gaussian() * z;
        zeta = hermitize(zeta);  // stays in the *-closed center

        const std::vector<SpectralCluster> clusters = clustered_spectrum(zeta, tol);
        std::vector<Matrix> projections;
        bool ok = true;
        for (const SpectralCluster& c : clusters) {
            const double span_dist = distance_to_span(c.projector, alg.basis);
            if (span_dist > tol.eq_tol * std::max(1.0, c.projector.norm()) ||
                !is_minimal_central(c.projector, center, tol)) {
                ok = false;
                break;
            }
            projections.push_back(c.projector);
        }
        if (ok && static_cast<Index>(projections.size()) ==
                      static_cast<Index>(center.size())) {
            return projections;
        }
    }
    throw NumericError("decompose: could not separate central projections after 8 "
                       "redraws; consider a looser cluster_tol");
}

// Matrix units of the full matrix algebra compressed to one block. The
// compressed algebra V* p A p V is isomorphic to M_d (x) 1_m; a generic
// Hermitian element has d eigenvalue clusters of multiplicity m (diagonal
// units), and polar decompositions of e_uu b e_11 for generic b supply the
// connecting partial isometries.
inline std::vector<std::vector<Matrix>> block_matrix_units(
    const std::vector<Matrix>& compressed_basis, Index d, Index m,
    const ToleranceConfig& tol, Rng& rng) {
    const Index sz = d * m;
    constexpr int kMaxRedraws = 8;

    for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
        Matrix a = Matrix::Zero(sz, sz);
        for (const Matrix& c : compressed_basis) a += rng.complex_gaussian() * c;
        a = hermitize(a);
        const std::vector<SpectralCluster> clusters = clustered_spectrum(a, tol);
        if (static_cast<Index>(clusters.size()) != d) continue;
        bool uniform = true;
        for (const SpectralCluster& c : clusters) uniform &= (c.multiplicity == m);
        if (!uniform) continue;

        std::vector<Matrix> diag;
        diag.reserve(d);
        for (const SpectralCluster& c : clusters) diag.push_back(c.projector);

        Matrix b = Matrix::Zero(sz, sz);
        for (const Matrix& c : compressed_basis) b += rng.complex_gaussian() * c;

        std::vector<std::vector<Matrix>> units(d, std::vector<Matrix>(d));
        units[0][0] = diag[0];
        bool ok = true;
        for (Index u = 1; u < d; ++u) {
            const Matrix w = diag[u] * b * diag[0];
            Eigen::BDCSVD<Matrix> svd(w, Eigen::ComputeThinU | Eigen::ComputeThinV);
            const RealVector sv = svd.singularValues();
            // In the hidden basis w is a scalar times a partial isometry, so
            // its m leading singular values coincide; an unlucky near-zero
            // scalar would make the polar factor meaningless, hence the floor.
            const double floor_sv = std::sqrt(tol.rank_tol) * std::max(1.0, sv(0));
            if (sv.size() < m || sv(m - 1) <= floor_sv ||
                (sv.size() > m && sv(m) > tol.eq_tol * sv(0))) {
                ok = false;
                break;
            }
            units[u][0] =
                svd.matrixU().leftCols(m) * svd.matrixV().leftCols(m).adjoint();
            units[0][u] = units[u][0].adjoint();
        }
        if (!ok) continue;

        for (Index u = 0; u < d; ++u) {
            for (Index v = 0; v < d; ++v) {
                if (u == 0 || v == 0) continue;
                units[u][v] = (u == v) ? diag[u] : Matrix(units[u][0] * units[0][v]);
            }
            if (u > 0) units[u][u] = diag[u];
        }

        // Verify the partial isometries stitch the diagonal units together.
        double worst = 0;
        for (Index u = 1; u < d; ++u) {
            worst = std::max(worst, (units[u][0].adjoint() * units[u][0] - diag[0]).norm());
            worst = std::max(worst, (units[u][0] * units[u][0].adjoint() - diag[u]).norm());
        }
        if (worst > tol.eq_tol * std::sqrt(static_cast<double>(sz))) continue;
        return units;
    }
    throw NumericError("decompose: matrix-unit construction failed after 8 redraws; "
                       "consider a looser cluster_tol");
}

}  // namespace detail

inline IdempotentDecomposition decompose(const ReducedChannel& rc,
                                         const AlgebraBasis& alg,
                                         const ToleranceConfig& tol = {},
                                         std::uint64_t seed = kDefaultSeed) {
    const Index n = rc.reduced.dim_in();
    if (alg.ambient_dim != n) {
        throw DimensionError("decompose: algebra/channel dimension mismatch");
    }
    Rng rng(seed);

    const std::vector<Matrix> center = detail::center_basis(alg, tol);
    std::vector<Matrix> projections = detail::central_projections(alg, center, tol, rng);

    // Block sizes: dim(p A p) = d^2 and tr(p) = d m, both integral.
    std::vector<detail::RawBlock> blocks;
    for (Matrix& p : projections) {
        detail::RawBlock blk;
        blk.projector = std::move(p);
        std::vector<Matrix> corner;
        corner.reserve(alg.basis.size());
        for (const Matrix& b : alg.basis)
            corner.push_back(blk.projector * b * blk.projector);
        const Index corner_dim =
            static_cast<Index>(orthonormal_span(corner, tol).size());
        const double d_real = std::sqrt(static_cast<double>(corner_dim));
        blk.d = static_cast<Index>(std::llround(d_real));
        if (std::abs(d_real - static_cast<double>(blk.d)) > 1e-4 || blk.d < 1) {
            throw NumericError("decompose: corner dimension " +
                               std::to_string(corner_dim) + " is not a perfect square");
        }
        const double m_real = blk.projector.trace().real() / static_cast<double>(blk.d);
        blk.m = static_cast<Index>(std::llround(m_real));
        if (std::abs(m_real - static_cast<double>(blk.m)) > 1e-4 || blk.m < 1) {
            throw NumericError("decompose: block multiplicity " + std::to_string(m_real) +
                               " is not integral");
        }
        blocks.push_back(std::move(blk));
    }

    // Canonical order: d descending, then m descending, then discovery order.
    std::stable_sort(blocks.begin(), blocks.end(),
                     [](const detail::RawBlock& x, const detail::RawBlock& y) {
                         return x.d != y.d ? x.d > y.d : x.m > y.m;
                     });

    Index total = 0, alg_dim = 0;
    for (const detail::RawBlock& b : blocks) {
        total += b.d * b.m;
        alg_dim += b.d * b.d;
    }
    if (total != n || alg_dim != alg.dim) {
        throw NumericError("decompose: block dimension accounting failed (sum d_k m_k = " +
                           std::to_string(total) + " vs " + std::to_string(n) +
                           ", sum d_k^2 = " + std::to_string(alg_dim) + " vs " +
                           std::to_string(alg.dim) + ")");
    }

    IdempotentDecomposition dec;
    dec.basis_change = Matrix::Zero(n, n);

    // Per block: matrix units in the compression, lifted to H_0, then the
    // basis-change columns f_{u,j} = e_{u1} f_{1,j}.
    Index col_offset = 0;
    for (const detail::RawBlock& blk : blocks) {
        const SupportData psup = support_of(blk.projector, tol);
        const Matrix& vk = psup.isometry;  // n x (d m)
        if (psup.rank != blk.d * blk.m) {
            throw NumericError("decompose: central projection rank mismatch");
        }
        std::vector<Matrix> compressed;
        compressed.reserve(alg.basis.size());
        for (const Matrix& b : alg.basis)
            compressed.push_back(vk.adjoint() * b * vk);
        const std::vector<Matrix> comp_basis = orthonormal_span(compressed, tol);

        const std::vector<std::vector<Matrix>> units =
            detail::block_matrix_units(comp_basis, blk.d, blk.m, tol, rng);

        std::vector<std::vector<Matrix>> lifted(blk.d, std::vector<Matrix>(blk.d));
        for (Index u = 0; u < blk.d; ++u)
            for (Index v = 0; v < blk.d; ++v)
                lifted[u][v] = vk * units[u][v] * vk.adjoint();

        const SupportData e11 = support_of(hermitize(lifted[0][0]), tol);
        if (e11.rank != blk.m) {
            throw NumericError("decompose: diagonal unit rank mismatch");
        }
        for (Index u = 0; u < blk.d; ++u) {
            const Matrix cols = (u == 0) ? e11.isometry
                                         : Matrix(lifted[u][0] * e11.isometry);
            dec.basis_change.block(0, col_offset + u * blk.m, n, blk.m) = cols;
        }
        col_offset += blk.d * blk.m;

        dec.shape.entries.push_back(blk.d);
        dec.multiplicities.push_back(blk.m);
        dec.central_projections.push_back(blk.projector);
        dec.matrix_units.push_back(std::move(lifted));
    }

    const double unitary_defect =
        (dec.basis_change.adjoint() * dec.basis_change - identity(n)).norm();
    if (unitary_defect > tol.eq_tol * std::sqrt(static_cast<double>(n))) {
        throw NumericError("decompose: basis change is not unitary (defect " +
                           std::to_string(unitary_defect) + ")");
    }

    // Block states: push the maximally mixed state of block k through Fhat and
    // trace out the preserved factor.
    const Matrix& u_mat = dec.basis_change;
    Index off = 0;
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        const Index d = dec.shape.entries[k];
        const Index m = dec.multiplicities[k];
        const Index sz = d * m;
        Matrix x = Matrix::Zero(n, n);
        x.block(off, off, sz, sz) =
            Matrix::Identity(sz, sz) / static_cast<double>(sz);
        const Matrix y = u_mat.adjoint() * rc.reduced.apply(u_mat * x * u_mat.adjoint()) * u_mat;
        Matrix rho = hermitize(partial_trace_single(y.block(off, off, sz, sz), d, m, 1));
        rho /= rho.trace().real();
        if (!is_psd(rho, tol)) {
            throw NumericError("decompose: extracted block state is not PSD");
        }
        dec.block_states.push_back(std::move(rho));
        off += sz;
    }

    // Residual: rebuild Fhat from the block data and compare Choi matrices.
    {
        std::vector<Matrix> model_kraus;
        off = 0;
        for (std::size_t k = 0; k < blocks.size(); ++k) {
            const Index d = dec.shape.entries[k];
            const Index m = dec.multiplicities[k];
            const Index sz = d * m;
            const Eigensystem rho_eig = hermitian_eig(dec.block_states[k], tol);
            for (Index a = 0; a < m; ++a) {
                if (rho_eig.values(a) <= 0) continue;
                const double s = std::sqrt(rho_eig.values(a));
                for (Index j = 0; j < m; ++j) {
                    Matrix core = Matrix::Zero(sz, sz);
                    for (Index uu = 0; uu < d; ++uu)
                        for (Index r = 0; r < m; ++r)
                            core(uu * m + r, uu * m + j) = s * rho_eig.vectors(r, a);
                    Matrix kfull = Matrix::Zero(n, n);
                    kfull.block(off, off, sz, sz) = core;
                    model_kraus.push_back(u_mat * kfull * u_mat.adjoint());
                }
            }
            off += sz;
        }
        const Channel model(n, n, std::move(model_kraus));
        dec.residual = (model.choi() - rc.reduced.choi()).norm();
    }

    return dec;
}

// ---------------------------------------------------------------------------
// Shape vector and conversion channels
// ---------------------------------------------------------------------------

inline ShapeVector shape_of(const Channel& c, const ToleranceConfig& tol = {},
                            std::uint64_t seed = kDefaultSeed) {
    const ReducedChannel rc = reduce(c, tol);
    const AlgebraBasis alg = fixed_point_algebra(rc, tol);
    return decompose(rc, alg, tol, seed).shape;
}

// Prop.-style factorizations F = d_hat . Fhat . e_hat and Fhat = e_hat . F . d_hat:
// e_hat(x) = V* F(x) V (Kraus V* K_i), d_hat(x) = V x V* (Kraus V).
inline ConversionChannels conversion_channels(const ReducedChannel& rc) {
    const Matrix& v = rc.support.isometry;
    std::vector<Matrix> e_kraus;
    e_kraus.reserve(rc.original.kraus().size());
    for (const Matrix& k : rc.original.kraus()) e_kraus.push_back(v.adjoint() * k);
    Channel e_hat(rc.original.dim_in(), rc.support.rank, std::move(e_kraus));
    Channel d_hat(rc.support.rank, rc.original.dim_in(), {v});
    ConversionChannels out{e_hat, d_hat, d_hat, e_hat};
    return out;
}

}  // namespace idem
