// Quantum channels as Kraus-operator lists, with Choi matrices,
// superoperator matrices, composition/tensoring, idempotence tests, and the
// canonical block-idempotent construction
//
//     F(x) = sum_k tr_{k,2}(P_k x P_k) (x) rho_k           (on its support)
//
// that realizes an arbitrary prescribed fixed-point block structure.
//
// Choi convention: J[(i,k),(j,l)] = <k| Phi(|i><j|) |l>, with the composite
// row index i*dim_out + k. Equality of channels is equality of Choi matrices.

#pragma once

#include "idem/core.hpp"

#include <memory>
#include <mutex>
#include <optional>

namespace idem {

// ---------------------------------------------------------------------------
// Channel
// ---------------------------------------------------------------------------

class Channel {
public:
    Channel() = default;
    Channel(Index dim_in, Index dim_out, std::vector<Matrix> kraus)
        : dim_in_(dim_in), dim_out_(dim_out), kraus_(std::move(kraus)) {
        for (const Matrix& k : kraus_) {
            if (k.rows() != dim_out_ || k.cols() != dim_in_) {
                throw DimensionError("Channel: Kraus operator has shape " +
                                     std::to_string(k.rows()) + "x" +
                                     std::to_string(k.cols()) + ", expected " +
                                     std::to_string(dim_out_) + "x" +
                                     std::to_string(dim_in_));
            }
        }
    }

    Index dim_in() const { return dim_in_; }
    Index dim_out() const { return dim_out_; }
    const std::vector<Matrix>& kraus() const { return kraus_; }

    Matrix apply(const Matrix& x) const {
        if (x.rows() != dim_in_ || x.cols() != dim_in_) {
            throw DimensionError("Channel::apply: operand dimension " +
                                 std::to_string(x.rows()) + " != dim_in " +
                                 std::to_string(dim_in_));
        }
        Matrix out = Matrix::Zero(dim_out_, dim_out_);
        for (const Matrix& k : kraus_) out += k * x * k.adjoint();
        return out;
    }

    // Heisenberg-picture adjoint: y -> sum K* y K (unital when TP).
    Matrix adjoint_apply(const Matrix& y) const {
        if (y.rows() != dim_out_ || y.cols() != dim_out_) {
            throw DimensionError("Channel::adjoint_apply: operand dimension " +
                                 std::to_string(y.rows()) + " != dim_out " +
                                 std::to_string(dim_out_));
        }
        Matrix out = Matrix::Zero(dim_in_, dim_in_);
        for (const Matrix& k : kraus_) out += k.adjoint() * y * k;
        return out;
    }

    // Choi matrix, computed once and shared between copies.
    const Matrix& choi() const {
        std::call_once(cache_->flag, [this] { cache_->value = compute_choi(); });
        return cache_->value;
    }

private:
    Matrix compute_choi() const {
        Matrix j = Matrix::Zero(dim_in_ * dim_out_, dim_in_ * dim_out_);
        for (const Matrix& k : kraus_) {
            // vec_(i*dout+k)(K) = K(k,i) is exactly the column-major layout.
            const Vector v = vec(k);
            j.noalias() += v * v.adjoint();
        }
        return j;
    }

    struct ChoiCache {
        std::once_flag flag;
        Matrix value;
    };

    Index dim_in_ = 0;
    Index dim_out_ = 0;
    std::vector<Matrix> kraus_;
    std::shared_ptr<ChoiCache> cache_ = std::make_shared<ChoiCache>();
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct ChannelCheck {
    double tp_residual = 0;       // ||sum K*K - I||_F
    double cp_min_eigenvalue = 0; // least eigenvalue of the Choi matrix
    bool ok = false;
};

inline ChannelCheck check_channel(const Channel& c, const ToleranceConfig& tol) {
    ChannelCheck out;
    Matrix s = Matrix::Zero(c.dim_in(), c.dim_in());
    for (const Matrix& k : c.kraus()) s += k.adjoint() * k;
    out.tp_residual = (s - identity(c.dim_in())).norm();
    const Eigensystem es = hermitian_eig(hermitize(c.choi()), tol);
    out.cp_min_eigenvalue = es.values.size() > 0 ? es.values(es.values.size() - 1) : 0.0;
    const double scale = es.values.size() > 0 ? std::max(1.0, es.values(0)) : 1.0;
    out.ok = out.tp_residual <= tol.eq_tol && out.cp_min_eigenvalue >= -tol.eq_tol * scale;
    return out;
}

inline void require_channel(const Channel& c, const ToleranceConfig& tol,
                            const std::string& what) {
    const ChannelCheck chk = check_channel(c, tol);
    if (!chk.ok) {
        throw NumericError(what + ": not CPTP (trace-preservation residual " +
                           std::to_string(chk.tp_residual) + ", least Choi eigenvalue " +
                           std::to_string(chk.cp_min_eigenvalue) + ")");
    }
}

// ---------------------------------------------------------------------------
// Algebraic combinators
// ---------------------------------------------------------------------------

inline Channel compose(const Channel& c2, const Channel& c1) {
    if (c1.dim_out() != c2.dim_in()) {
        throw DimensionError("compose: inner dimensions disagree (" +
                             std::to_string(c1.dim_out()) + " vs " +
                             std::to_string(c2.dim_in()) + ")");
    }
    std::vector<Matrix> ks;
    ks.reserve(c1.kraus().size() * c2.kraus().size());
    for (const Matrix& b : c2.kraus())
        for (const Matrix& a : c1.kraus()) ks.push_back(b * a);
    return Channel(c1.dim_in(), c2.dim_out(), std::move(ks));
}

inline Channel tensor(const Channel& c1, const Channel& c2) {
    std::vector<Matrix> ks;
    ks.reserve(c1.kraus().size() * c2.kraus().size());
    for (const Matrix& a : c1.kraus())
        for (const Matrix& b : c2.kraus()) ks.push_back(tensor_product(a, b));
    return Channel(c1.dim_in() * c2.dim_in(), c1.dim_out() * c2.dim_out(),
                   std::move(ks));
}

inline Channel tensor_power(const Channel& c, int n) {
    if (n < 1) throw DimensionError("tensor_power: exponent must be >= 1");
    Channel out = c;
    for (int i = 1; i < n; ++i) out = tensor(out, c);
    return out;
}

// Superoperator matrix M with vec(Phi(x)) = M vec(x); its conjugate transpose
// is the superoperator of the Hilbert-Schmidt adjoint.
inline Matrix superoperator(const Channel& c) {
    Matrix m = Matrix::Zero(c.dim_out() * c.dim_out(), c.dim_in() * c.dim_in());
    for (const Matrix& k : c.kraus()) {
        m += tensor_product(k.conjugate(), k);
    }
    return m;
}

// Choi matrix of the map represented by a superoperator (dims as stated).
inline Matrix choi_from_superoperator(const Matrix& m, Index din, Index dout) {
    if (m.rows() != dout * dout || m.cols() != din * din) {
        throw DimensionError("choi_from_superoperator: matrix shape mismatch");
    }
    Matrix j(din * dout, din * dout);
    for (Index i = 0; i < din; ++i)
        for (Index jcol = 0; jcol < din; ++jcol)
            for (Index k = 0; k < dout; ++k)
                for (Index l = 0; l < dout; ++l) {
                    // Phi(|i><j|) = unvec(M . vec(|i><j|)); vec index of |i><j|
                    // is j*din + i, of the output entry (k,l) is l*dout + k.
                    j(i * dout + k, jcol * dout + l) = m(l * dout + k, jcol * din + i);
                }
    return j;
}

// Kraus operators from a (numerically) PSD Choi matrix; eigenvalues below
// rank_tol * max are dropped.
inline std::vector<Matrix> kraus_from_choi(const Matrix& j, Index din, Index dout,
                                           const ToleranceConfig& tol) {
    if (j.rows() != din * dout) {
        throw DimensionError("kraus_from_choi: Choi dimension mismatch");
    }
    const Eigensystem es = hermitian_eig(hermitize(j), tol);
    const double top = es.values.size() > 0 ? std::max(es.values(0), 0.0) : 0.0;
    const double cut = top * tol.rank_tol;
    std::vector<Matrix> ks;
    for (Index t = 0; t < es.values.size(); ++t) {
        if (es.values(t) <= cut) continue;
        const double w = std::sqrt(es.values(t));
        Matrix k(dout, din);
        for (Index i = 0; i < din; ++i)
            for (Index r = 0; r < dout; ++r) k(r, i) = w * es.vectors(i * dout + r, t);
        ks.push_back(std::move(k));
    }
    if (ks.empty()) ks.push_back(Matrix::Zero(dout, din));
    return ks;
}

inline Channel channel_from_choi(const Matrix& j, Index din, Index dout,
                                 const ToleranceConfig& tol) {
    return Channel(din, dout, kraus_from_choi(j, din, dout, tol));
}

inline Channel channel_from_superoperator(const Matrix& m, Index din, Index dout,
                                          const ToleranceConfig& tol) {
    return channel_from_choi(choi_from_superoperator(m, din, dout), din, dout, tol);
}

// Drops redundant Kraus operators by re-extracting them from the Choi matrix.
inline Channel compress(const Channel& c, const ToleranceConfig& tol) {
    return channel_from_choi(c.choi(), c.dim_in(), c.dim_out(), tol);
}

// ---------------------------------------------------------------------------
// Equality and idempotence via Choi matrices
// ---------------------------------------------------------------------------

struct EqualityResult {
    bool equal = false;
    double residual = 0;  // Frobenius distance between Choi matrices
};

inline EqualityResult channels_equal(const Channel& c1, const Channel& c2,
                                     const ToleranceConfig& tol) {
    if (c1.dim_in() != c2.dim_in() || c1.dim_out() != c2.dim_out()) {
        throw DimensionError("channels_equal: dimension mismatch");
    }
    EqualityResult r;
    r.residual = (c1.choi() - c2.choi()).norm();
    r.equal = r.residual <= tol.eq_tol;
    return r;
}

inline EqualityResult is_idempotent(const Channel& c, const ToleranceConfig& tol) {
    if (c.dim_in() != c.dim_out()) {
        throw DimensionError("is_idempotent: channel must be an endomorphism");
    }
    return channels_equal(c, compose(c, c), tol);
}

// ---------------------------------------------------------------------------
// Standard channels
// ---------------------------------------------------------------------------

inline Channel identity_channel(Index d) {
    return Channel(d, d, {identity(d)});
}

// Complete dephasing: x -> sum_k |k><k| x |k><k|.
inline Channel dephasing_channel(Index d) {
    std::vector<Matrix> ks;
    ks.reserve(d);
    for (Index k = 0; k < d; ++k) {
        Matrix p = Matrix::Zero(d, d);
        p(k, k) = 1;
        ks.push_back(std::move(p));
    }
    return Channel(d, d, std::move(ks));
}

// Replacer: x -> tr(x) * rho for a fixed density operator rho.
inline Channel replacer_channel(Index d, const Matrix& rho,
                                const ToleranceConfig& tol = {}) {
    if (rho.rows() != d || rho.cols() != d) {
        throw DimensionError("replacer_channel: state dimension mismatch");
    }
    const Eigensystem es = hermitian_eig(rho, tol);
    std::vector<Matrix> ks;
    for (Index a = 0; a < es.values.size(); ++a) {
        if (es.values(a) <= 0) continue;
        const double w = std::sqrt(es.values(a));
        for (Index b = 0; b < d; ++b) {
            Matrix k = Matrix::Zero(d, d);
            k.col(b) = w * es.vectors.col(a);
            ks.push_back(std::move(k));
        }
    }
    return Channel(d, d, std::move(ks));
}

// ---------------------------------------------------------------------------
// Block-idempotent construction
// ---------------------------------------------------------------------------

struct Block {
    Index d = 1;   // dimension of the preserved factor H_{k,1}
    Index m = 1;   // dimension of the traced factor H_{k,2}
    Matrix rho;    // density operator on the traced factor (m x m)
};

struct BlockSpec {
    std::vector<Block> blocks;
    Index ambient_dim = 0;                       // >= sum d_k * m_k
    std::optional<Matrix> embedding_isometry;    // ambient x (sum d_k m_k)

    Index support_dim() const {
        Index n = 0;
        for (const Block& b : blocks) n += b.d * b.m;
        return n;
    }

    void validate(const ToleranceConfig& tol) const {
        if (blocks.empty()) throw DimensionError("BlockSpec: no blocks");
        for (const Block& b : blocks) {
            if (b.d < 1 || b.m < 1) throw DimensionError("BlockSpec: block dims must be >= 1");
            if (b.rho.rows() != b.m || b.rho.cols() != b.m) {
                throw DimensionError("BlockSpec: rho_k dimension != m_k");
            }
            if (!is_psd(b.rho, tol) || std::abs(b.rho.trace().real() - 1.0) > tol.eq_tol ||
                std::abs(b.rho.trace().imag()) > tol.eq_tol) {
                throw NumericError("BlockSpec: rho_k is not a density operator");
            }
        }
        if (ambient_dim < support_dim()) {
            throw DimensionError("BlockSpec: ambient_dim smaller than sum d_k m_k");
        }
        if (embedding_isometry) {
            if (embedding_isometry->rows() != ambient_dim ||
                embedding_isometry->cols() != support_dim()) {
                throw DimensionError("BlockSpec: embedding isometry has wrong shape");
            }
        }
    }
};

// Builds the channel F(x) = W Fhat(W* x W) W* + tr((1-e) x) W sigma_1 W* where
// Fhat is the canonical block form sum_k tr_{k,2}(P_k x P_k) (x) rho_k on the
// support C^{n0}, W embeds the support into the ambient space (Haar-random
// from the seed unless supplied), e = W W*, and sigma_1 is the maximally mixed
// first factor tensored with rho_1 in block 1. Both pieces fix the range of
// Fhat, which makes the assembled map idempotent.
inline Channel make_block_idempotent(const BlockSpec& spec,
                                     std::uint64_t seed = kDefaultSeed,
                                     const ToleranceConfig& tol = {}) {
    spec.validate(tol);
    const Index n0 = spec.support_dim();
    const Index amb = spec.ambient_dim;

    Matrix w;
    if (spec.embedding_isometry) {
        w = *spec.embedding_isometry;
        if ((w.adjoint() * w - identity(n0)).norm() > tol.eq_tol) {
            throw NumericError("make_block_idempotent: embedding is not an isometry");
        }
    } else if (amb == n0) {
        w = identity(n0);
    } else {
        Rng rng(seed);
        w = rng.haar_isometry(amb, n0);
    }

    std::vector<Matrix> ks;

    // Kraus operators of the canonical form, block by block:
    // K_{k,j,a} = sqrt(s_a) (1_{d_k} (x) |chi_a><j|) inside block k.
    Index off = 0;
    for (const Block& blk : spec.blocks) {
        const Index sz = blk.d * blk.m;
        const Eigensystem rho_eig = hermitian_eig(blk.rho, tol);
        for (Index a = 0; a < blk.m; ++a) {
            const double s = rho_eig.values(a);
            if (s <= 0) continue;
            const Vector chi = rho_eig.vectors.col(a);
            for (Index j = 0; j < blk.m; ++j) {
                Matrix core = Matrix::Zero(sz, sz);
                // 1_{d} (x) |chi><j| in the block's row-major (u, j) layout.
                for (Index u = 0; u < blk.d; ++u) {
                    for (Index r = 0; r < blk.m; ++r) {
                        core(u * blk.m + r, u * blk.m + j) = std::sqrt(s) * chi(r);
                    }
                }
                Matrix k = Matrix::Zero(n0, n0);
                k.block(off, off, sz, sz) = core;
                ks.push_back(w * k * w.adjoint());
            }
        }
        off += sz;
    }

    // Complement handling: measure {e, 1-e}; route the 1-e outcome to the
    // fixed range state sigma_1 = (1_{d_1}/d_1) (x) rho_1 in block 1.
    if (amb > n0) {
        const Block& b1 = spec.blocks[0];
        Matrix sigma1 = Matrix::Zero(n0, n0);
        sigma1.block(0, 0, b1.d * b1.m, b1.d * b1.m) =
            tensor_product(identity(b1.d) / static_cast<double>(b1.d), b1.rho);
        const Eigensystem sig_eig = hermitian_eig(sigma1, tol);

        // Orthonormal basis of the complement of range(W).
        Eigen::HouseholderQR<Matrix> qr(w);
        const Matrix full_q = qr.householderQ() * identity(amb);
        const Matrix w_perp = full_q.rightCols(amb - n0);

        for (Index c = 0; c < sig_eig.values.size(); ++c) {
            const double t = sig_eig.values(c);
            if (t <= 0) continue;
            const Vector phi = w * sig_eig.vectors.col(c);
            for (Index b = 0; b < amb - n0; ++b) {
                ks.push_back(std::sqrt(t) * phi * w_perp.col(b).adjoint());
            }
        }
    }

    return Channel(amb, amb, std::move(ks));
}

// ---------------------------------------------------------------------------
// Random channels
// ---------------------------------------------------------------------------

// CPTP map with `rank` Kraus operators, drawn by orthonormalizing a stacked
// (rank*dim_out) x dim_in Gaussian matrix; trace preservation is exact by
// construction (the stacked Kraus column block is an isometry).
inline Channel random_cptp(Index dim_in, Index dim_out, Index rank, Rng& rng) {
    if (rank < 1 || rank * dim_out < dim_in) {
        throw DimensionError("random_cptp: need rank * dim_out >= dim_in >= 1");
    }
    const Matrix v = rng.haar_isometry(rank * dim_out, dim_in);
    std::vector<Matrix> ks;
    ks.reserve(rank);
    for (Index r = 0; r < rank; ++r) ks.push_back(v.middleRows(r * dim_out, dim_out));
    return Channel(dim_in, dim_out, std::move(ks));
}

inline Channel random_cptp(Index dim_in, Index dim_out, Index rank,
                           std::uint64_t seed = kDefaultSeed) {
    Rng rng(seed);
    return random_cptp(dim_in, dim_out, rank, rng);
}

}  // namespace idem
