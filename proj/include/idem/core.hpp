// Dense complex linear-algebra primitives shared by every other header:
// tensor products, block partial traces, tolerance-controlled support
// projectors, spectral clustering, Schatten norms, and seeded randomness.
//
// Conventions used throughout the library:
//   * matrices are Eigen::MatrixXcd (column-major, double precision);
//   * vec(x) is the column-major flattening, so vec(AXB) = (B^T ⊗ A) vec(X)
//     and the Hilbert-Schmidt inner product is tr(A†B) = vec(A)† vec(B);
//   * spectral routines order eigenvalues descending, ties by original index.

#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace idem {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

// Base class for every failure the library raises deliberately.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shape/dimension bookkeeping violations (bad inputs, mismatched operands).
struct DimensionError : Error {
    using Error::Error;
};

// Numerical contract violations (non-Hermitian "PSD" input, broken
// idempotence, ambiguous eigenvalue clustering, ...).
struct NumericError : Error {
    using Error::Error;
};

// Configured resource budgets exceeded (tensor powers growing too large).
struct BudgetError : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Tolerances
// ---------------------------------------------------------------------------

// rank_tol   : relative threshold below which singular/eigenvalues count as 0;
// eq_tol     : absolute Frobenius-norm threshold for matrix equality;
// cluster_tol: maximal gap between eigenvalues grouped into one cluster.
struct ToleranceConfig {
    double rank_tol = 1e-9;
    double eq_tol = 1e-8;
    double cluster_tol = 1e-6;

    void validate() const {
        const bool ok = rank_tol > 0 && rank_tol < 1 && eq_tol > 0 &&
                        eq_tol < 1 && cluster_tol > 0 && cluster_tol < 1;
        if (!ok) {
            throw NumericError(
                "ToleranceConfig: all tolerances must lie strictly in (0,1)");
        }
    }
};

// Fixed default seed so every randomized routine is reproducible by default.
inline constexpr std::uint64_t kDefaultSeed = 0x1DE3C4A7u;

// ---------------------------------------------------------------------------
// Small helpers
// ---------------------------------------------------------------------------

inline Matrix identity(Index d) { return Matrix::Identity(d, d); }

inline Complex hs_inner(const Matrix& a, const Matrix& b) {
    return (a.adjoint() * b).trace();
}

inline double fro_norm(const Matrix& a) { return a.norm(); }

inline double hermitian_defect(const Matrix& a) {
    return (a - a.adjoint()).norm();
}

inline Matrix hermitize(const Matrix& a) {
    return 0.5 * (a + a.adjoint());
}

// Column-major flattening and its inverse.
inline Vector vec(const Matrix& a) {
    return Eigen::Map<const Vector>(a.data(), a.size());
}

inline Matrix unvec(const Vector& v, Index rows, Index cols) {
    if (v.size() != rows * cols) {
        throw DimensionError("unvec: size mismatch");
    }
    return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

inline Matrix tensor_product(const Matrix& a, const Matrix& b) {
    return Eigen::kroneckerProduct(a, b).eval();
}

// ---------------------------------------------------------------------------
// Norms
// ---------------------------------------------------------------------------

inline RealVector singular_values(const Matrix& a) {
    if (a.size() == 0) return RealVector(0);
    Eigen::JacobiSVD<Matrix> svd(a);
    return svd.singularValues();
}

inline double op_norm(const Matrix& a) {
    if (a.size() == 0) return 0.0;
    const RealVector s = singular_values(a);
    return s.size() > 0 ? s(0) : 0.0;
}

inline double trace_norm(const Matrix& a) {
    return singular_values(a).sum();
}

struct Norms {
    double operator_norm = 0;
    double trace_norm = 0;
    double frobenius_norm = 0;
};

inline Norms norms(const Matrix& a) {
    const RealVector s = singular_values(a);
    Norms n;
    n.operator_norm = s.size() > 0 ? s(0) : 0.0;
    n.trace_norm = s.sum();
    n.frobenius_norm = s.norm();
    return n;
}

// ---------------------------------------------------------------------------
// Hermitian spectral decomposition (descending order)
// ---------------------------------------------------------------------------

struct Eigensystem {
    RealVector values;  // descending
    Matrix vectors;     // columns aligned with values
};

// Eigendecomposition of a Hermitian (within eq_tol) matrix, descending order.
inline Eigensystem hermitian_eig(const Matrix& a, const ToleranceConfig& tol) {
    if (a.rows() != a.cols()) {
        throw DimensionError("hermitian_eig: matrix not square");
    }
    if (hermitian_defect(a) > tol.eq_tol) {
        throw NumericError("hermitian_eig: input not Hermitian within eq_tol (defect " +
                           std::to_string(hermitian_defect(a)) + ")");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(a));
    if (es.info() != Eigen::Success) {
        throw NumericError("hermitian_eig: eigensolver failed to converge");
    }
    const Index d = a.rows();
    Eigensystem out;
    out.values.resize(d);
    out.vectors.resize(d, d);
    // Eigen returns ascending order; flip to descending.
    for (Index i = 0; i < d; ++i) {
        out.values(i) = es.eigenvalues()(d - 1 - i);
        out.vectors.col(i) = es.eigenvectors().col(d - 1 - i);
    }
    return out;
}

inline bool is_psd(const Matrix& a, const ToleranceConfig& tol) {
    if (a.rows() != a.cols()) return false;
    if (hermitian_defect(a) > tol.eq_tol) return false;
    const Eigensystem es = hermitian_eig(a, tol);
    if (es.values.size() == 0) return true;
    return es.values(es.values.size() - 1) >= -tol.eq_tol;
}

// ---------------------------------------------------------------------------
// Support data: projector + isometry onto the range of a PSD operator
// ---------------------------------------------------------------------------

struct SupportData {
    Matrix projector;  // d x d, Hermitian idempotent
    Matrix isometry;   // d x rank, isometry.adjoint() * isometry = I_rank
    Index rank = 0;
};

// Spectral support of a PSD operator: keep eigenvalues > rank_tol * max.
inline SupportData support_of(const Matrix& a, const ToleranceConfig& tol) {
    const Eigensystem es = hermitian_eig(a, tol);
    const Index d = a.rows();
    const double top = es.values.size() > 0 ? es.values(0) : 0.0;
    if (es.values.size() > 0 && es.values(es.values.size() - 1) <
        -tol.eq_tol * std::max(1.0, top)) {
        throw NumericError("support_of: input has a significantly negative eigenvalue");
    }
    const double cut = tol.rank_tol * std::max(top, 0.0);
    Index rank = 0;
    while (rank < d && es.values(rank) > cut) ++rank;
    SupportData out;
    out.rank = rank;
    out.isometry = es.vectors.leftCols(rank);
    out.projector = out.isometry * out.isometry.adjoint();
    return out;
}

// ---------------------------------------------------------------------------
// Partial traces over (possibly several) tensor-factor blocks
// ---------------------------------------------------------------------------

// One block C^{d1} (x) C^{d2}: trace out the chosen factor (1 or 2).
inline Matrix partial_trace_single(const Matrix& x, Index d1, Index d2, int which) {
    if (x.rows() != d1 * d2 || x.cols() != d1 * d2) {
        throw DimensionError("partial_trace: block dims " + std::to_string(d1) + "x" +
                             std::to_string(d2) + " do not match matrix size " +
                             std::to_string(x.rows()));
    }
    if (which == 2) {
        Matrix out = Matrix::Zero(d1, d1);
        for (Index i = 0; i < d1; ++i)
            for (Index j = 0; j < d1; ++j) {
                Complex s = 0;
                for (Index k = 0; k < d2; ++k) s += x(i * d2 + k, j * d2 + k);
                out(i, j) = s;
            }
        return out;
    }
    if (which == 1) {
        Matrix out = Matrix::Zero(d2, d2);
        for (Index k = 0; k < d2; ++k)
            for (Index l = 0; l < d2; ++l) {
                Complex s = 0;
                for (Index i = 0; i < d1; ++i) s += x(i * d2 + k, i * d2 + l);
                out(k, l) = s;
            }
        return out;
    }
    throw DimensionError("partial_trace: factor index must be 1 or 2");
}

// Multi-block version: x must be block-diagonal w.r.t. consecutive blocks of
// sizes d1*d2; returns the direct sum of the per-block reduced operators.
inline Matrix partial_trace(const Matrix& x,
                            const std::vector<std::pair<Index, Index>>& dims,
                            int which) {
    Index total = 0, out_total = 0;
    for (const auto& [d1, d2] : dims) {
        total += d1 * d2;
        out_total += (which == 2) ? d1 : d2;
    }
    if (x.rows() != total || x.cols() != total) {
        throw DimensionError("partial_trace: blocks sum to " + std::to_string(total) +
                             " but matrix has dimension " + std::to_string(x.rows()));
    }
    Matrix out = Matrix::Zero(out_total, out_total);
    Index off = 0, out_off = 0;
    for (std::size_t b = 0; b < dims.size(); ++b) {
        const auto [d1, d2] = dims[b];
        const Index sz = d1 * d2;
        const Index osz = (which == 2) ? d1 : d2;
        out.block(out_off, out_off, osz, osz) =
            partial_trace_single(x.block(off, off, sz, sz), d1, d2, which);
        off += sz;
        out_off += osz;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Eigenvalue clustering (for separating algebra blocks)
// ---------------------------------------------------------------------------

struct SpectralCluster {
    double value = 0;        // mean eigenvalue of the cluster
    Index multiplicity = 0;  // number of eigenvalues grouped
    Matrix projector;        // sum of the eigenprojectors
};

// Groups the (descending) eigenvalues of a Hermitian matrix whenever the gap
// between consecutive values is <= cluster_tol.
inline std::vector<SpectralCluster> clustered_spectrum(const Matrix& a,
                                                       const ToleranceConfig& tol) {
    const Eigensystem es = hermitian_eig(a, tol);
    std::vector<SpectralCluster> out;
    const Index d = es.values.size();
    Index start = 0;
    while (start < d) {
        Index stop = start + 1;
        while (stop < d && es.values(stop - 1) - es.values(stop) <= tol.cluster_tol) {
            ++stop;
        }
        SpectralCluster c;
        c.multiplicity = stop - start;
        c.value = es.values.segment(start, c.multiplicity).mean();
        const Matrix v = es.vectors.middleCols(start, c.multiplicity);
        c.projector = v * v.adjoint();
        out.push_back(std::move(c));
        start = stop;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Seeded randomness
// ---------------------------------------------------------------------------

// Thin wrapper so every randomized routine takes an explicit, local stream.
class Rng {
public:
    explicit Rng(std::uint64_t seed = kDefaultSeed) : gen_(seed) {}

    double gaussian() { return normal_(gen_); }
    double uniform() { return uniform_(gen_); }
    std::uint64_t integer() { return gen_(); }

    Complex complex_gaussian() {
        return Complex(normal_(gen_), normal_(gen_));
    }

    Matrix gaussian_matrix(Index rows, Index cols) {
        Matrix m(rows, cols);
        for (Index j = 0; j < cols; ++j)
            for (Index i = 0; i < rows; ++i) m(i, j) = complex_gaussian();
        return m;
    }

    Matrix hermitian(Index d) {
        return hermitize(gaussian_matrix(d, d));
    }

    // Haar-distributed isometry (rows >= cols) via QR with phase correction.
    Matrix haar_isometry(Index rows, Index cols) {
        if (rows < cols) throw DimensionError("haar_isometry: rows < cols");
        const Matrix g = gaussian_matrix(rows, cols);
        Eigen::HouseholderQR<Matrix> qr(g);
        Matrix q = qr.householderQ() * Matrix::Identity(rows, cols);
        const Matrix r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
        // Fix the phase ambiguity so the distribution is exactly Haar.
        for (Index j = 0; j < cols; ++j) {
            const Complex rjj = r(j, j);
            if (std::abs(rjj) > 0) q.col(j) *= rjj / std::abs(rjj);
        }
        return q;
    }

    Matrix haar_unitary(Index d) { return haar_isometry(d, d); }

    // Random full-rank density operator (normalized Wishart).
    Matrix density(Index d) {
        const Matrix g = gaussian_matrix(d, d);
        Matrix w = g * g.adjoint();
        w /= w.trace().real();
        return hermitize(w);
    }

    std::mt19937_64& raw() { return gen_; }

private:
    std::mt19937_64 gen_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

// ---------------------------------------------------------------------------
// Orthonormal spans of operator families (Hilbert-Schmidt geometry)
// ---------------------------------------------------------------------------

// Orthonormal basis (HS inner product) of span{ops}, truncated at
// rank_tol * sigma_max. All inputs must share the same shape.
inline std::vector<Matrix> orthonormal_span(const std::vector<Matrix>& ops,
                                            const ToleranceConfig& tol) {
    if (ops.empty()) return {};
    const Index rows = ops[0].rows(), cols = ops[0].cols();
    Matrix stacked(rows * cols, static_cast<Index>(ops.size()));
    for (std::size_t i = 0; i < ops.size(); ++i) {
        if (ops[i].rows() != rows || ops[i].cols() != cols) {
            throw DimensionError("orthonormal_span: mixed operator shapes");
        }
        stacked.col(static_cast<Index>(i)) = vec(ops[i]);
    }
    Eigen::BDCSVD<Matrix> svd(stacked, Eigen::ComputeThinU);
    const RealVector s = svd.singularValues();
    const double cut = (s.size() > 0 ? s(0) : 0.0) * tol.rank_tol;
    std::vector<Matrix> out;
    for (Index i = 0; i < s.size(); ++i) {
        if (s(i) > cut) out.push_back(unvec(svd.matrixU().col(i), rows, cols));
    }
    return out;
}

// Squared HS distance from x to span{basis} given an ORTHONORMAL basis.
inline double distance_to_span(const Matrix& x, const std::vector<Matrix>& basis) {
    Vector v = vec(x);
    for (const Matrix& b : basis) {
        v -= vec(b) * (vec(b).adjoint() * v)(0);
    }
    return v.norm();
}

}  // namespace idem
