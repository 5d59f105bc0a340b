// Constructive zero-error emulation.
//
// To emulate k copies of an idempotent channel F with n copies of G, it
// suffices to embed the block algebra of the reduced F^{(x)k} into that of
// the reduced G^{(x)n} by a subunital injective *-homomorphism iota (a
// Bratteli multiplicity assignment), lift iota to a unital CP map
//
//     iota~(x)    = iota(E_A(x)) + (tr x / tr 1_A) (1_B - iota(1_A)),
//     iota~^-1(y) = pull-back of the conditional expectation of V* y V
//                   onto the compressed image algebra,
//
// and take Heisenberg-picture encoder/decoder E* = iota~^-1 and
// D* = iota~ . Fhat*^{(x)k}. Their Hilbert-Schmidt adjoints are CPTP
// channels achieving Fhat^{(x)k} = D . Ghat^{(x)n} . E exactly; conversion
// channels transport the identity back to the unreduced F and G.

#pragma once

#include "idem/capacity.hpp"

#include <optional>

namespace idem {

// ---------------------------------------------------------------------------
// Embedding plans (Bratteli multiplicity data)
// ---------------------------------------------------------------------------

// Source blocks d_i are the emulated channel's; target blocks D_j belong to
// the channel whose copies are consumed. N[j][i] counts how many copies of
// M_{d_i} land inside M_{D_j}.
struct EmbeddingPlan {
    std::vector<Index> source_dims;
    std::vector<Index> target_dims;
    std::vector<std::vector<Index>> multiplicity;  // [target j][source i]

    void validate() const {
        if (multiplicity.size() != target_dims.size()) {
            throw DimensionError("EmbeddingPlan: row count != target block count");
        }
        std::vector<Index> column_sums(source_dims.size(), 0);
        for (std::size_t j = 0; j < target_dims.size(); ++j) {
            if (multiplicity[j].size() != source_dims.size()) {
                throw DimensionError("EmbeddingPlan: column count != source block count");
            }
            Index used = 0;
            for (std::size_t i = 0; i < source_dims.size(); ++i) {
                if (multiplicity[j][i] < 0) {
                    throw DimensionError("EmbeddingPlan: negative multiplicity");
                }
                used += multiplicity[j][i] * source_dims[i];
                column_sums[i] += multiplicity[j][i];
            }
            if (used > target_dims[j]) {
                throw DimensionError("EmbeddingPlan: block " + std::to_string(j) +
                                     " overfilled (" + std::to_string(used) + " > " +
                                     std::to_string(target_dims[j]) + ")");
            }
        }
        for (std::size_t i = 0; i < source_dims.size(); ++i) {
            if (column_sums[i] < 1) {
                throw DimensionError("EmbeddingPlan: source block " + std::to_string(i) +
                                     " not embedded anywhere");
            }
        }
    }
};

namespace detail {

// Exhaustive bin-packing backtracking. Extra copies of a source block only
// consume capacity, so feasibility is equivalent to packing each d_i exactly
// once; items and bins are walked largest-first with two prunes (total slack,
// equal-slack symmetry).
inline bool pack_blocks(const std::vector<Index>& items, std::size_t next,
                        std::vector<Index>& slack, std::vector<std::size_t>& choice,
                        Index slack_total, Index items_total) {
    if (next == items.size()) return true;
    if (slack_total < items_total) return false;
    const Index d = items[next];
    Index last_tried = -1;
    for (std::size_t j = 0; j < slack.size(); ++j) {
        if (slack[j] < d || slack[j] == last_tried) continue;
        last_tried = slack[j];
        slack[j] -= d;
        choice[next] = j;
        if (pack_blocks(items, next + 1, slack, choice, slack_total - d,
                        items_total - d)) {
            return true;
        }
        slack[j] += d;
    }
    return false;
}

}  // namespace detail

inline std::optional<EmbeddingPlan> embedding_feasible(
    const std::vector<Index>& source_dims, const std::vector<Index>& target_dims) {
    for (Index d : source_dims)
        if (d < 1) throw DimensionError("embedding_feasible: source dims must be >= 1");
    for (Index d : target_dims)
        if (d < 1) throw DimensionError("embedding_feasible: target dims must be >= 1");

    // Sort both sides descending, remembering original positions.
    std::vector<std::size_t> src_order(source_dims.size()), tgt_order(target_dims.size());
    std::iota(src_order.begin(), src_order.end(), 0);
    std::iota(tgt_order.begin(), tgt_order.end(), 0);
    std::stable_sort(src_order.begin(), src_order.end(), [&](std::size_t a, std::size_t b) {
        return source_dims[a] > source_dims[b];
    });
    std::stable_sort(tgt_order.begin(), tgt_order.end(), [&](std::size_t a, std::size_t b) {
        return target_dims[a] > target_dims[b];
    });

    std::vector<Index> items(source_dims.size());
    for (std::size_t t = 0; t < src_order.size(); ++t) items[t] = source_dims[src_order[t]];
    std::vector<Index> slack(target_dims.size());
    for (std::size_t t = 0; t < tgt_order.size(); ++t) slack[t] = target_dims[tgt_order[t]];

    const Index items_total = std::accumulate(items.begin(), items.end(), Index{0});
    const Index slack_total = std::accumulate(slack.begin(), slack.end(), Index{0});
    std::vector<std::size_t> choice(items.size());
    if (!detail::pack_blocks(items, 0, slack, choice, slack_total, items_total)) {
        return std::nullopt;
    }

    EmbeddingPlan plan;
    plan.source_dims = source_dims;
    plan.target_dims = target_dims;
    plan.multiplicity.assign(target_dims.size(),
                             std::vector<Index>(source_dims.size(), 0));
    for (std::size_t t = 0; t < items.size(); ++t) {
        plan.multiplicity[tgt_order[choice[t]]][src_order[t]] += 1;
    }
    plan.validate();
    return plan;
}

// ---------------------------------------------------------------------------
// The embedding as a linear map
// ---------------------------------------------------------------------------

// Linear map between operator spaces in the vec convention; for the embedding
// iota, apply() is multiplicative on the source block algebra and subunital.
struct EmbeddingMap {
    Matrix superop;     // dim_out^2 x dim_in^2
    Index dim_in = 0;
    Index dim_out = 0;
    Matrix unit_image;  // iota(1), a projector when the plan is valid

    Matrix apply(const Matrix& x) const {
        if (x.rows() != dim_in || x.cols() != dim_in) {
            throw DimensionError("EmbeddingMap::apply: dimension mismatch");
        }
        return unvec(superop * vec(x), dim_out, dim_out);
    }
};

// iota(x) = U_B [ (+)_j ( W_j ( (+)_i x_i (x) 1_{N_ji} ) W_j* ) (x) 1_{M_j} ] U_B*,
// where x_i = tr_{i,2}(P_i U_A* x U_A P_i) / m_i are the source block
// components (exact on the algebra) and W_j fills each target block greedily
// from coordinate 0. Needs both decompositions for the two basis changes.
inline EmbeddingMap build_embedding(const EmbeddingPlan& plan,
                                    const IdempotentDecomposition& source_dec,
                                    const IdempotentDecomposition& target_dec) {
    plan.validate();
    const std::size_t ns = plan.source_dims.size();
    const std::size_t nt = plan.target_dims.size();
    if (source_dec.shape.entries.size() != ns || target_dec.shape.entries.size() != nt) {
        throw DimensionError("build_embedding: plan does not match the decompositions");
    }
    for (std::size_t i = 0; i < ns; ++i) {
        if (source_dec.shape.entries[i] != plan.source_dims[i]) {
            throw DimensionError("build_embedding: source dims disagree with plan");
        }
    }
    for (std::size_t j = 0; j < nt; ++j) {
        if (target_dec.shape.entries[j] != plan.target_dims[j]) {
            throw DimensionError("build_embedding: target dims disagree with plan");
        }
    }
    const Index na = source_dec.total_dim();
    const Index nb = target_dec.total_dim();
    const Matrix& ua = source_dec.basis_change;
    const Matrix& ub = target_dec.basis_change;

    std::vector<Index> src_offsets(ns, 0);
    for (std::size_t i = 1; i < ns; ++i) {
        src_offsets[i] = src_offsets[i - 1] +
                         source_dec.shape.entries[i - 1] * source_dec.multiplicities[i - 1];
    }
    std::vector<Index> tgt_offsets(nt, 0);
    for (std::size_t j = 1; j < nt; ++j) {
        tgt_offsets[j] = tgt_offsets[j - 1] +
                         target_dec.shape.entries[j - 1] * target_dec.multiplicities[j - 1];
    }

    const auto apply_iota = [&](const Matrix& x) -> Matrix {
        const Matrix y = ua.adjoint() * x * ua;
        // Source components.
        std::vector<Matrix> comp(ns);
        for (std::size_t i = 0; i < ns; ++i) {
            const Index d = source_dec.shape.entries[i];
            const Index m = source_dec.multiplicities[i];
            comp[i] = partial_trace_single(
                          y.block(src_offsets[i], src_offsets[i], d * m, d * m), d, m, 2) /
                      static_cast<double>(m);
        }
        // Target assembly.
        Matrix z = Matrix::Zero(nb, nb);
        for (std::size_t j = 0; j < nt; ++j) {
            const Index dj = target_dec.shape.entries[j];
            const Index mj = target_dec.multiplicities[j];
            Matrix filled = Matrix::Zero(dj, dj);
            Index pos = 0;
            for (std::size_t i = 0; i < ns; ++i) {
                const Index di = plan.source_dims[i];
                for (Index copy = 0; copy < plan.multiplicity[j][i]; ++copy) {
                    filled.block(pos, pos, di, di) = comp[i];
                    pos += di;
                }
            }
            z.block(tgt_offsets[j], tgt_offsets[j], dj * mj, dj * mj) =
                tensor_product(filled, identity(mj));
        }
        return ub * z * ub.adjoint();
    };

    EmbeddingMap map;
    map.dim_in = na;
    map.dim_out = nb;
    map.superop = Matrix::Zero(nb * nb, na * na);
    for (Index a = 0; a < na; ++a) {
        for (Index b = 0; b < na; ++b) {
            Matrix e = Matrix::Zero(na, na);
            e(a, b) = 1;
            map.superop.col(b * na + a) = vec(apply_iota(e));
        }
    }
    map.unit_image = apply_iota(identity(na));
    return map;
}

// ---------------------------------------------------------------------------
// Tracial conditional expectation onto the block algebra
// ---------------------------------------------------------------------------

// E_A(x) = sum_k tr_{k,2}(P_k x P_k) (x) 1_{m_k}/m_k — the unital CPTP
// idempotent projecting onto the algebra; coincides with the Hilbert-Schmidt
// orthogonal projection onto its span.
inline Channel tracial_conditional_expectation(const IdempotentDecomposition& dec,
                                               Index ambient_dim) {
    const Index n = dec.total_dim();
    if (ambient_dim != n) {
        throw DimensionError("tracial_conditional_expectation: the algebra unit must "
                             "equal the ambient identity (dims " + std::to_string(n) +
                             " vs " + std::to_string(ambient_dim) + ")");
    }
    const Matrix& u = dec.basis_change;
    std::vector<Matrix> ks;
    Index off = 0;
    for (std::size_t k = 0; k < dec.shape.entries.size(); ++k) {
        const Index d = dec.shape.entries[k];
        const Index m = dec.multiplicities[k];
        const double scale = 1.0 / std::sqrt(static_cast<double>(m));
        for (Index t = 0; t < m; ++t) {
            for (Index r = 0; r < m; ++r) {
                Matrix core = Matrix::Zero(n, n);
                for (Index uu = 0; uu < d; ++uu) {
                    core(off + uu * m + t, off + uu * m + r) = scale;
                }
                ks.push_back(u * core * u.adjoint());
            }
        }
        off += d * m;
    }
    return Channel(n, n, std::move(ks));
}

// ---------------------------------------------------------------------------
// Lifting the embedding to unital CP maps
// ---------------------------------------------------------------------------

struct HomomorphismLift {
    Matrix tilde;       // superop of iota~ : L(H_A) -> L(H_B), unital CP
    Matrix tilde_inv;   // superop of iota~^-1 : L(H_B) -> L(H_A), unital CP
    Matrix unit_image;  // P_iota = iota(1_A)
};

inline HomomorphismLift lift_homomorphism(const EmbeddingMap& iota,
                                          const IdempotentDecomposition& source_dec,
                                          const ToleranceConfig& tol = {}) {
    const Index na = iota.dim_in;
    const Index nb = iota.dim_out;
    const Matrix& p = iota.unit_image;
    if ((p * p - p).norm() > tol.eq_tol * std::max(1.0, p.norm()) ||
        hermitian_defect(p) > tol.eq_tol) {
        throw NumericError("lift_homomorphism: iota(1) is not a projector");
    }

    HomomorphismLift lift;
    lift.unit_image = p;

    // iota~ = iota . E_A + tr(.)/tr(1_A) * (1_B - P).
    const Channel ea = tracial_conditional_expectation(source_dec, na);
    lift.tilde = iota.superop * superoperator(ea) +
                 vec(Matrix(identity(nb) - p)) * vec(identity(na)).adjoint() /
                     static_cast<double>(na);

    // iota~^-1: compress to supp(P), project onto the compressed image algebra
    // (Hilbert-Schmidt projection = tracial conditional expectation), and pull
    // coefficients back through the Gram matrix of the embedded basis.
    const SupportData psup = support_of(hermitize(p), tol);
    const Matrix& v = psup.isometry;  // nb x r
    const Index r = psup.rank;

    // Hilbert-Schmidt orthonormal basis of the source algebra from its
    // matrix units: E^{(k)}_{uv} / sqrt(m_k).
    std::vector<Matrix> alg_basis;
    for (std::size_t k = 0; k < source_dec.shape.entries.size(); ++k) {
        const double scale =
            1.0 / std::sqrt(static_cast<double>(source_dec.multiplicities[k]));
        for (const auto& row : source_dec.matrix_units[k])
            for (const Matrix& e : row) alg_basis.push_back(scale * e);
    }
    const Index t = static_cast<Index>(alg_basis.size());

    Matrix a_mat(na * na, t);   // vec'd source basis
    Matrix q_mat(r * r, t);     // vec'd compressed images
    for (Index j = 0; j < t; ++j) {
        a_mat.col(j) = vec(alg_basis[j]);
        q_mat.col(j) = vec(Matrix(v.adjoint() * iota.apply(alg_basis[j]) * v));
    }
    const Matrix gram = q_mat.adjoint() * q_mat;
    Eigen::LLT<Matrix> gram_solver(gram);
    if (gram_solver.info() != Eigen::Success) {
        throw NumericError("lift_homomorphism: embedded basis Gram matrix is not "
                           "positive definite (iota is not injective)");
    }
    const Matrix compress_superop =
        tensor_product(v.transpose(), v.adjoint());  // y -> V* y V
    lift.tilde_inv = a_mat * gram_solver.solve(q_mat.adjoint() * compress_superop);
    return lift;
}

// ---------------------------------------------------------------------------
// End-to-end synthesis
// ---------------------------------------------------------------------------

struct EmulationKit {
    EmbeddingPlan plan;
    EmbeddingMap iota;
    Channel encoder;          // E on the unreduced spaces
    Channel decoder;          // D on the unreduced spaces
    Channel encoder_reduced;  // E between the reduced spaces
    Channel decoder_reduced;  // D between the reduced spaces
    double residual = 0;      // Choi distance of F^k from D . G^n . E
};

struct EmulationOptions {
    ToleranceConfig tol;
    std::uint64_t seed = kDefaultSeed;
    Index dim_budget = 64;  // cap on dim(F)^k and dim(G)^n
};

inline double verify_emulation(const Channel& f, const Channel& g, int k, int n,
                               const Channel& encoder, const Channel& decoder) {
    const Channel fk = tensor_power(f, k);
    const Channel gn = tensor_power(g, n);
    if (encoder.dim_in() != fk.dim_in() || encoder.dim_out() != gn.dim_in() ||
        decoder.dim_in() != gn.dim_out() || decoder.dim_out() != fk.dim_out()) {
        throw DimensionError("verify_emulation: encoder/decoder dims do not match");
    }
    const Channel emulated = compose(decoder, compose(gn, encoder));
    return (fk.choi() - emulated.choi()).norm();
}

inline std::optional<EmulationKit> synthesize_emulation(
    const Channel& f, const Channel& g, int k, int n,
    const EmulationOptions& opts = {}) {
    if (k < 1 || n < 1) throw DimensionError("synthesize_emulation: k, n must be >= 1");
    double fk_dim = 1, gn_dim = 1;
    for (int i = 0; i < k; ++i) fk_dim *= static_cast<double>(f.dim_in());
    for (int i = 0; i < n; ++i) gn_dim *= static_cast<double>(g.dim_in());
    if (fk_dim > static_cast<double>(opts.dim_budget) ||
        gn_dim > static_cast<double>(opts.dim_budget)) {
        throw BudgetError("synthesize_emulation: dim(F)^k or dim(G)^n exceeds the "
                          "budget of " + std::to_string(opts.dim_budget));
    }
    const ToleranceConfig& tol = opts.tol;

    const ReducedChannel rc_f = reduce(f, tol);
    const ReducedChannel rc_g = reduce(g, tol);
    const Channel fk_hat = tensor_power(rc_f.reduced, k);
    const Channel gn_hat = tensor_power(rc_g.reduced, n);

    // Tensor powers of reduced idempotents are reduced idempotents; reduce()
    // is then a cheap identity wrapper supplying the ReducedChannel plumbing.
    const ReducedChannel rc_fk = reduce(fk_hat, tol);
    const ReducedChannel rc_gn = reduce(gn_hat, tol);
    const IdempotentDecomposition dec_f =
        decompose(rc_fk, fixed_point_algebra(rc_fk, tol), tol, opts.seed);
    const IdempotentDecomposition dec_g =
        decompose(rc_gn, fixed_point_algebra(rc_gn, tol), tol, opts.seed + 1);

    std::optional<EmbeddingPlan> plan =
        embedding_feasible(dec_f.shape.entries, dec_g.shape.entries);
    if (!plan) return std::nullopt;

    EmulationKit kit;
    kit.plan = std::move(*plan);
    kit.iota = build_embedding(kit.plan, dec_f, dec_g);
    const HomomorphismLift lift = lift_homomorphism(kit.iota, dec_f, tol);

    // Heisenberg picture: E* = iota~^-1 and D* = iota~ . Fhat*^k; the
    // Schrodinger channels are the Hilbert-Schmidt adjoints.
    const Index na = kit.iota.dim_in;
    const Index nb = kit.iota.dim_out;
    const Matrix e_superop = lift.tilde_inv.adjoint();
    const Matrix d_superop = (lift.tilde * superoperator(fk_hat).adjoint()).adjoint();
    kit.encoder_reduced = channel_from_superoperator(e_superop, na, nb, tol);
    kit.decoder_reduced = channel_from_superoperator(d_superop, nb, na, tol);
    require_channel(kit.encoder_reduced, tol, "synthesize_emulation: reduced encoder");
    require_channel(kit.decoder_reduced, tol, "synthesize_emulation: reduced decoder");

    // Transport to the unreduced channels across the conversion maps:
    // E = Dhat_G^n . E_red . Ehat_F^k and D = Dhat_F^k . D_red . Ehat_G^n.
    const ConversionChannels conv_f = conversion_channels(rc_f);
    const ConversionChannels conv_g = conversion_channels(rc_g);
    kit.encoder = compress(compose(tensor_power(conv_g.d_hat, n),
                                   compose(kit.encoder_reduced,
                                           tensor_power(conv_f.e_hat, k))),
                           tol);
    kit.decoder = compress(compose(tensor_power(conv_f.d_hat, k),
                                   compose(kit.decoder_reduced,
                                           tensor_power(conv_g.e_hat, n))),
                           tol);
    kit.residual = verify_emulation(f, g, k, n, kit.encoder, kit.decoder);
    return kit;
}

// Tries (k*m, n*m) for m = 1..max_m and returns the first kit that succeeds.
struct BlocklengthResult {
    int k = 0;
    int n = 0;
    EmulationKit kit;
};

inline std::optional<BlocklengthResult> search_blocklength(
    const Channel& f, const Channel& g, int k, int n, int max_m,
    const EmulationOptions& opts = {}) {
    for (int m = 1; m <= max_m; ++m) {
        std::optional<EmulationKit> kit;
        try {
            kit = synthesize_emulation(f, g, k * m, n * m, opts);
        } catch (const BudgetError&) {
            break;  // larger m can only grow further past the budget
        }
        if (kit) return BlocklengthResult{k * m, n * m, std::move(*kit)};
    }
    return std::nullopt;
}

}  // namespace idem
