#pragma once
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"

namespace minforge {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double rank_rel_threshold = 1e-9;

// numerical rank: singular values above rank_rel_threshold * sigma_max
inline int numerical_rank(const MatrixXd& M) {
    if (M.size() == 0) return 0;
    Eigen::JacobiSVD<MatrixXd> svd(M);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) return 0;
    int r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > rank_rel_threshold * s(0)) ++r;
    return r;
}

// The sample-space targets a hidden pre-activation can reach at second order:
// rows of X, their pairwise products, the constant vector, and the squares.
// Inner products with the first group must vanish; with the squares they must
// come out strictly one-signed.
struct FeatureSet {
    std::vector<VectorXd> ortho;    // 1, X_i, X_i.*X_j (i<j)
    std::vector<VectorXd> positive; // X_j.*X_j
    int n = 0;
};

inline FeatureSet build_feature_set(const MatrixXd& X) {
    FeatureSet fs;
    fs.n = static_cast<int>(X.cols());
    const int d0 = static_cast<int>(X.rows());
    fs.ortho.push_back(VectorXd::Ones(fs.n));
    for (int i = 0; i < d0; ++i) fs.ortho.push_back(X.row(i).transpose());
    for (int i = 0; i < d0; ++i)
        for (int j = i + 1; j < d0; ++j)
            fs.ortho.push_back(
                (X.row(i).array() * X.row(j).array()).matrix().transpose());
    for (int j = 0; j < d0; ++j)
        fs.positive.push_back(
            (X.row(j).array() * X.row(j).array()).matrix().transpose());
    return fs;
}

struct Assumption1Report {
    bool ok = false;
    bool count_ok = false;  // d0^2/2 + 3 d0/2 < N
    bool rank_ok = false;   // stacked targets linearly independent
    int target_count = 0;   // |ortho| + |positive|
    int n = 0;
    int rank = 0;
    std::string note;
};

inline MatrixXd stack_rows(const std::vector<VectorXd>& rows, int n) {
    MatrixXd M(static_cast<Eigen::Index>(rows.size()), n);
    for (std::size_t i = 0; i < rows.size(); ++i) M.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    return M;
}

inline Assumption1Report check_assumption1(const MatrixXd& X) {
    Assumption1Report rep;
    const int d0 = static_cast<int>(X.rows());
    const int n = static_cast<int>(X.cols());
    FeatureSet fs = build_feature_set(X);
    rep.n = n;
    rep.target_count = static_cast<int>(fs.ortho.size() + fs.positive.size());
    // |targets| = d0^2/2 + 3 d0/2 + 1; the strict headroom condition leaves at
    // least one dual direction free
    rep.count_ok = (rep.target_count - 1) < n;
    std::vector<VectorXd> all = fs.ortho;
    all.insert(all.end(), fs.positive.begin(), fs.positive.end());
    MatrixXd M = stack_rows(all, n);
    rep.rank = numerical_rank(M);
    rep.rank_ok = rep.rank == rep.target_count && rep.target_count <= n;
    rep.ok = rep.count_ok && rep.rank_ok;
    if (!rep.count_ok)
        rep.note = "need d0^2/2 + 3 d0/2 < N (got " +
                   std::to_string(rep.target_count - 1) + " vs N=" + std::to_string(n) + ")";
    else if (!rep.rank_ok)
        rep.note = "target vectors are numerically dependent (rank " +
                   std::to_string(rep.rank) + " of " + std::to_string(rep.target_count) + ")";
    return rep;
}

// L = N - |ortho| unit vectors u_l, each orthogonal to every ortho target and
// with a strictly positive inner product against every positive target.
struct DualBasis {
    std::vector<VectorXd> u;
    double max_ortho_resid = 0.0; // max |<u_l, w>| / (|u_l||w|), w in ortho
    double min_pos_margin = 0.0;  // min <u_l, w> / (|u_l||w|),  w in positive
};

inline DualBasis dual_positive_vectors(const std::vector<VectorXd>& ortho,
                                       const std::vector<VectorXd>& positive,
                                       int n) {
    const int d = static_cast<int>(ortho.size());
    const int l1 = d + static_cast<int>(positive.size());
    require(d >= 1, "empty-dual-basis", "need at least one orthogonality target");
    require(d < l1, "d-not-less-than-L1", "need at least one positivity target");
    require(l1 <= n, "dependent-targets",
            "more targets than ambient dimension (" + std::to_string(l1) + " > " +
                std::to_string(n) + ")");
    for (const auto& v : ortho)
        require(static_cast<int>(v.size()) == n, "shape-mismatch", "target length != N");
    for (const auto& v : positive)
        require(static_cast<int>(v.size()) == n, "shape-mismatch", "target length != N");

    std::vector<VectorXd> rows = ortho;
    rows.insert(rows.end(), positive.begin(), positive.end());
    {
        MatrixXd M = stack_rows(rows, n);
        require(numerical_rank(M) == l1, "dependent-targets",
                "orthogonality/positivity targets are numerically dependent");
    }

    // complete to a basis of R^N with standard basis vectors, greedily by index
    int rank = l1;
    for (int i = 0; i < n && static_cast<int>(rows.size()) < n; ++i) {
        VectorXd e = VectorXd::Zero(n);
        e(i) = 1.0;
        rows.push_back(e);
        MatrixXd M = stack_rows(rows, n);
        if (numerical_rank(M) == rank + 1)
            ++rank;
        else
            rows.pop_back();
    }
    require(static_cast<int>(rows.size()) == n, "rank-repair-failed",
            "could not complete the targets to a basis");

    MatrixXd A = stack_rows(rows, n);
    // columns of A^{-1} are dual to the rows of A: <a_i, c_j> = delta_ij
    MatrixXd Ainv = A.partialPivLu().solve(MatrixXd::Identity(n, n));

    const int L = n - d;
    // unit-normalized dual columns beyond the ortho block
    MatrixXd Dhat(n, L);
    for (int m = 0; m < L; ++m) {
        VectorXd c = Ainv.col(d + m);
        double nc = c.norm();
        require(nc > 0.0, "rank-repair-failed", "degenerate dual column");
        Dhat.col(m) = c / nc;
    }
    // mix with an all-positive invertible matrix (I + ones) so every dual
    // direction meets every positivity target with a strictly positive weight
    MatrixXd Q = MatrixXd::Identity(L, L) + MatrixXd::Ones(L, L);
    MatrixXd U = Dhat * Q;

    DualBasis out;
    for (int l = 0; l < L; ++l) {
        VectorXd u = U.col(l);
        out.u.push_back(u / u.norm());
    }
    require(numerical_rank(stack_rows(out.u, n)) == L, "rank-repair-failed",
            "dual directions lost independence");

    out.max_ortho_resid = 0.0;
    out.min_pos_margin = std::numeric_limits<double>::infinity();
    for (const auto& u : out.u) {
        for (const auto& w : ortho)
            out.max_ortho_resid =
                std::max(out.max_ortho_resid, std::abs(u.dot(w)) / w.norm());
        for (const auto& w : positive)
            out.min_pos_margin = std::min(out.min_pos_margin, u.dot(w) / w.norm());
    }
    require(out.min_pos_margin > 0.0, "zero-margin",
            "a positivity target came out non-positive");
    return out;
}

// Perturb A by a small C, keeping row((C+A) B) = row(B). Retries with fresh
// draws (halving the magnitude every other attempt) until the numerical rank
// matches; identically zero B short-circuits to C = 0.
inline MatrixXd rowspace_preserving_perturb(const MatrixXd& A, const MatrixXd& B,
                                            double eps, Rng& rng) {
    require(A.cols() == B.rows(), "shape-mismatch", "A and B do not chain");
    require(eps > 0.0, "config-invalid", "perturbation budget must be positive");
    const Eigen::Index l1 = A.rows(), l2 = A.cols();
    if (B.isZero(0.0)) return MatrixXd::Zero(l1, l2);

    const int rb = numerical_rank(B);
    require(rb <= static_cast<int>(l1), "rank-exceeds-rows",
            "B has more independent rows than A can carry");

    for (int attempt = 0; attempt < 50; ++attempt) {
        double scale = eps / static_cast<double>(1ull << std::min(attempt / 2, 40));
        double bound = scale / (static_cast<double>(l1) * static_cast<double>(l2));
        MatrixXd C(l1, l2);
        for (Eigen::Index j = 0; j < l2; ++j)
            for (Eigen::Index i = 0; i < l1; ++i)
                C(i, j) = rng.uniform(-bound, bound);
        if (numerical_rank((C + A) * B) == rb) return C;
    }
    fail("max-retries-exhausted",
         "no rank-preserving perturbation found in 50 draws");
}

// min-norm solution of  min_V ||Y - V M||_F
inline MatrixXd least_squares(const MatrixXd& M, const MatrixXd& Y) {
    require(M.cols() == Y.cols(), "shape-mismatch",
            "design and label matrices disagree on sample count");
    Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(M.transpose());
    return cod.solve(Y.transpose()).transpose();
}

} // namespace minforge
