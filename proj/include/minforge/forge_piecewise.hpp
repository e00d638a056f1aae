#pragma once
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "activation.hpp"
#include "dualspace.hpp"
#include "errors.hpp"
#include "network.hpp"
#include "rng.hpp"

namespace minforge {

// ---------------------------------------------------------------------------
// Piecewise-linear pipeline. All hidden pre-activations are parked strictly
// inside one linear segment of the activation, so the net is locally an affine
// map of the data; the output layer is the exact least-squares fit, and the
// labels' unreachable component makes the minimum sub-optimal but locked.
// ---------------------------------------------------------------------------

struct Assumption3Report {
    bool ok = false;
    bool segment_ok = false;
    bool widths_ok = false;
    bool rank_gap_ok = false;
    int rank_data = 0; // rank [X; 1]
    int rank_aug = 0;  // rank [X; 1; Y]
    std::string note;
};

inline MatrixXd with_ones_row(const MatrixXd& X) {
    MatrixXd M(X.rows() + 1, X.cols());
    M.topRows(X.rows()) = X;
    M.row(X.rows()).setOnes();
    return M;
}

inline Assumption3Report check_assumption3(const MatrixXd& X, const MatrixXd& Y,
                                           const std::vector<int>& hidden,
                                           const ActivationSpec& spec) {
    Assumption3Report rep;
    rep.segment_ok = spec.piecewise();
    if (rep.segment_ok) {
        try {
            validate_anchor(spec);
        } catch (const forge_error&) {
            rep.segment_ok = false;
        }
    }
    rep.widths_ok = !hidden.empty();
    for (int w : hidden)
        if (w <= static_cast<int>(X.rows())) rep.widths_ok = false;
    MatrixXd D = with_ones_row(X);
    MatrixXd Aug(D.rows() + Y.rows(), X.cols());
    Aug.topRows(D.rows()) = D;
    Aug.bottomRows(Y.rows()) = Y;
    rep.rank_data = numerical_rank(D);
    rep.rank_aug = numerical_rank(Aug);
    rep.rank_gap_ok = rep.rank_aug > rep.rank_data;
    rep.ok = rep.segment_ok && rep.widths_ok && rep.rank_gap_ok;
    if (!rep.segment_ok)
        rep.note = "activation spec does not describe a valid linear segment";
    else if (!rep.widths_ok)
        rep.note = "every hidden width must exceed the input dimension";
    else if (!rep.rank_gap_ok)
        rep.note = "labels lie in the affine span of the data (no unreachable part)";
    return rep;
}

// smallest distance of any hidden pre-activation to the segment boundary
inline double segment_margin(const NetworkParams& p, const MatrixXd& X,
                             const ActivationSpec& spec) {
    require(spec.piecewise(), "config-invalid", "segment margin needs a linear segment");
    ForwardTrace tr = forward(p, X, spec);
    double m = std::numeric_limits<double>::infinity();
    for (const auto& Z : tr.Z)
        m = std::min(m, spec.delta - (Z.array() - spec.anchor).abs().maxCoeff());
    return m;
}

struct PiecewiseConstruction {
    Architecture arch;
    ActivationSpec spec;
    NetworkParams params;
    Dataset data;
    std::string branch;        // "degenerate" or "non-degenerate"
    double loss = 0.0;
    double ref_residual = 0.0; // independently computed projection residual
    double min_segment_margin = 0.0;
    double grad_inf_norm = 0.0;
    int rank_data = 0;
    int rank_aug = 0;
    int rank_hidden = 0;       // rank of T_H, equals rank_data off the degenerate branch
};

inline PiecewiseConstruction forge_piecewise(const MatrixXd& X, const MatrixXd& Y,
                                             std::vector<int> hidden,
                                             const ActivationSpec& spec,
                                             std::uint64_t seed) {
    Assumption3Report a3 = check_assumption3(X, Y, hidden, spec);
    require(a3.ok, "assumption-unsatisfiable", a3.note);

    PiecewiseConstruction c;
    c.arch.d0 = static_cast<int>(X.rows());
    c.arch.hidden = std::move(hidden);
    c.arch.d_out = static_cast<int>(Y.rows());
    c.arch.validate();
    c.spec = spec;
    c.data.X = X;
    c.data.Y = Y;
    c.rank_data = a3.rank_data;
    c.rank_aug = a3.rank_aug;

    const int H = c.arch.depth();
    const int n = static_cast<int>(X.cols());
    const double alpha = *spec.slope;
    const double beta = *spec.offset;
    const double a = spec.anchor;

    Rng rng = Rng::for_stage(seed, stream::forge);
    c.params = zero_params(c.arch);

    if (alpha == 0.0) {
        // flat segment: the activations are frozen at beta, every hidden layer
        // outputs the constant matrix, and the best the output layer can do is
        // regress Y on that constant block
        c.branch = "degenerate";
        for (int h = 1; h <= H; ++h)
            c.params.b[static_cast<std::size_t>(h - 1)] =
                VectorXd::Constant(c.arch.dim(h), a);
        MatrixXd TH = MatrixXd::Constant(c.arch.dim(H), n, beta);
        c.params.W.back() = least_squares(TH, Y);
        c.rank_hidden = numerical_rank(TH);

        // reference: residual of Y against the row space of beta * ones, which
        // is span{ones} when beta != 0 and the zero space when beta == 0
        if (beta != 0.0) {
            VectorXd ones = VectorXd::Ones(n);
            MatrixXd proj = (Y * ones) * ones.transpose() / static_cast<double>(n);
            c.ref_residual = (Y - proj).squaredNorm();
        } else {
            c.ref_residual = Y.squaredNorm();
        }
    } else {
        c.branch = "non-degenerate";
        // walk the layers, each time perturbing the affine pass-through map so
        // the row space of the data survives exactly
        MatrixXd Tprev = X;
        for (int h = 1; h <= H; ++h) {
            const int dh = c.arch.dim(h);
            const int dprev = static_cast<int>(Tprev.rows());
            MatrixXd B = alpha * with_ones_row(Tprev);
            MatrixXd A = MatrixXd::Zero(dh, dprev + 1);
            A.col(dprev).setConstant(beta / alpha);
            double scale_guard =
                h == 1 ? std::max(X.norm(), 1.0) : Tprev.norm();
            double eps = std::min(spec.delta / (2.0 * scale_guard),
                                  spec.delta / (2.0 * n));
            MatrixXd C = rowspace_preserving_perturb(A, B, eps, rng);
            c.params.W[static_cast<std::size_t>(h - 1)] = C.leftCols(dprev);
            c.params.b[static_cast<std::size_t>(h - 1)] =
                VectorXd::Constant(dh, a) + C.col(dprev);
            MatrixXd Z = c.params.W[static_cast<std::size_t>(h - 1)] * Tprev;
            Z.colwise() += c.params.b[static_cast<std::size_t>(h - 1)];
            require((Z.array() - a).abs().maxCoeff() < spec.delta, "segment-escape",
                    "a pre-activation left the linear segment");
            Tprev = apply_act(spec, Z);
        }
        // the hidden stack must preserve the affine row space of the data
        c.rank_hidden = numerical_rank(Tprev);
        MatrixXd D = with_ones_row(X);
        MatrixXd joint(Tprev.rows() + D.rows(), n);
        joint.topRows(Tprev.rows()) = Tprev;
        joint.bottomRows(D.rows()) = D;
        require(c.rank_hidden == c.rank_data &&
                    numerical_rank(joint) == c.rank_data,
                "rank-repair-failed", "hidden stack did not preserve the data span");

        c.params.W.back() = least_squares(Tprev, Y);

        // reference: what any affine map of the data could reach at best
        MatrixXd P = least_squares(D, Y);
        c.ref_residual = (Y - P * D).squaredNorm();
    }

    c.loss = loss(c.params, c.data, spec);
    c.min_segment_margin = segment_margin(c.params, X, spec);
    require(c.min_segment_margin > 0.0, "segment-escape",
            "constructed point sits on the segment boundary");
    c.grad_inf_norm = inf_norm(gradient(c.params, c.data, spec));
    require(c.loss > 0.0, "zero-margin",
            "constructed loss vanished; the rank gap should forbid this");
    return c;
}

} // namespace minforge
