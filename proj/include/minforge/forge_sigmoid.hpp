#pragma once
#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "activation.hpp"
#include "dualspace.hpp"
#include "errors.hpp"
#include "network.hpp"
#include "rng.hpp"

namespace minforge {

// ---------------------------------------------------------------------------
// One-dimensional sigmoid pipeline. A width-d1 net whose hidden units all
// share (w, b) collapses to one neuron; labels built against the probe duals
// make that neuron a strict local minimum that survives data perturbation and
// re-expansion to full width.
// ---------------------------------------------------------------------------

inline ActDerivs sig_eval(double t) { return act_eval(ActKind::sigmoid, t); }

// the six probe directions spanned by first/second-order variations of one
// sigmoid unit: sigma, sigma', sigma'.x, sigma'', sigma''.x, sigma''.x.x
struct ProbeSet {
    std::array<VectorXd, 6> probes;
    MatrixXd A;          // N x 6, probes as columns
    int rank = 0;
    double smin_ratio = 0.0; // smallest/largest singular value
};

inline void require_distinct(const VectorXd& x) {
    for (Eigen::Index i = 0; i < x.size(); ++i)
        for (Eigen::Index j = i + 1; j < x.size(); ++j)
            require(x(i) != x(j), "distinct-entries",
                    "input entries must be pairwise distinct");
}

inline ProbeSet build_probe_set(const VectorXd& x, double w, double b) {
    const Eigen::Index n = x.size();
    require(n >= 6, "width-too-small", "need at least six samples for the probe set");
    require_distinct(x);
    ProbeSet ps;
    VectorXd s(n), s1(n), s2(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        ActDerivs e = sig_eval(w * x(i) + b);
        s(i) = e.v;
        s1(i) = e.d1;
        s2(i) = e.d2;
    }
    ps.probes[0] = s;
    ps.probes[1] = s1;
    ps.probes[2] = s1.cwiseProduct(x);
    ps.probes[3] = s2;
    ps.probes[4] = s2.cwiseProduct(x);
    ps.probes[5] = s2.cwiseProduct(x).cwiseProduct(x);
    ps.A.resize(n, 6);
    for (int k = 0; k < 6; ++k) ps.A.col(k) = ps.probes[static_cast<std::size_t>(k)];
    Eigen::JacobiSVD<MatrixXd> svd(ps.A);
    const auto& sv = svd.singularValues();
    ps.rank = numerical_rank(ps.A);
    ps.smin_ratio = sv(0) > 0.0 ? sv(sv.size() - 1) / sv(0) : 0.0;
    return ps;
}

struct SigmoidConstruction {
    VectorXd x;       // N samples
    VectorXd y;       // labels
    VectorXd z;       // w x + b
    VectorXd v;       // d1 output weights, all same sign
    double w = 0.0, b = 0.0;
    VectorXd delta_y; // net(x) - y at the construction
    DualBasis dual;
    VectorXd alphas;  // L mixing coefficients (all equal to alpha_scale)
    ProbeSet probes;
    double loss = 0.0;
    double grad_inf_norm = 0.0;
};

// Per-neuron first-order residuals and curvature margins of the wide net.
struct NeuronConditions {
    MatrixXd eq_resid;    // d1 x 4 relative residuals
    MatrixXd ineq_margin; // d1 x 2 raw margins (positive when healthy)
    double max_eq_resid = 0.0;
    double min_margin = std::numeric_limits<double>::infinity();
    double min_margin_rel = std::numeric_limits<double>::infinity();
    bool holds = false;
};

inline NeuronConditions check_neuron_conditions(const VectorXd& v,
                                                const VectorXd& w,
                                                const VectorXd& b,
                                                const VectorXd& x,
                                                const VectorXd& y,
                                                double eq_tol = 1e-9) {
    const Eigen::Index d1 = v.size();
    require(w.size() == d1 && b.size() == d1, "shape-mismatch",
            "per-neuron parameter lengths disagree");
    const Eigen::Index n = x.size();

    // residual of the wide net at this point
    VectorXd out = VectorXd::Zero(n);
    std::vector<VectorXd> s(static_cast<std::size_t>(d1)), s1(static_cast<std::size_t>(d1)),
        s2(static_cast<std::size_t>(d1));
    for (Eigen::Index i = 0; i < d1; ++i) {
        VectorXd si(n), s1i(n), s2i(n);
        for (Eigen::Index k = 0; k < n; ++k) {
            ActDerivs e = sig_eval(w(i) * x(k) + b(i));
            si(k) = e.v;
            s1i(k) = e.d1;
            s2i(k) = e.d2;
        }
        out += v(i) * si;
        s[static_cast<std::size_t>(i)] = std::move(si);
        s1[static_cast<std::size_t>(i)] = std::move(s1i);
        s2[static_cast<std::size_t>(i)] = std::move(s2i);
    }
    VectorXd dy = out - y;
    double ndy = dy.norm();
    require(ndy > 0.0, "zero-margin", "residual is identically zero");

    NeuronConditions nc;
    nc.eq_resid.resize(d1, 4);
    nc.ineq_margin.resize(d1, 2);
    for (Eigen::Index i = 0; i < d1; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        VectorXd p0 = s[ui];
        VectorXd p1 = s1[ui];
        VectorXd p2 = v(i) * s1[ui].cwiseProduct(x);
        VectorXd p3 = v(i) * s2[ui].cwiseProduct(x);
        VectorXd q0 = v(i) * s2[ui];
        VectorXd q1 = v(i) * s2[ui].cwiseProduct(x).cwiseProduct(x);
        nc.eq_resid(i, 0) = std::abs(dy.dot(p0)) / (ndy * p0.norm());
        nc.eq_resid(i, 1) = std::abs(dy.dot(p1)) / (ndy * p1.norm());
        nc.eq_resid(i, 2) = std::abs(dy.dot(p2)) / (ndy * p2.norm());
        nc.eq_resid(i, 3) = std::abs(dy.dot(p3)) / (ndy * p3.norm());
        nc.ineq_margin(i, 0) = dy.dot(q0);
        nc.ineq_margin(i, 1) = dy.dot(q1);
        nc.min_margin_rel = std::min(
            {nc.min_margin_rel, dy.dot(q0) / (ndy * q0.norm()),
             dy.dot(q1) / (ndy * q1.norm())});
    }
    nc.max_eq_resid = nc.eq_resid.maxCoeff();
    nc.min_margin = nc.ineq_margin.minCoeff();
    nc.holds = nc.max_eq_resid <= eq_tol && nc.min_margin > 0.0;
    return nc;
}

inline SigmoidConstruction forge_sigmoid(const VectorXd& x, int d1,
                                         double alpha_scale, int v_sign,
                                         std::uint64_t seed) {
    const int n = static_cast<int>(x.size());
    require(n >= 6, "width-too-small", "need at least six samples");
    require(d1 >= n, "width-too-small",
            "hidden width must reach the sample count");
    require(v_sign == 1 || v_sign == -1, "config-invalid", "v sign must be +-1");
    require(alpha_scale > 0.0, "config-invalid", "alpha scale must be positive");
    require_distinct(x);

    Rng rng = Rng::for_stage(seed, stream::forge);

    SigmoidConstruction c;
    c.x = x;
    c.w = 1.0;
    c.b = 0.0;
    // default probe parameters first; fall back to seeded draws if the probe
    // matrix degenerates for this particular x
    bool ok = false;
    for (int attempt = 0; attempt < 20; ++attempt) {
        if (attempt > 0) {
            c.w = rng.normal(1.0, 0.5);
            c.b = rng.normal(0.0, 0.5);
            if (c.w == 0.0) continue;
        }
        c.probes = build_probe_set(x, c.w, c.b);
        if (c.probes.rank == 6) {
            ok = true;
            break;
        }
    }
    require(ok, "rank-deficient-A", "probe directions stayed dependent after 20 draws");

    c.z = c.w * x + VectorXd::Constant(n, c.b);

    // duals: orthogonal to sigma, sigma', sigma'.x, sigma''.x; positive against
    // sigma'' and sigma''.x.x
    std::vector<VectorXd> ortho = {c.probes.probes[0], c.probes.probes[1],
                                   c.probes.probes[2], c.probes.probes[4]};
    std::vector<VectorXd> positive = {c.probes.probes[3], c.probes.probes[5]};
    c.dual = dual_positive_vectors(ortho, positive, n);

    const int L = static_cast<int>(c.dual.u.size());
    c.alphas = VectorXd::Constant(L, alpha_scale);

    c.v.resize(d1);
    for (int i = 0; i < d1; ++i) c.v(i) = v_sign * rng.uniform(0.5, 1.5);

    VectorXd sz(n);
    for (int i = 0; i < n; ++i) sz(i) = sig_eval(c.z(i)).v;
    VectorXd t = c.v.sum() * sz;

    VectorXd mix = VectorXd::Zero(n);
    for (int l = 0; l < L; ++l) mix += c.alphas(l) * c.dual.u[static_cast<std::size_t>(l)];
    c.delta_y = c.v(0) * mix;
    c.y = t - c.delta_y;
    c.loss = c.delta_y.squaredNorm();

    // gradient of the wide net at the construction, via the generic machinery
    NetworkParams p;
    p.W.push_back(MatrixXd::Constant(d1, 1, c.w));
    p.b.push_back(VectorXd::Constant(d1, c.b));
    p.W.push_back(c.v.transpose());
    Dataset ds{x.transpose(), c.y.transpose()};
    ActivationSpec sig;
    sig.kind = ActKind::sigmoid;
    sig.anchor = 0.0;
    c.grad_inf_norm = inf_norm(gradient(p, ds, sig));

    NeuronConditions nc = check_neuron_conditions(
        c.v, VectorXd::Constant(d1, c.w), VectorXd::Constant(d1, c.b), x, c.y);
    require(nc.holds, "zero-margin",
            "constructed labels broke the per-neuron optimality system");
    return c;
}

// ---------------------------------------------------------------------------
// One-neuron problem: E1(v,w,b) = | y - v sigma(w x + b) |^2
// ---------------------------------------------------------------------------
struct OneNeuron {
    double v = 0.0, w = 0.0, b = 0.0;
};

inline double one_neuron_loss(const OneNeuron& p, const VectorXd& x, const VectorXd& y) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        double r = p.v * sig_eval(p.w * x(i) + p.b).v - y(i);
        acc += r * r;
    }
    return acc;
}

inline Eigen::Vector3d one_neuron_grad(const OneNeuron& p, const VectorXd& x,
                                       const VectorXd& y) {
    Eigen::Vector3d g = Eigen::Vector3d::Zero();
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        ActDerivs e = sig_eval(p.w * x(i) + p.b);
        double r = p.v * e.v - y(i);
        g(0) += 2.0 * r * e.v;
        g(1) += 2.0 * r * p.v * e.d1 * x(i);
        g(2) += 2.0 * r * p.v * e.d1;
    }
    return g;
}

inline Eigen::Matrix3d one_neuron_hess(const OneNeuron& p, const VectorXd& x,
                                       const VectorXd& y) {
    Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        ActDerivs e = sig_eval(p.w * x(i) + p.b);
        double r = p.v * e.v - y(i);
        double xi = x(i);
        h(0, 0) += 2.0 * e.v * e.v;
        h(0, 1) += 2.0 * (r + p.v * e.v) * e.d1 * xi;
        h(0, 2) += 2.0 * (r + p.v * e.v) * e.d1;
        h(1, 1) += 2.0 * p.v * (r * e.d2 * xi * xi + p.v * e.d1 * e.d1 * xi * xi);
        h(1, 2) += 2.0 * p.v * (r * e.d2 * xi + p.v * e.d1 * e.d1 * xi);
        h(2, 2) += 2.0 * p.v * (r * e.d2 + p.v * e.d1 * e.d1);
    }
    h(1, 0) = h(0, 1);
    h(2, 0) = h(0, 2);
    h(2, 1) = h(1, 2);
    return h;
}

// the (w, b) curvature block that carries the local-minimum argument
inline Eigen::Matrix2d wb_condition_matrix(const OneNeuron& p, const VectorXd& x,
                                           const VectorXd& y) {
    const Eigen::Index n = x.size();
    VectorXd s2(n);
    VectorXd dy(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        ActDerivs e = sig_eval(p.w * x(i) + p.b);
        s2(i) = e.d2;
        dy(i) = p.v * e.v - y(i);
    }
    Eigen::Matrix2d h;
    h(0, 0) = dy.dot(p.v * s2.cwiseProduct(x).cwiseProduct(x));
    h(0, 1) = dy.dot(p.v * s2.cwiseProduct(x));
    h(1, 0) = h(0, 1);
    h(1, 1) = dy.dot(p.v * s2);
    return h;
}

// closed-form eigenvalues of a symmetric 2x2 (the independent route; tests
// compare against Eigen's solver)
inline Eigen::Vector2d sym2x2_eigenvalues(const Eigen::Matrix2d& m) {
    double tr = m(0, 0) + m(1, 1);
    double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
    return {tr / 2.0 - disc, tr / 2.0 + disc};
}

struct MergedPoint {
    OneNeuron p;
    double grad_resid = 0.0;
    Eigen::Matrix2d H;
    Eigen::Vector2d H_eigs;
    double loss = 0.0;
};

// Collapse the shared-parameter wide net to one neuron. Output and loss are
// unchanged; stationarity must carry over or the input was not a construction.
inline MergedPoint merge_to_one_neuron(const SigmoidConstruction& c) {
    MergedPoint m;
    m.p.v = c.v.sum();
    m.p.w = c.w;
    m.p.b = c.b;
    m.grad_resid = one_neuron_grad(m.p, c.x, c.y).cwiseAbs().maxCoeff();
    require(m.grad_resid < 1e-9, "merge-breaks-stationarity",
            "merged neuron is not a stationary point");
    m.H = wb_condition_matrix(m.p, c.x, c.y);
    m.H_eigs = sym2x2_eigenvalues(m.H);
    require(m.H_eigs(0) > 0.0, "pd-lost", "merged curvature block not positive definite");
    m.loss = one_neuron_loss(m.p, c.x, c.y);
    return m;
}

// ---------------------------------------------------------------------------
// Data perturbation + relocation: nudge (x, y), then track the minimum with a
// damped second-order descent. The minimum is guaranteed to move only O(delta),
// so the solve is short and the endpoint must stay nearby.
// ---------------------------------------------------------------------------
struct RelocateResult {
    OneNeuron p;
    VectorXd x, y;        // the perturbed data
    int iterations = 0;
    double grad_resid = 0.0;
    Eigen::Matrix2d H;
    Eigen::Vector2d H_eigs;
    double distance = 0.0; // parameter-space move
    double loss = 0.0;
};

inline RelocateResult relocate_minimum(const OneNeuron& start, const VectorXd& x,
                                       const VectorXd& y, double move_budget) {
    RelocateResult r;
    r.x = x;
    r.y = y;
    OneNeuron p = start;
    double lambda = 1e-6;
    double cur = one_neuron_loss(p, x, y);
    int it = 0;
    int polish = 0;
    for (; it < 10000; ++it) {
        Eigen::Vector3d g = one_neuron_grad(p, x, y);
        if (g.cwiseAbs().maxCoeff() < 1e-10) break;
        Eigen::Matrix3d h = one_neuron_hess(p, x, y);
        bool stepped = false;
        for (int rej = 0; rej < 60; ++rej) {
            Eigen::Matrix3d hd = h + lambda * Eigen::Matrix3d::Identity();
            Eigen::Vector3d s = hd.ldlt().solve(-g);
            OneNeuron q{p.v + s(0), p.w + s(1), p.b + s(2)};
            double trial = one_neuron_loss(q, x, y);
            if (std::isfinite(trial) && trial < cur) {
                p = q;
                cur = trial;
                lambda = std::max(lambda / 10.0, 1e-12);
                stepped = true;
                break;
            }
            lambda *= 10.0;
        }
        if (!stepped) {
            // Near the quadratic bottom the next improvement sinks below the
            // loss's floating-point resolution while the gradient still sits
            // above target, so descent comparisons go blind. A plain Newton
            // step is a contraction there; take it if it is small and only
            // keep it when the gradient actually certifies convergence.
            Eigen::Vector3d s = h.ldlt().solve(-g);
            if (++polish <= 3 && s.cwiseAbs().maxCoeff() < 1e-6) {
                OneNeuron q{p.v + s(0), p.w + s(1), p.b + s(2)};
                if (one_neuron_grad(q, x, y).cwiseAbs().maxCoeff() < 1e-10) {
                    p = q;
                    cur = one_neuron_loss(p, x, y);
                    continue;
                }
            }
            fail("relocation-diverged", "damping exhausted without descent");
        }
    }
    require(it < 10000, "relocation-diverged", "iteration budget exhausted");

    r.p = p;
    r.iterations = it;
    r.grad_resid = one_neuron_grad(p, x, y).cwiseAbs().maxCoeff();
    r.H = wb_condition_matrix(p, x, y);
    r.H_eigs = sym2x2_eigenvalues(r.H);
    require(r.H_eigs(0) > 0.0, "pd-lost",
            "curvature block lost positive definiteness after relocation");
    double dv = p.v - start.v, dw = p.w - start.w, db = p.b - start.b;
    r.distance = std::sqrt(dv * dv + dw * dw + db * db);
    require(r.distance <= move_budget, "relocation-diverged",
            "minimum moved further than the data nudge allows");
    r.loss = cur;
    return r;
}

inline RelocateResult perturb_and_relocate(const OneNeuron& start,
                                           const VectorXd& x, const VectorXd& y,
                                           double delta_data, Rng& rng) {
    VectorXd xt = x, yt = y;
    for (Eigen::Index i = 0; i < x.size(); ++i)
        xt(i) += rng.uniform(-delta_data, delta_data);
    for (Eigen::Index i = 0; i < y.size(); ++i)
        yt(i) += rng.uniform(-delta_data, delta_data);
    require_distinct(xt);
    RelocateResult r = relocate_minimum(start, xt, yt, 10.0 * delta_data);
    return r;
}

// Re-expand the relocated neuron to width d1: all units share (w, b); the
// output weight is split along a strictly interior simplex point, so the wide
// net computes the identical function.
inline NetworkParams split_neuron(const OneNeuron& p, int d1, const VectorXd& q) {
    require(static_cast<int>(q.size()) == d1, "shape-mismatch",
            "simplex point length must equal the width");
    double sum = 0.0;
    for (Eigen::Index i = 0; i < q.size(); ++i) {
        require(q(i) > 0.0 && q(i) < 1.0, "q-outside-simplex",
                "each split share must lie strictly inside (0, 1)");
        sum += q(i);
    }
    require(std::abs(sum - 1.0) <= 1e-12, "q-outside-simplex",
            "split shares must sum to one");
    NetworkParams wide;
    wide.W.push_back(MatrixXd::Constant(d1, 1, p.w));
    wide.b.push_back(VectorXd::Constant(d1, p.b));
    wide.W.push_back((p.v * q).transpose());
    return wide;
}

inline VectorXd random_simplex_point(int d1, Rng& rng) {
    VectorXd q(d1);
    for (int i = 0; i < d1; ++i) q(i) = rng.uniform(0.5, 1.5);
    q /= q.sum();
    return q;
}

} // namespace minforge
