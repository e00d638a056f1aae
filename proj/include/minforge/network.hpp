#pragma once
#include <Eigen/Dense>
#include <vector>

#include "activation.hpp"
#include "errors.hpp"

namespace minforge {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Fully-connected net: hidden layers get a bias and the activation, the output
// layer is linear with no bias. Data matrices hold one sample per column.
struct Architecture {
    int d0 = 0;                // input dimension
    std::vector<int> hidden;   // d_1 .. d_H
    int d_out = 0;

    int depth() const { return static_cast<int>(hidden.size()); } // H

    // dim(0)=d0, dim(h)=d_h for hidden h, dim(H+1)=d_out
    int dim(int h) const {
        if (h == 0) return d0;
        if (h == depth() + 1) return d_out;
        return hidden[static_cast<std::size_t>(h - 1)];
    }

    void validate() const {
        require(d0 >= 1, "config-invalid", "input dimension must be >= 1");
        require(d_out >= 1, "config-invalid", "output dimension must be >= 1");
        require(!hidden.empty(), "config-invalid", "need at least one hidden layer");
        for (int w : hidden)
            require(w >= 1, "config-invalid", "hidden widths must be >= 1");
    }
};

struct NetworkParams {
    std::vector<MatrixXd> W; // W[0]=W_1 .. W[H]=W_{H+1}
    std::vector<VectorXd> b; // b[0]=b_1 .. b[H-1]=b_H   (no output bias)
};

struct Dataset {
    MatrixXd X; // d0 x N
    MatrixXd Y; // d_out x N
};

inline Architecture arch_of(const NetworkParams& p) {
    Architecture a;
    require(!p.W.empty() && p.W.size() == p.b.size() + 1, "shape-mismatch",
            "weights/biases layer counts disagree");
    a.d0 = static_cast<int>(p.W.front().cols());
    for (std::size_t h = 0; h + 1 < p.W.size(); ++h)
        a.hidden.push_back(static_cast<int>(p.W[h].rows()));
    a.d_out = static_cast<int>(p.W.back().rows());
    return a;
}

inline NetworkParams zero_params(const Architecture& arch) {
    arch.validate();
    NetworkParams p;
    int H = arch.depth();
    for (int h = 1; h <= H + 1; ++h)
        p.W.push_back(MatrixXd::Zero(arch.dim(h), arch.dim(h - 1)));
    for (int h = 1; h <= H; ++h) p.b.push_back(VectorXd::Zero(arch.dim(h)));
    return p;
}

inline void check_shapes(const NetworkParams& p, int d0, int n_cols_hint = -1) {
    require(p.W.size() == p.b.size() + 1, "shape-mismatch",
            "expected one more weight matrix than bias vectors");
    Eigen::Index prev = d0;
    for (std::size_t h = 0; h < p.W.size(); ++h) {
        require(p.W[h].cols() == prev, "shape-mismatch",
                "layer " + std::to_string(h + 1) + " input width mismatch");
        if (h < p.b.size())
            require(p.b[h].size() == p.W[h].rows(), "shape-mismatch",
                    "layer " + std::to_string(h + 1) + " bias length mismatch");
        prev = p.W[h].rows();
    }
    (void)n_cols_hint;
}

struct ForwardTrace {
    std::vector<MatrixXd> Z; // pre-activations, layers 1..H
    std::vector<MatrixXd> T; // activations,    layers 1..H
    MatrixXd out;            // W_{H+1} T_H
};

inline MatrixXd apply_act(const ActivationSpec& spec, const MatrixXd& Z) {
    MatrixXd T(Z.rows(), Z.cols());
    for (Eigen::Index j = 0; j < Z.cols(); ++j)
        for (Eigen::Index i = 0; i < Z.rows(); ++i)
            T(i, j) = act_eval(spec, Z(i, j)).v;
    return T;
}

inline ForwardTrace forward(const NetworkParams& p, const MatrixXd& X,
                            const ActivationSpec& spec) {
    check_shapes(p, static_cast<int>(X.rows()));
    ForwardTrace tr;
    std::size_t H = p.b.size();
    const MatrixXd* prev = &X;
    for (std::size_t h = 0; h < H; ++h) {
        MatrixXd Z = p.W[h] * (*prev);
        Z.colwise() += p.b[h];
        tr.Z.push_back(std::move(Z));
        tr.T.push_back(apply_act(spec, tr.Z.back()));
        prev = &tr.T.back();
    }
    tr.out = p.W[H] * (*prev);
    return tr;
}

// E = ||Y - out||_F^2, no normalization
inline double loss(const NetworkParams& p, const Dataset& d, const ActivationSpec& spec) {
    ForwardTrace tr = forward(p, d.X, spec);
    require(d.Y.rows() == tr.out.rows() && d.Y.cols() == tr.out.cols(),
            "shape-mismatch", "label matrix does not match network output");
    return (d.Y - tr.out).squaredNorm();
}

inline MatrixXd apply_act_d1(const ActivationSpec& spec, const MatrixXd& Z) {
    MatrixXd D(Z.rows(), Z.cols());
    for (Eigen::Index j = 0; j < Z.cols(); ++j)
        for (Eigen::Index i = 0; i < Z.rows(); ++i)
            D(i, j) = act_eval(spec, Z(i, j)).d1;
    return D;
}

// Reverse-mode gradient of the squared Frobenius loss in the same layout as
// the parameters themselves.
inline NetworkParams gradient(const NetworkParams& p, const Dataset& d,
                              const ActivationSpec& spec) {
    ForwardTrace tr = forward(p, d.X, spec);
    std::size_t H = p.b.size();
    NetworkParams g;
    g.W.resize(p.W.size());
    g.b.resize(p.b.size());

    MatrixXd G = 2.0 * (tr.out - d.Y); // dE/d out
    const MatrixXd& TH = H > 0 ? tr.T[H - 1] : d.X;
    g.W[H] = G * TH.transpose();

    MatrixXd D = p.W[H].transpose() * G; // running dE/dT_h
    for (std::size_t h = H; h-- > 0;) {
        D = D.cwiseProduct(apply_act_d1(spec, tr.Z[h]));
        const MatrixXd& Tin = h > 0 ? tr.T[h - 1] : d.X;
        g.W[h] = D * Tin.transpose();
        g.b[h] = D.rowwise().sum();
        if (h > 0) D = p.W[h].transpose() * D;
    }
    return g;
}

// ---- flat parameter-space helpers (sampling, norms, line search) ----------

template <typename Fn>
inline void for_each_param(NetworkParams& p, Fn&& fn) {
    for (auto& W : p.W)
        for (Eigen::Index j = 0; j < W.cols(); ++j)
            for (Eigen::Index i = 0; i < W.rows(); ++i) fn(W(i, j));
    for (auto& b : p.b)
        for (Eigen::Index i = 0; i < b.size(); ++i) fn(b(i));
}

template <typename Fn>
inline void for_each_param(const NetworkParams& p, Fn&& fn) {
    for (const auto& W : p.W)
        for (Eigen::Index j = 0; j < W.cols(); ++j)
            for (Eigen::Index i = 0; i < W.rows(); ++i) fn(W(i, j));
    for (const auto& b : p.b)
        for (Eigen::Index i = 0; i < b.size(); ++i) fn(b(i));
}

inline std::size_t param_count(const NetworkParams& p) {
    std::size_t n = 0;
    for_each_param(p, [&](double) { ++n; });
    return n;
}

inline double inf_norm(const NetworkParams& p) {
    double m = 0.0;
    for_each_param(p, [&](double v) { m = std::max(m, std::abs(v)); });
    return m;
}

// dst += alpha * src (matching shapes assumed)
inline void axpy(NetworkParams& dst, double alpha, const NetworkParams& src) {
    for (std::size_t h = 0; h < dst.W.size(); ++h) dst.W[h] += alpha * src.W[h];
    for (std::size_t h = 0; h < dst.b.size(); ++h) dst.b[h] += alpha * src.b[h];
}

// Central finite differences; the independent cross-check for `gradient`.
inline NetworkParams fd_gradient(const NetworkParams& p, const Dataset& d,
                                 const ActivationSpec& spec, double step = 1e-6) {
    NetworkParams g = p; // shapes
    NetworkParams work = p;
    std::vector<double*> slots, gslots;
    for_each_param(work, [&](double& v) { slots.push_back(&v); });
    for_each_param(g, [&](double& v) { gslots.push_back(&v); });
    for (std::size_t i = 0; i < slots.size(); ++i) {
        double keep = *slots[i];
        *slots[i] = keep + step;
        double up = loss(work, d, spec);
        *slots[i] = keep - step;
        double dn = loss(work, d, spec);
        *slots[i] = keep;
        *gslots[i] = (up - dn) / (2.0 * step);
    }
    return g;
}

} // namespace minforge
