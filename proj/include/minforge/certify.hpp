#pragma once
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "network.hpp"
#include "rng.hpp"

namespace minforge {

constexpr double certified_grad_tol = 1e-8;
constexpr double loss_decrease_tol = 1e-12;  // below this a dip counts as noise
constexpr double refute_margin = 1e-10;      // above this a dip counts as proof

struct CertifyOptions {
    long samples = 20000;   // random perturbations per radius level
    double r0 = 1e-2;       // first radius
    double r_min = 1e-7;    // levels strictly above this are tested
    std::optional<double> radius_cap; // e.g. sign-preservation bound
    std::uint64_t seed = 0;
};

struct LevelReport {
    double radius = 0.0;
    double min_delta = 0.0; // most negative loss change seen at this level
    long tested = 0;
};

struct Certificate {
    std::string verdict; // certified-local-min | refuted | inconclusive
    double loss_at_point = 0.0;
    double gradient_residual = 0.0;
    double certified_radius = 0.0; // 0 unless certified
    double min_loss_delta = 0.0;   // at the certified level
    long samples_tested = 0;
    std::vector<LevelReport> levels;
    bool has_counterexample = false;
    NetworkParams counterexample;
    double counterexample_loss = 0.0;
    double counterexample_radius = 0.0;
};

namespace detail {

// deterministic set of directions every level probes in addition to the
// random draws: the descent direction, each output-layer axis, and the
// caller's witness direction when given
inline std::vector<NetworkParams> structured_directions(
    const NetworkParams& p, const NetworkParams& grad,
    const NetworkParams* witness_dir) {
    std::vector<NetworkParams> dirs;
    if (inf_norm(grad) > 0.0) {
        NetworkParams d = grad;
        for_each_param(d, [](double& v) { v = -v; });
        dirs.push_back(std::move(d));
    }
    const MatrixXd& Wout = p.W.back();
    for (Eigen::Index j = 0; j < Wout.cols(); ++j)
        for (Eigen::Index i = 0; i < Wout.rows(); ++i)
            for (double sgn : {1.0, -1.0}) {
                NetworkParams d = zero_params(arch_of(p));
                d.W.back()(i, j) = sgn;
                dirs.push_back(std::move(d));
            }
    if (witness_dir != nullptr && inf_norm(*witness_dir) > 0.0)
        dirs.push_back(*witness_dir);
    return dirs;
}

} // namespace detail

// Sample the loss on infinity-balls of shrinking radius. A level is clean when
// no probe beats the noise floor; a decisive drop anywhere marks the point
// refutable if no smaller level comes back clean.
inline Certificate certify_local_min(const NetworkParams& params, const Dataset& data,
                                     const ActivationSpec& spec,
                                     const CertifyOptions& opt,
                                     const NetworkParams* witness_dir = nullptr) {
    Certificate cert;
    cert.loss_at_point = loss(params, data, spec);
    NetworkParams grad = gradient(params, data, spec);
    cert.gradient_residual = inf_norm(grad);

    Rng rng = Rng::for_stage(opt.seed, stream::certify);
    std::vector<NetworkParams> fixed =
        detail::structured_directions(params, grad, witness_dir);

    double best_drop = 0.0; // most negative delta seen across all levels
    double r = opt.r0;
    if (opt.radius_cap) r = std::min(r, *opt.radius_cap);
    require(r > 0.0, "config-invalid", "initial radius must be positive");

    bool certified = false;
    // repeated /= 10 drifts a few ulp high, which would sneak in a level at
    // r_min itself; pad the floor so "strictly above" survives the rounding
    while (r > opt.r_min * (1.0 + 1e-9)) {
        LevelReport lvl;
        lvl.radius = r;
        lvl.min_delta = std::numeric_limits<double>::infinity();
        NetworkParams probe = params;

        auto consider = [&](const NetworkParams& q) {
            double d = loss(q, data, spec) - cert.loss_at_point;
            ++lvl.tested;
            if (d < lvl.min_delta) lvl.min_delta = d;
            if (d < best_drop) {
                best_drop = d;
                cert.counterexample = q;
                cert.counterexample_loss = cert.loss_at_point + d;
                cert.counterexample_radius = r;
                cert.has_counterexample = true;
            }
        };

        for (const auto& dir : fixed) {
            double scale = r / inf_norm(dir);
            probe = params;
            axpy(probe, scale, dir);
            consider(probe);
        }
        for (long k = 0; k < opt.samples; ++k) {
            probe = params;
            for_each_param(probe, [&](double& v) { v += rng.uniform(-r, r); });
            consider(probe);
        }

        cert.samples_tested += lvl.tested;
        cert.levels.push_back(lvl);
        if (lvl.min_delta >= -loss_decrease_tol) {
            certified = true;
            cert.certified_radius = r;
            cert.min_loss_delta = lvl.min_delta;
            break;
        }
        r /= 10.0;
    }

    if (certified) {
        // sampling is only half the claim; a locally minimal point must also
        // be stationary to near fp precision
        cert.verdict = cert.gradient_residual < certified_grad_tol
                           ? "certified-local-min"
                           : "inconclusive";
        if (cert.verdict == "certified-local-min") {
            cert.has_counterexample = false; // drops at larger radii are moot
            cert.counterexample = NetworkParams{};
        }
    } else if (best_drop < -refute_margin) {
        cert.verdict = "refuted";
        cert.min_loss_delta = best_drop;
    } else {
        cert.verdict = "inconclusive";
        cert.min_loss_delta = best_drop;
    }
    return cert;
}

// Smooth pipeline: perturbations must not flip the sign of any positive deep
// weight, so the sampling radius is capped at half the smallest of them.
// First-layer weights are unconstrained (the construction sets them to zero).
inline std::optional<double> sign_preservation_cap(const NetworkParams& p) {
    const std::size_t H = p.b.size();
    if (H <= 1) return std::nullopt;
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t h = 1; h < H; ++h) {
        const MatrixXd& W = p.W[h];
        for (Eigen::Index j = 0; j < W.cols(); ++j)
            for (Eigen::Index i = 0; i < W.rows(); ++i)
                if (W(i, j) > 0.0) m = std::min(m, W(i, j));
    }
    if (!std::isfinite(m)) return std::nullopt;
    return m / 2.0;
}

// Piecewise pipeline: perturbations must keep every pre-activation inside the
// linear segment; the margin shrinks at worst linearly in the weight norms.
inline double piecewise_radius_cap(double min_segment_margin,
                                   const NetworkParams& p) {
    double wmax = 0.0;
    for (std::size_t h = 0; h < p.b.size(); ++h)
        wmax = std::max(wmax, p.W[h].norm());
    return min_segment_margin / (1.0 + wmax);
}

// ---------------------------------------------------------------------------
// Half-space check: at a constructed point, every perturbation's output move
// must land on the far side of the residual. <Yhat - Y, Yhat' - Yhat> >= 0 up
// to noise, sampled.
// ---------------------------------------------------------------------------
struct HalfspaceReport {
    double min_margin = std::numeric_limits<double>::infinity();
    long samples = 0;
};

inline HalfspaceReport halfspace_check(const NetworkParams& params,
                                       const Dataset& data,
                                       const ActivationSpec& spec, long k,
                                       double radius, std::uint64_t seed) {
    HalfspaceReport rep;
    ForwardTrace tr = forward(params, data.X, spec);
    MatrixXd resid = tr.out - data.Y;
    Rng rng = Rng::for_stage(seed, stream::certify + 101);
    NetworkParams probe = params;
    for (long i = 0; i < k; ++i) {
        probe = params;
        for_each_param(probe, [&](double& v) { v += rng.uniform(-radius, radius); });
        ForwardTrace trp = forward(probe, data.X, spec);
        double margin = resid.cwiseProduct(trp.out - tr.out).sum();
        rep.min_margin = std::min(rep.min_margin, margin);
        ++rep.samples;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Baseline: plain momentum descent from scaled random starts. Exists to show
// the constructed losses sit far above what ordinary training reaches.
// ---------------------------------------------------------------------------
struct BaselineConfig {
    int restarts = 8;
    long steps = 50000;
    double step = 1e-2;
    double momentum = 0.9;
    double init_scale = 0.5;
    double stop_below = 0.0; // early-exit threshold; 0 disables
};

struct BaselineResult {
    double best_loss = std::numeric_limits<double>::infinity();
    std::vector<double> restart_losses;
    long total_steps = 0;
};

inline BaselineResult train_baseline(const Architecture& arch, const Dataset& data,
                                     const ActivationSpec& spec,
                                     const BaselineConfig& cfg, std::uint64_t seed) {
    BaselineResult res;
    Rng rng = Rng::for_stage(seed, stream::baseline);
    for (int rs = 0; rs < cfg.restarts; ++rs) {
        NetworkParams p = zero_params(arch);
        for (std::size_t h = 0; h < p.W.size(); ++h) {
            double fan = std::sqrt(static_cast<double>(p.W[h].cols()));
            for (Eigen::Index j = 0; j < p.W[h].cols(); ++j)
                for (Eigen::Index i = 0; i < p.W[h].rows(); ++i)
                    p.W[h](i, j) = cfg.init_scale * rng.normal() / fan;
        }
        for (auto& b : p.b)
            for (Eigen::Index i = 0; i < b.size(); ++i)
                b(i) = cfg.init_scale * rng.normal();

        NetworkParams vel = zero_params(arch);
        double cur = loss(p, data, spec);
        bool dead = false;
        for (long s = 0; s < cfg.steps && !dead; ++s) {
            NetworkParams g = gradient(p, data, spec);
            for (std::size_t h = 0; h < vel.W.size(); ++h)
                vel.W[h] = cfg.momentum * vel.W[h] - cfg.step * g.W[h];
            for (std::size_t h = 0; h < vel.b.size(); ++h)
                vel.b[h] = cfg.momentum * vel.b[h] - cfg.step * g.b[h];
            axpy(p, 1.0, vel);
            ++res.total_steps;
            cur = loss(p, data, spec);
            if (!std::isfinite(cur)) dead = true;
            if (cfg.stop_below > 0.0 && cur < cfg.stop_below) break;
        }
        double fin = dead ? std::numeric_limits<double>::infinity() : cur;
        res.restart_losses.push_back(fin);
        res.best_loss = std::min(res.best_loss, fin);
        if (cfg.stop_below > 0.0 && res.best_loss < cfg.stop_below) break;
    }
    return res;
}

} // namespace minforge
