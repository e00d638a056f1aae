#pragma once
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "certify.hpp"
#include "forge_piecewise.hpp"
#include "forge_sigmoid.hpp"
#include "forge_smooth.hpp"
#include "serialize.hpp"

namespace minforge {

// ---------------------------------------------------------------------------
// Data generation. Draws are rejected until the pipeline's preconditions hold,
// so downstream stages can assume them.
// ---------------------------------------------------------------------------
inline MatrixXd gen_smooth_inputs(int d0, int n, const std::string& dist,
                                  std::uint64_t seed) {
    require(dist == "normal" || dist == "uniform", "config-invalid",
            "distribution must be normal or uniform");
    Rng rng = Rng::for_stage(seed, stream::data);
    for (int attempt = 0; attempt < 100; ++attempt) {
        MatrixXd X(d0, n);
        for (Eigen::Index j = 0; j < X.cols(); ++j)
            for (Eigen::Index i = 0; i < X.rows(); ++i)
                X(i, j) = dist == "normal" ? rng.normal() : rng.uniform(-1.0, 1.0);
        if (check_assumption1(X).ok) return X;
    }
    fail("assumption1-failed",
         "no admissible input draw in 100 attempts; is d0^2/2 + 3 d0/2 < N?");
}

// "canonical" is the integer grid 0..n-1: spread inputs keep the curvature
// probes well conditioned, where tight standard-normal draws concentrate the
// pre-activations where the second derivative vanishes and the dual margins
// collapse below what data perturbations can respect.
inline VectorXd gen_sigmoid_inputs(int n, const std::string& dist,
                                   std::uint64_t seed) {
    require(dist == "canonical" || dist == "normal" || dist == "uniform",
            "config-invalid", "distribution must be canonical, normal or uniform");
    if (dist == "canonical") return VectorXd::LinSpaced(n, 0.0, n - 1.0);
    Rng rng = Rng::for_stage(seed, stream::data);
    for (int attempt = 0; attempt < 100; ++attempt) {
        VectorXd x(n);
        for (Eigen::Index i = 0; i < n; ++i)
            x(i) = dist == "normal" ? rng.normal() : rng.uniform(-1.0, 1.0);
        bool distinct = true;
        for (Eigen::Index i = 0; i < n && distinct; ++i)
            for (Eigen::Index j = i + 1; j < n; ++j)
                if (x(i) == x(j)) { distinct = false; break; }
        if (distinct) return x;
    }
    fail("distinct-entries", "no draw with pairwise distinct entries in 100 attempts");
}

// labels for the piecewise pipeline: generic draws, rejected until they leave
// the affine span of the data
inline MatrixXd gen_piecewise_labels(const MatrixXd& X, int d_out,
                                     const std::vector<int>& hidden,
                                     const ActivationSpec& spec, std::uint64_t seed) {
    Rng rng = Rng::for_stage(seed, stream::data + 7);
    for (int attempt = 0; attempt < 100; ++attempt) {
        MatrixXd Y(d_out, X.cols());
        for (Eigen::Index j = 0; j < Y.cols(); ++j)
            for (Eigen::Index i = 0; i < Y.rows(); ++i) Y(i, j) = rng.normal();
        if (check_assumption3(X, Y, hidden, spec).rank_gap_ok) return Y;
    }
    fail("assumption-unsatisfiable", "labels kept landing in the data span");
}

// ---------------------------------------------------------------------------
// One full smooth-pipeline run: forge, certify (witness direction included),
// half-space probe, optional descent baseline.
// ---------------------------------------------------------------------------
// When the sign-preservation cap lands below a radius of interest, the basin
// usually extends much further than the cap (the cap guards the proof region,
// not the loss surface). The floor check samples one extra uncapped level at
// that radius and records what it saw.
struct FloorCheck {
    double radius = 0.0;
    double min_delta = 0.0;
    long tested = 0;
    bool clean = false; // no decrease beyond the noise floor
};

struct SmoothRun {
    SmoothConstruction c;
    Certificate cert;
    HalfspaceReport halfspace;
    std::optional<FloorCheck> floor;
    std::optional<BaselineResult> baseline;
};

inline SmoothRun run_smooth(const MatrixXd& X, const std::vector<int>& hidden,
                            int d_out, const ActivationSpec& spec,
                            double alpha_scale, std::uint64_t seed, long k_samples,
                            double r0, bool with_baseline,
                            const BaselineConfig& bcfg = {},
                            double radius_floor = 0.0) {
    SmoothRun run;
    run.c = forge_smooth(X, hidden, d_out, spec, alpha_scale, seed);

    NetworkParams wdir = run.c.witness.params;
    axpy(wdir, -1.0, run.c.params);

    CertifyOptions opt;
    opt.samples = k_samples;
    opt.r0 = r0;
    opt.seed = seed;
    opt.radius_cap = sign_preservation_cap(run.c.params);
    run.cert = certify_local_min(run.c.params, run.c.data, spec, opt, &wdir);

    if (radius_floor > 0.0 && run.cert.verdict == "certified-local-min" &&
        run.cert.certified_radius < radius_floor) {
        CertifyOptions fopt;
        fopt.samples = k_samples;
        fopt.r0 = radius_floor;
        fopt.r_min = radius_floor / 2; // exactly one level
        fopt.seed = seed;
        Certificate fc = certify_local_min(run.c.params, run.c.data, spec, fopt, &wdir);
        run.floor = FloorCheck{radius_floor, fc.min_loss_delta, fc.samples_tested,
                               fc.verdict == "certified-local-min"};
    }

    double hs_radius = run.cert.certified_radius > 0.0 ? run.cert.certified_radius
                                                       : opt.r0;
    if (run.floor && run.floor->clean) hs_radius = std::max(hs_radius, run.floor->radius);
    run.halfspace =
        halfspace_check(run.c.params, run.c.data, spec, k_samples, hs_radius, seed);

    if (with_baseline)
        run.baseline = train_baseline(run.c.arch, run.c.data, spec, bcfg, seed);
    return run;
}

// ---------------------------------------------------------------------------
// Sigmoid pipeline trial: perturb the data, relocate the one-neuron minimum,
// split it wide, certify the wide point, and race the baseline against it.
// ---------------------------------------------------------------------------
struct SigmoidTrial {
    int index = 0;
    bool ok = false;
    std::string fail_reason;
    RelocateResult reloc;
    VectorXd q;
    NetworkParams wide;
    double wide_loss = 0.0;
    double split_resid = 0.0; // max output difference one-neuron vs wide
    Certificate cert;
    BaselineResult baseline;
};

inline SigmoidTrial run_sigmoid_trial(const MergedPoint& merged, const VectorXd& x,
                                      const VectorXd& y, int d1, int index,
                                      double delta_data, std::uint64_t seed,
                                      long k_samples, double r0,
                                      double baseline_fraction) {
    SigmoidTrial t;
    t.index = index;
    Rng rng = Rng::for_stage(seed, stream::trial + 1000 + static_cast<std::uint64_t>(index));
    try {
        t.reloc = perturb_and_relocate(merged.p, x, y, delta_data, rng);
        t.q = random_simplex_point(d1, rng);
        t.wide = split_neuron(t.reloc.p, d1, t.q);

        Dataset ds{t.reloc.x.transpose(), t.reloc.y.transpose()};
        ActivationSpec sig;
        sig.kind = ActKind::sigmoid;

        // the split must not move the function
        ForwardTrace tr = forward(t.wide, ds.X, sig);
        for (Eigen::Index i = 0; i < t.reloc.x.size(); ++i) {
            double one = t.reloc.p.v * sig_eval(t.reloc.p.w * t.reloc.x(i) + t.reloc.p.b).v;
            t.split_resid = std::max(t.split_resid, std::abs(tr.out(0, i) - one));
        }
        require(t.split_resid <= 1e-12, "shape-mismatch",
                "splitting changed the network function");
        t.wide_loss = loss(t.wide, ds, sig);

        CertifyOptions opt;
        opt.samples = k_samples;
        opt.r0 = r0;
        opt.seed = Rng::derive(seed, 2000 + static_cast<std::uint64_t>(index));
        t.cert = certify_local_min(t.wide, ds, sig, opt);

        BaselineConfig bcfg;
        bcfg.stop_below = baseline_fraction * t.wide_loss;
        Architecture arch{1, {d1}, 1};
        t.baseline = train_baseline(arch, ds, sig, bcfg,
                                    Rng::derive(seed, 3000 + static_cast<std::uint64_t>(index)));
        t.ok = t.cert.verdict == "certified-local-min" &&
               t.baseline.best_loss < baseline_fraction * t.wide_loss;
        if (!t.ok)
            t.fail_reason = t.cert.verdict != "certified-local-min"
                                ? "certification: " + t.cert.verdict
                                : "baseline did not undercut the construction";
    } catch (const forge_error& e) {
        t.ok = false;
        t.fail_reason = e.what();
    }
    return t;
}

// ---------------------------------------------------------------------------
// Piecewise run.
// ---------------------------------------------------------------------------
struct PiecewiseRun {
    PiecewiseConstruction c;
    Certificate cert;
    HalfspaceReport halfspace;
};

inline PiecewiseRun run_piecewise(const MatrixXd& X, const MatrixXd& Y,
                                  const std::vector<int>& hidden,
                                  const ActivationSpec& spec, std::uint64_t seed,
                                  long k_samples, double r0) {
    PiecewiseRun run;
    run.c = forge_piecewise(X, Y, hidden, spec, seed);
    CertifyOptions opt;
    opt.samples = k_samples;
    opt.r0 = r0;
    opt.seed = seed;
    opt.radius_cap = piecewise_radius_cap(run.c.min_segment_margin, run.c.params);
    run.cert = certify_local_min(run.c.params, run.c.data, spec, opt);
    double hs_radius =
        run.cert.certified_radius > 0.0 ? run.cert.certified_radius : *opt.radius_cap;
    run.halfspace =
        halfspace_check(run.c.params, run.c.data, spec, k_samples, hs_radius, seed);
    return run;
}

// ---------------------------------------------------------------------------
// Summary CSV. Fixed header; optional fields stay empty. The trailing config
// hash pins the exact configuration a row came from.
// ---------------------------------------------------------------------------
inline const char* csv_header() {
    return "seed,pipeline,activation,d0,N,widths,loss_at_theta,witness_gap,"
           "grad_residual,certified_radius,min_loss_delta,halfspace_margin,"
           "baseline_loss,verdict,config_hash";
}

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hash_hex(const std::string& s) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a(s)));
    return buf;
}

struct CsvRow {
    std::uint64_t seed = 0;
    std::string pipeline;
    std::string activation;
    int d0 = 0;
    int n = 0;
    std::vector<int> widths;
    double loss_at_theta = 0.0;
    std::optional<double> witness_gap;
    double grad_residual = 0.0;
    double certified_radius = 0.0;
    double min_loss_delta = 0.0;
    std::optional<double> halfspace_margin;
    std::optional<double> baseline_loss;
    std::string verdict;
    std::string config_hash;
};

inline std::string widths_string(const std::vector<int>& widths) {
    std::string s;
    for (std::size_t i = 0; i < widths.size(); ++i) {
        if (i) s += 'x';
        s += std::to_string(widths[i]);
    }
    return s;
}

inline std::string csv_line(const CsvRow& r) {
    std::ostringstream os;
    auto opt = [](const std::optional<double>& v) {
        return v ? num17(*v) : std::string();
    };
    os << r.seed << ',' << r.pipeline << ',' << r.activation << ',' << r.d0 << ','
       << r.n << ',' << widths_string(r.widths) << ',' << num17(r.loss_at_theta)
       << ',' << opt(r.witness_gap) << ',' << num17(r.grad_residual) << ','
       << num17(r.certified_radius) << ',' << num17(r.min_loss_delta) << ','
       << opt(r.halfspace_margin) << ',' << opt(r.baseline_loss) << ','
       << r.verdict << ',' << r.config_hash;
    return os.str();
}

} // namespace minforge
