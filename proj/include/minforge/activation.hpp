#pragma once
#include <cmath>
#include <optional>
#include <string>

#include "errors.hpp"

namespace minforge {

enum class ActKind {
    sigmoid,
    tanh_k,
    softplus,
    swish,
    elu,
    selu,
    relu,
    leaky_relu,
    linear,
};

inline const char* to_string(ActKind k) {
    switch (k) {
        case ActKind::sigmoid:    return "sigmoid";
        case ActKind::tanh_k:     return "tanh";
        case ActKind::softplus:   return "softplus";
        case ActKind::swish:      return "swish";
        case ActKind::elu:        return "elu";
        case ActKind::selu:       return "selu";
        case ActKind::relu:       return "relu";
        case ActKind::leaky_relu: return "leaky-relu";
        case ActKind::linear:     return "linear";
    }
    return "?";
}

inline ActKind act_kind_from_string(const std::string& s) {
    if (s == "sigmoid")    return ActKind::sigmoid;
    if (s == "tanh")       return ActKind::tanh_k;
    if (s == "softplus")   return ActKind::softplus;
    if (s == "swish")      return ActKind::swish;
    if (s == "elu")        return ActKind::elu;
    if (s == "selu")       return ActKind::selu;
    if (s == "relu")       return ActKind::relu;
    if (s == "leaky-relu" || s == "leaky_relu") return ActKind::leaky_relu;
    if (s == "linear")     return ActKind::linear;
    fail("config-invalid", "unknown activation kind '" + s + "'");
}

// SELU's published constants.
constexpr double selu_lambda = 1.0507009873554804934193349852946;
constexpr double selu_alpha  = 1.6732632423543772848170429916717;
constexpr double leaky_slope = 0.01;

struct ActDerivs {
    double v;   // sigma(t)
    double d1;  // sigma'(t)
    double d2;  // sigma''(t)
};

namespace detail {

inline double logistic(double t) {
    // evaluate on the side that avoids overflow
    if (t >= 0.0) {
        double e = std::exp(-t);
        return 1.0 / (1.0 + e);
    }
    double e = std::exp(t);
    return e / (1.0 + e);
}

// kink positions: the points where the piecewise kinds change branch
inline bool at_kink(ActKind k, double t) {
    switch (k) {
        case ActKind::relu:
        case ActKind::leaky_relu:
        case ActKind::elu:
        case ActKind::selu:
            return t == 0.0;
        default:
            return false;
    }
}

} // namespace detail

// sigma and its first two derivatives, exact closed forms per kind.
// Evaluating a branch-switch point of a piecewise kind is an error: the
// derivatives are not defined there and silently picking a side would let a
// wrong construction pass its own checks.
inline ActDerivs act_eval(ActKind kind, double t) {
    if (detail::at_kink(kind, t))
        fail("evaluation-at-kink",
             std::string(to_string(kind)) + " derivative requested at its kink t=0");
    switch (kind) {
        case ActKind::sigmoid: {
            double s = detail::logistic(t);
            double d1 = s * (1.0 - s);
            return {s, d1, d1 * (1.0 - 2.0 * s)};
        }
        case ActKind::tanh_k: {
            double y = std::tanh(t);
            double d1 = 1.0 - y * y;
            return {y, d1, -2.0 * y * d1};
        }
        case ActKind::softplus: {
            double s = detail::logistic(t);
            // stable log(1+e^t)
            double v = t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
            return {v, s, s * (1.0 - s)};
        }
        case ActKind::swish: {
            double s = detail::logistic(t);
            double sp = s * (1.0 - s);
            double spp = sp * (1.0 - 2.0 * s);
            return {t * s, s + t * sp, 2.0 * sp + t * spp};
        }
        case ActKind::elu: {
            if (t > 0.0) return {t, 1.0, 0.0};
            double e = std::exp(t);
            return {e - 1.0, e, e};
        }
        case ActKind::selu: {
            if (t > 0.0) return {selu_lambda * t, selu_lambda, 0.0};
            double e = selu_lambda * selu_alpha * std::exp(t);
            return {e - selu_lambda * selu_alpha, e, e};
        }
        case ActKind::relu: {
            if (t > 0.0) return {t, 1.0, 0.0};
            return {0.0, 0.0, 0.0};
        }
        case ActKind::leaky_relu: {
            if (t > 0.0) return {t, 1.0, 0.0};
            return {leaky_slope * t, leaky_slope, 0.0};
        }
        case ActKind::linear:
            return {t, 1.0, 0.0};
    }
    fail("config-invalid", "unreachable activation kind");
}

// An activation anchored at a point. Smooth use needs sigma, sigma', sigma''
// all nonzero at the anchor; piecewise use needs sigma to be exactly linear
// (given slope/offset relative to the anchor) on [anchor-delta, anchor+delta].
struct ActivationSpec {
    ActKind kind = ActKind::softplus;
    double anchor = 0.0;
    double delta = 0.5;
    // present iff this activation describes a linear segment:
    //   sigma(t) = slope * (t - anchor) + offset  on the segment
    std::optional<double> slope;
    std::optional<double> offset;

    bool piecewise() const { return slope.has_value(); }
};

inline ActDerivs act_eval(const ActivationSpec& spec, double t) {
    return act_eval(spec.kind, t);
}

constexpr double anchor_eps = 1e-6; // nondegeneracy floor for smooth anchors

inline void validate_anchor(const ActivationSpec& spec) {
    if (spec.delta <= 0.0) fail("config-invalid", "anchor delta must be positive");
    if (spec.piecewise()) {
        if (!spec.offset) fail("config-invalid", "piecewise spec needs slope and offset");
        // sample the segment; the closed forms must agree with the line exactly
        double a = spec.anchor, d = spec.delta;
        for (int i = 0; i <= 8; ++i) {
            double t = a - d + (2.0 * d) * (static_cast<double>(i) / 8.0);
            if (detail::at_kink(spec.kind, t)) {
                // a kink inside the claimed segment disqualifies it outright
                fail("no-valid-anchor", "linear segment crosses a kink of " +
                                            std::string(to_string(spec.kind)));
            }
            ActDerivs e = act_eval(spec.kind, t);
            double line = *spec.slope * (t - a) + *spec.offset;
            if (std::abs(e.v - line) > 1e-12 * std::max(1.0, std::abs(line)))
                fail("no-valid-anchor",
                     "segment of " + std::string(to_string(spec.kind)) +
                         " around " + std::to_string(a) + " is not linear");
        }
    } else {
        // kinds with a branch switch must keep the whole working segment on
        // one branch, otherwise the curvature bounds below are meaningless
        switch (spec.kind) {
            case ActKind::elu:
            case ActKind::selu:
            case ActKind::relu:
            case ActKind::leaky_relu:
                if (spec.anchor - spec.delta <= 0.0 && spec.anchor + spec.delta >= 0.0)
                    fail("no-valid-anchor",
                         std::string(to_string(spec.kind)) +
                             " segment straddles its kink at 0");
                break;
            default:
                break;
        }
        ActDerivs e = act_eval(spec.kind, spec.anchor);
        if (std::abs(e.v) <= anchor_eps || std::abs(e.d1) <= anchor_eps ||
            std::abs(e.d2) <= anchor_eps)
            fail("no-valid-anchor",
                 std::string(to_string(spec.kind)) + " at anchor " +
                     std::to_string(spec.anchor) +
                     " has a vanishing value or derivative");
    }
}

// Default anchor per kind. Deterministic: same kind, same spec, always.
inline ActivationSpec select_anchor(ActKind kind) {
    ActivationSpec s;
    s.kind = kind;
    s.delta = 0.5;
    switch (kind) {
        case ActKind::sigmoid:  s.anchor = 1.0; break;
        case ActKind::tanh_k:   s.anchor = 0.5; break;
        case ActKind::softplus: s.anchor = 0.0; break;
        case ActKind::swish:    s.anchor = 1.0; break;
        case ActKind::elu:      s.anchor = -1.0; break; // exponential (smooth) side
        case ActKind::selu:
            s.anchor = 1.0;
            s.slope = selu_lambda;
            s.offset = selu_lambda; // selu(1) on the linear side
            break;
        case ActKind::relu:
            s.anchor = 1.0;
            s.slope = 1.0;
            s.offset = 1.0;
            break;
        case ActKind::leaky_relu:
            s.anchor = 1.0;
            s.slope = 1.0;
            s.offset = 1.0;
            break;
        case ActKind::linear:
            fail("no-valid-anchor", "linear has identically zero curvature");
    }
    validate_anchor(s);
    return s;
}

// ELU's linear side, for piecewise use.
inline ActivationSpec elu_linear_spec() {
    ActivationSpec s;
    s.kind = ActKind::elu;
    s.anchor = 1.0;
    s.delta = 0.5;
    s.slope = 1.0;
    s.offset = 1.0;
    validate_anchor(s);
    return s;
}

// ReLU's zero piece: slope and offset both 0. Degenerate on purpose.
inline ActivationSpec relu_zero_spec() {
    ActivationSpec s;
    s.kind = ActKind::relu;
    s.anchor = -1.0;
    s.delta = 0.5;
    s.slope = 0.0;
    s.offset = 0.0;
    validate_anchor(s);
    return s;
}

} // namespace minforge
