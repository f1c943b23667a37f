#pragma once

#include <utility>

#include "entro/grid.hpp"

namespace entro::monotone {

/// Pair (value, generalized derivative) of a Yosida map at a point.
struct YosidaEval {
    double value;
    double derivative;
};

// --- the logarithm graph ------------------------------------------------

/// Unique y > 0 with y + eps*ln(y) = x, to absolute tolerance
/// 1e-14 * max(1, |x|). Safeguarded Newton with bisection fallback.
double log_resolvent(double eps, double x);

/// Resolvent together with its derivative y/(y+eps).
std::pair<double, double> log_resolvent_d(double eps, double x);

/// ln_eps(x) = (x - log_resolvent(eps,x))/eps; derivative 1/(y+eps) > 0.
YosidaEval log_yosida(double eps, double x);

/// Lambda(x) = x ln x - x + 1 for x > 0, Lambda(0) = 1, +inf for x < 0.
double log_primitive(double x);

/// Moreau envelope Lambda_eps(x) = Lambda(y) + (x-y)^2/(2 eps), y the
/// resolvent value; satisfies 0 <= Lambda_eps(x) <= Lambda(x) for x > 0.
double log_moreau(double eps, double x);

// --- scalar maximal monotone graphs --------------------------------------

/// A scalar maximal monotone graph beta with closed-form or root-found
/// resolvent, Yosida map and Moreau envelope of its primitive.
struct ScalarGraph {
    enum class Kind { Zero, Log, IndicatorBox, Power };

    Kind kind = Kind::Zero;
    double lo = 0.0, hi = 0.0;  // IndicatorBox bounds, lo <= 0 <= hi
    int exponent = 3;           // Power: odd exponent >= 3

    static ScalarGraph zero() { return {}; }
    static ScalarGraph log_graph() { return {Kind::Log}; }
    static ScalarGraph indicator_box(double lo, double hi);
    static ScalarGraph power(int p);

    /// R_eps(x) = (I + eps*beta)^{-1}(x).
    double resolvent(double eps, double x) const;

    /// beta_eps(x) = (x - R_eps(x))/eps with a generalized derivative;
    /// ties at IndicatorBox kinks resolve to derivative 0.
    YosidaEval yosida(double eps, double x) const;

    /// The convex primitive beta_tilde (may be +inf outside the domain).
    double primitive(double x) const;

    /// Moreau envelope beta_tilde_eps(x) = beta_tilde(R_eps x) + (x - R_eps x)^2/(2 eps).
    double moreau(double eps, double x) const;

    /// Whether x lies in the closure of D(beta).
    bool in_domain(double x) const;

    /// Distance of x to the closure of D(beta) (0 for full-domain graphs).
    double domain_distance(double x) const;

    bool operator==(const ScalarGraph&) const = default;
};

// --- nonlocal operators on H ---------------------------------------------

/// Maximal monotone operator A on H with closed-form resolvent J_eps and
/// Yosida map A_eps: Zero, Sign (subdifferential of the H norm) or the
/// pointwise sign (subdifferential of the L1 norm).
struct NonlocalOp {
    enum class Kind { Zero, SignNonlocal, SignLocal };

    Kind kind = Kind::Zero;

    static NonlocalOp zero() { return {}; }
    static NonlocalOp sign_nonlocal() { return {Kind::SignNonlocal}; }
    static NonlocalOp sign_local() { return {Kind::SignLocal}; }

    /// Growth constant in ||A_eps v|| <= C_A (1 + ||v||): 1 for both Sign
    /// variants, 0 for Zero (closed forms, not estimated).
    double growth_constant() const { return kind == Kind::Zero ? 0.0 : 1.0; }

    /// J_eps v = (I + eps A)^{-1} v. Block shrinkage for SignNonlocal,
    /// pointwise soft threshold for SignLocal.
    Field resolvent(double eps, const Field& v) const;

    /// A_eps v = (v - J_eps v)/eps.
    Field yosida(double eps, const Field& v) const;

    /// The potential Phi with A = dPhi: ||v||_H, integral of |v|, or 0.
    double potential(const Field& v) const;

    bool operator==(const NonlocalOp&) const = default;
};

/// Globally Lipschitz affine coupling pi(r) = p1*r + p0.
struct PiFunction {
    double p1 = 0.0;
    double p0 = 0.0;

    double operator()(double r) const { return p1 * r + p0; }
    double lipschitz() const { return p1 < 0 ? -p1 : p1; }

    bool operator==(const PiFunction&) const = default;
};

}  // namespace entro::monotone
