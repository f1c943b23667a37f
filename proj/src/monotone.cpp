#include "entro/monotone.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace entro::monotone {

namespace {

constexpr int kMaxRootIters = 200;

[[noreturn]] void root_fault(const char* what) {
    // must not occur for finite inputs; treated as an internal fault
    throw std::logic_error(std::string("monotone root finder failed: ") + what);
}

}  // namespace

double log_resolvent(double eps, double x) {
    return log_resolvent_d(eps, x).first;
}

std::pair<double, double> log_resolvent_d(double eps, double x) {
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
    if (!std::isfinite(x)) root_fault("non-finite input");

    // phi(y) = y + eps*ln(y) - x, strictly increasing onto R for y > 0
    auto phi = [&](double y) { return y + eps * std::log(y) - x; };

    double hi = std::fmax(x, 1.0);
    double lo = hi;
    while (phi(lo) > 0.0) {
        lo *= 0.5;
        if (lo < 1e-300) {
            // root below representable range (x very negative): the
            // resolvent is exp((x - y)/eps) ~ exp(x/eps), clamped tiny.
            double y = std::fmax(std::exp(x / eps), std::numeric_limits<double>::denorm_min());
            return {y, y / (y + eps)};
        }
    }

    const double tol = 1e-14 * std::fmax(1.0, std::fabs(x));
    double y = std::clamp(x, lo, hi);
    if (!(y > 0.0)) y = 0.5 * (lo + hi);
    for (int it = 0; it < kMaxRootIters; ++it) {
        const double f = phi(y);
        if (std::fabs(f) <= tol) return {y, y / (y + eps)};
        if (f > 0.0) hi = y; else lo = y;
        const double step = f / (1.0 + eps / y);
        double y_next = y - step;
        if (!(y_next > lo && y_next < hi)) y_next = 0.5 * (lo + hi);
        if (y_next == y) return {y, y / (y + eps)};  // stagnation at roundoff
        y = y_next;
    }
    root_fault("log resolvent did not converge");
}

YosidaEval log_yosida(double eps, double x) {
    const auto [y, dy] = log_resolvent_d(eps, x);
    // ln(y) and (x - y)/eps agree at the exact root, but the quotient
    // amplifies the root-finding error by 1/eps; prefer the direct log
    // and fall back to the quotient only when y has underflowed
    const double value = y > 1e-280 ? std::log(y) : (x - y) / eps;
    return {value, 1.0 / (y + eps)};
}

double log_primitive(double x) {
    if (x < 0.0) return std::numeric_limits<double>::infinity();
    if (x == 0.0) return 1.0;
    return x * std::log(x) - x + 1.0;
}

double log_moreau(double eps, double x) {
    const double y = log_resolvent(eps, x);
    const double d = x - y;
    return std::fmax(0.0, log_primitive(y) + d * d / (2.0 * eps));
}

ScalarGraph ScalarGraph::indicator_box(double lo, double hi) {
    if (!(lo <= 0.0 && 0.0 <= hi))
        throw std::invalid_argument("IndicatorBox requires lo <= 0 <= hi");
    ScalarGraph g;
    g.kind = Kind::IndicatorBox;
    g.lo = lo;
    g.hi = hi;
    return g;
}

ScalarGraph ScalarGraph::power(int p) {
    if (p < 3 || p % 2 == 0)
        throw std::invalid_argument("Power graph needs an odd exponent >= 3");
    ScalarGraph g;
    g.kind = Kind::Power;
    g.exponent = p;
    return g;
}

namespace {

// solves y + eps*y^p = x for odd p >= 3
std::pair<double, double> power_resolvent_d(int p, double eps, double x) {
    auto phi = [&](double y) { return y + eps * std::pow(y, p) - x; };
    double m = std::fmax(std::fabs(x), 1.0);
    double lo = -m, hi = m;
    const double tol = 1e-14 * std::fmax(1.0, std::fabs(x));
    double y = std::clamp(x, lo, hi);
    for (int it = 0; it < kMaxRootIters; ++it) {
        const double f = phi(y);
        const double dphi = 1.0 + eps * p * std::pow(y, p - 1);
        if (std::fabs(f) <= tol) return {y, 1.0 / dphi};
        if (f > 0.0) hi = y; else lo = y;
        double y_next = y - f / dphi;
        if (!(y_next > lo && y_next < hi)) y_next = 0.5 * (lo + hi);
        if (y_next == y) return {y, 1.0 / dphi};
        y = y_next;
    }
    root_fault("power resolvent did not converge");
}

}  // namespace

double ScalarGraph::resolvent(double eps, double x) const {
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
    switch (kind) {
        case Kind::Zero: return x;
        case Kind::Log: return log_resolvent(eps, x);
        case Kind::IndicatorBox: return std::clamp(x, lo, hi);
        case Kind::Power: return power_resolvent_d(exponent, eps, x).first;
    }
    throw std::logic_error("bad graph kind");
}

YosidaEval ScalarGraph::yosida(double eps, double x) const {
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
    switch (kind) {
        case Kind::Zero:
            return {0.0, 0.0};
        case Kind::Log: {
            const auto e = log_yosida(eps, x);
            return {e.value, e.derivative};
        }
        case Kind::IndicatorBox: {
            const double r = std::clamp(x, lo, hi);
            // derivative 0 at the kinks x == lo or x == hi
            const double d = (x < lo || x > hi) ? 1.0 / eps : 0.0;
            return {(x - r) / eps, d};
        }
        case Kind::Power: {
            const auto [y, dr] = power_resolvent_d(exponent, eps, x);
            return {(x - y) / eps, (1.0 - dr) / eps};
        }
    }
    throw std::logic_error("bad graph kind");
}

double ScalarGraph::primitive(double x) const {
    switch (kind) {
        case Kind::Zero: return 0.0;
        case Kind::Log: return log_primitive(x);
        case Kind::IndicatorBox:
            return (x < lo || x > hi) ? std::numeric_limits<double>::infinity() : 0.0;
        case Kind::Power: return std::pow(x, exponent + 1) / (exponent + 1);
    }
    throw std::logic_error("bad graph kind");
}

double ScalarGraph::moreau(double eps, double x) const {
    const double r = resolvent(eps, x);
    const double d = x - r;
    return std::fmax(0.0, primitive(r) + d * d / (2.0 * eps));
}

bool ScalarGraph::in_domain(double x) const {
    switch (kind) {
        case Kind::Log: return x > 0.0;
        case Kind::IndicatorBox: return lo <= x && x <= hi;
        default: return true;
    }
}

double ScalarGraph::domain_distance(double x) const {
    switch (kind) {
        case Kind::Log: return x >= 0.0 ? 0.0 : -x;
        case Kind::IndicatorBox:
            if (x < lo) return lo - x;
            if (x > hi) return x - hi;
            return 0.0;
        default: return 0.0;
    }
}

Field NonlocalOp::resolvent(double eps, const Field& v) const {
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
    switch (kind) {
        case Kind::Zero:
            return v;
        case Kind::SignNonlocal: {
            const double nv = norm_h(v);
            const double factor = nv <= eps ? 0.0 : 1.0 - eps / nv;
            return factor * v;
        }
        case Kind::SignLocal: {
            Field r = v;
            for (double& x : r.values) {
                const double mag = std::fabs(x) - eps;
                x = mag > 0.0 ? std::copysign(mag, x) : 0.0;
            }
            return r;
        }
    }
    throw std::logic_error("bad operator kind");
}

Field NonlocalOp::yosida(double eps, const Field& v) const {
    Field j = resolvent(eps, v);
    Field r = v;
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = (v[i] - j[i]) / eps;
    return r;
}

double NonlocalOp::potential(const Field& v) const {
    switch (kind) {
        case Kind::Zero: return 0.0;
        case Kind::SignNonlocal: return norm_h(v);
        case Kind::SignLocal: return norm_l1(v);
    }
    throw std::logic_error("bad operator kind");
}

}  // namespace entro::monotone
