#include "dprn/lbfgs.hpp"

#include <cmath>
#include <limits>

namespace dprn {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// relative objective-noise window used by the line search near stalls
constexpr double kFNoiseRel = 1e-12;

struct Trial {
    double phi = kInf;
    double dphi = std::numeric_limits<double>::quiet_NaN();
    Eigen::VectorXd grad;
    bool finite = false;
};

struct End {
    double a;
    double phi;
    double dphi;
    bool has_dphi;
};

// Cubic Hermite minimizer between two endpoints, quadratic or bisection when
// the data for the cubic is unavailable, safeguarded to the inner 80% of the
// interval.
double interpolate(const End& lo, const End& hi) {
    const double amin = std::min(lo.a, hi.a);
    const double amax = std::max(lo.a, hi.a);
    const double width = amax - amin;
    double a = std::numeric_limits<double>::quiet_NaN();
    if (hi.has_dphi && std::isfinite(hi.phi)) {
        const double d1 = lo.dphi + hi.dphi - 3.0 * (lo.phi - hi.phi) / (lo.a - hi.a);
        const double disc = d1 * d1 - lo.dphi * hi.dphi;
        if (disc >= 0.0) {
            const double d2 = std::copysign(std::sqrt(disc), hi.a - lo.a);
            a = hi.a - (hi.a - lo.a) * (hi.dphi + d2 - d1) / (hi.dphi - lo.dphi + 2.0 * d2);
        }
    } else if (std::isfinite(hi.phi)) {
        const double w = hi.a - lo.a;
        const double denom = 2.0 * (hi.phi - lo.phi - lo.dphi * w);
        if (denom != 0.0) a = lo.a - lo.dphi * w * w / denom;
    }
    if (!std::isfinite(a) || a <= amin + 0.1 * width || a >= amax - 0.1 * width)
        a = amin + 0.5 * width;
    return a;
}

}  // namespace

void LBFGSConfig::validate() const {
    if (memory < 1) throw ContractError("L-BFGS memory must be >= 1");
    if (!(0.0 < c1 && c1 < c2 && c2 < 1.0))
        throw ContractError("Wolfe constants must satisfy 0 < c1 < c2 < 1");
    if (max_iterations < 0) throw ContractError("max_iterations must be >= 0");
    if (grad_tolerance < 0.0) throw ContractError("grad_tolerance must be >= 0");
    if (max_line_search_steps < 1) throw ContractError("max_line_search_steps must be >= 1");
}

LBFGSState::LBFGSState(int memory) {
    if (memory < 1) throw ContractError("L-BFGS memory must be >= 1");
    memory_ = static_cast<std::size_t>(memory);
}

bool LBFGSState::push(Eigen::VectorXd s, Eigen::VectorXd y) {
    const double ys = y.dot(s);
    if (!(ys > 1e-10 * y.norm() * s.norm())) return false;
    if (pairs_.size() == memory_) pairs_.pop_front();
    pairs_.push_back({std::move(s), std::move(y), 1.0 / ys});
    return true;
}

Eigen::VectorXd two_loop_direction(const LBFGSState& state, const Eigen::VectorXd& grad) {
    if (state.empty()) return -grad;
    const auto& pairs = state.pairs();
    Eigen::VectorXd q = grad;
    std::vector<double> alpha(pairs.size());
    for (std::size_t i = pairs.size(); i-- > 0;) {
        alpha[i] = pairs[i].rho * pairs[i].s.dot(q);
        q -= alpha[i] * pairs[i].y;
    }
    const auto& newest = pairs.back();
    q *= 1.0 / (newest.rho * newest.y.squaredNorm());  // gamma = s.y / y.y
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const double beta = pairs[i].rho * pairs[i].y.dot(q);
        q += (alpha[i] - beta) * pairs[i].s;
    }
    return -q;
}

LineSearchResult wolfe_line_search(const Objective& objective, const Eigen::VectorXd& x,
                                   double f0, const Eigen::VectorXd& g0,
                                   const Eigen::VectorXd& d, const LBFGSConfig& cfg,
                                   double initial_step) {
    const double dphi0 = g0.dot(d);
    if (!(dphi0 < 0.0)) throw ContractError("line search requires a descent direction");
    // noise floor of the objective: a sum of n terms of magnitude m carries
    // roundoff ~ n*m*eps, which near a minimizer dwarfs the true decrease.
    // f-comparisons carry this tolerance; the curvature condition, computed
    // from gradients free of that cancellation, still gates acceptance.
    const double f_tol = kFNoiseRel * std::abs(f0);

    int evals = 0;
    LineSearchResult best;
    best.alpha = 0.0;
    best.f = f0;

    auto eval = [&](double a) -> Trial {
        Trial t;
        Eigen::VectorXd g(x.size());
        double f;
        try {
            f = objective(x + a * d, g);
        } catch (const NumericError&) {
            return t;  // treated as an unacceptable trial
        }
        if (!std::isfinite(f) || !g.allFinite()) return t;
        t.phi = f;
        t.dphi = g.dot(d);
        t.grad = std::move(g);
        t.finite = true;
        return t;
    };
    auto note = [&](double a, Trial& t) {
        if (t.finite && t.phi < best.f) {
            best.alpha = a;
            best.f = t.phi;
            best.grad = t.grad;
        }
    };
    auto accept = [&](double a, Trial& t) {
        LineSearchResult r;
        r.alpha = a;
        r.f = t.phi;
        r.grad = std::move(t.grad);
        r.wolfe_satisfied = true;
        r.evaluations = evals;
        return r;
    };
    // zoom invariant: lo satisfies sufficient decrease and has the lower phi;
    // the interval [lo, hi] brackets a strong-Wolfe point.
    auto zoom = [&](End lo, End hi) -> LineSearchResult {
        while (evals < cfg.max_line_search_steps) {
            if (std::abs(hi.a - lo.a) <= 1e-16 * std::max(1.0, std::abs(lo.a))) break;
            const double a = interpolate(lo, hi);
            Trial t = eval(a);
            ++evals;
            if (!t.finite || t.phi > f0 + cfg.c1 * a * dphi0 + f_tol ||
                t.phi >= lo.phi + f_tol) {
                hi = {a, t.phi, t.dphi, t.finite};
            } else {
                note(a, t);
                if (std::abs(t.dphi) <= -cfg.c2 * dphi0) return accept(a, t);
                if (t.dphi * (hi.a - lo.a) >= 0.0) hi = lo;
                lo = {a, t.phi, t.dphi, true};
            }
        }
        best.evaluations = evals;
        return best;
    };

    double a_prev = 0.0, phi_prev = f0, dphi_prev = dphi0;
    double a = initial_step > 0.0 ? initial_step : 1.0;
    bool first = true;
    while (evals < cfg.max_line_search_steps) {
        Trial t = eval(a);
        ++evals;
        if (!t.finite || t.phi > f0 + cfg.c1 * a * dphi0 + f_tol ||
            (!first && t.phi >= phi_prev + f_tol))
            return zoom({a_prev, phi_prev, dphi_prev, true}, {a, t.phi, t.dphi, t.finite});
        note(a, t);
        if (std::abs(t.dphi) <= -cfg.c2 * dphi0) return accept(a, t);
        if (t.dphi >= 0.0)
            return zoom({a, t.phi, t.dphi, true}, {a_prev, phi_prev, dphi_prev, true});
        a_prev = a;
        phi_prev = t.phi;
        dphi_prev = t.dphi;
        a *= 2.0;
        first = false;
        if (a > 1e12) break;
    }
    best.evaluations = evals;
    return best;
}

MinimizeResult lbfgs_minimize(const Objective& objective, const Eigen::VectorXd& x0,
                              const LBFGSConfig& cfg) {
    cfg.validate();
    MinimizeResult res;
    res.x = x0;
    res.grad.resize(x0.size());
    double f;
    try {
        f = objective(res.x, res.grad);
    } catch (const NumericError&) {
        throw ObjectiveFailure("objective evaluation failed at the initial point", x0);
    }
    if (!std::isfinite(f) || !res.grad.allFinite())
        throw ObjectiveFailure("objective or gradient non-finite at the initial point", x0);
    res.f = f;
    double ginf = res.grad.lpNorm<Eigen::Infinity>();
    res.trace.push_back({res.f, ginf});

    LBFGSState state(cfg.memory);
    for (int iter = 0; iter < cfg.max_iterations; ++iter) {
        if (ginf <= cfg.grad_tolerance) break;
        Eigen::VectorXd dir = two_loop_direction(state, res.grad);
        double dg = dir.dot(res.grad);
        if (!(dg < 0.0)) {  // numerical loss of descent: restart from steepest descent
            state.clear();
            dir = -res.grad;
            dg = -res.grad.squaredNorm();
            if (!(dg < 0.0)) break;
        }
        const double init = iter == 0 ? std::min(1.0, 1.0 / res.grad.lpNorm<1>()) : 1.0;
        LineSearchResult ls = wolfe_line_search(objective, res.x, res.f, res.grad, dir, cfg, init);
        // a Wolfe point whose decrease rounds to zero (or into the objective's
        // ulp-level noise) still moves the iterate; rejecting it would stall
        // short of tight gradient tolerances
        const double f_noise = kFNoiseRel * std::abs(res.f);
        const bool acceptable =
            ls.alpha > 0.0 &&
            (ls.f < res.f || (ls.wolfe_satisfied && ls.f <= res.f + f_noise));
        if (!acceptable) {
            res.line_search_failed = true;
            break;
        }
        Eigen::VectorXd x_new = res.x + ls.alpha * dir;
        state.push(x_new - res.x, ls.grad - res.grad);
        res.x = std::move(x_new);
        res.f = std::min(ls.f, res.f);  // keeps the reported trace nonincreasing
        res.grad = std::move(ls.grad);
        ginf = res.grad.lpNorm<Eigen::Infinity>();
        res.trace.push_back({res.f, ginf});
        res.iterations = iter + 1;
    }
    res.converged = ginf <= cfg.grad_tolerance;
    return res;
}

}  // namespace dprn
