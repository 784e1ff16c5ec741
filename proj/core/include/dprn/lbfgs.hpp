#pragma once

#include <Eigen/Dense>
#include <deque>
#include <functional>
#include <vector>

#include "dprn/errors.hpp"

namespace dprn {

/// Evaluates f at x and fills grad; returns f.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct LBFGSConfig {
    int memory = 10;                 // curvature pairs kept
    double c1 = 1e-4;                // sufficient-decrease coefficient
    double c2 = 0.9;                 // curvature coefficient
    int max_iterations = 100;
    double grad_tolerance = 1e-8;    // stop when ||grad||_inf <= this
    int max_line_search_steps = 25;

    void validate() const;
};

/// Objective or gradient turned non-finite at a point where it must be
/// evaluated; carries the offending iterate.
struct ObjectiveFailure : NumericError {
    ObjectiveFailure(const std::string& msg, Eigen::VectorXd x)
        : NumericError(msg), iterate(std::move(x)) {}
    Eigen::VectorXd iterate;
};

/// Ring buffer of curvature pairs (s, y) with rho = 1/(y.s). Pairs failing
/// the curvature condition y.s > 1e-10 ||y|| ||s|| are rejected.
class LBFGSState {
public:
    explicit LBFGSState(int memory);

    /// Returns false (and stores nothing) if the pair fails the curvature
    /// condition.
    bool push(Eigen::VectorXd s, Eigen::VectorXd y);
    void clear() { pairs_.clear(); }
    std::size_t size() const { return pairs_.size(); }
    bool empty() const { return pairs_.empty(); }

    struct Pair {
        Eigen::VectorXd s, y;
        double rho;
    };
    /// Oldest first, newest last.
    const std::deque<Pair>& pairs() const { return pairs_; }

private:
    std::size_t memory_;
    std::deque<Pair> pairs_;
};

/// -H*grad by the two-loop recursion, with the initial Hessian scaled by
/// gamma = s.y/y.y from the newest pair. Empty memory gives -grad.
Eigen::VectorXd two_loop_direction(const LBFGSState& state, const Eigen::VectorXd& grad);

struct LineSearchResult {
    double alpha = 0.0;
    double f = 0.0;
    Eigen::VectorXd grad;         // gradient at x + alpha*d
    bool wolfe_satisfied = false;
    int evaluations = 0;
};

/// Strong-Wolfe line search with cubic-interpolation bracketing. Requires a
/// descent direction. If the budget runs out, the best strictly-decreasing
/// trial found is returned with wolfe_satisfied == false; alpha == 0 means no
/// decrease was found at all.
LineSearchResult wolfe_line_search(const Objective& objective, const Eigen::VectorXd& x,
                                   double f0, const Eigen::VectorXd& g0,
                                   const Eigen::VectorXd& d, const LBFGSConfig& cfg,
                                   double initial_step = 1.0);

struct MinimizeResult {
    Eigen::VectorXd x;
    double f = 0.0;
    Eigen::VectorXd grad;
    struct TracePoint {
        double f;
        double grad_inf_norm;
    };
    std::vector<TracePoint> trace;  // one entry per accepted iterate, x0 included
    int iterations = 0;
    bool converged = false;          // gradient tolerance reached
    bool line_search_failed = false; // stopped because no decreasing step was found
};

/// L-BFGS with strong-Wolfe steps. Stops on ||grad||_inf <= grad_tolerance or
/// after max_iterations. Every accepted step strictly decreases f, so the
/// trace is nonincreasing in f.
MinimizeResult lbfgs_minimize(const Objective& objective, const Eigen::VectorXd& x0,
                              const LBFGSConfig& cfg);

}  // namespace dprn
