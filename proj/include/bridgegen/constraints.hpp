#pragma once

#include <memory>
#include <vector>

#include "bridgegen/common.hpp"
#include "bridgegen/schedules.hpp"

namespace bridgegen {

// Flattening convention for ball scenarios: index = ((t*B) + b)*4 + feature,
// features ordered (px, py, vx, vy); total dimension 4*B*T.
struct BallLayout {
    int n_balls = 0;
    int n_steps = 0;

    int dim() const { return 4 * n_balls * n_steps; }
    int idx(int t, int b, int f) const { return ((t * n_balls) + b) * 4 + f; }
};

// Differentiable non-negative constraint loss; zero exactly on the feasible
// set. Gradients are analytic and act on position coordinates only.
struct ConstraintSpec {
    enum class Kind { BallCollision, BallBoundary, QuadraticToPoint, Halfplane, Composite };

    Kind kind = Kind::QuadraticToPoint;

    // Ball constraints.
    BallLayout layout;
    double radius = 0.08;
    double box_halfwidth = 1.0;

    // Quadratic-to-point.
    Vec target;

    // Halfplane: feasible iff normal . x <= offset.
    Vec normal;
    double offset = 0.0;

    // Composite: weighted sum of members.
    std::vector<double> weights;
    std::vector<std::shared_ptr<const ConstraintSpec>> members;

    static ConstraintSpec quadratic(Vec c);
    static ConstraintSpec halfplane(Vec normal, double offset);
    static ConstraintSpec ball_collision(BallLayout layout, double radius);
    static ConstraintSpec ball_boundary(BallLayout layout, double radius, double box_halfwidth);
    static ConstraintSpec composite(std::vector<double> weights,
                                    std::vector<ConstraintSpec> members);
};

double loss_value(const ConstraintSpec& c, const Vec& x);
Vec loss_grad(const ConstraintSpec& c, const Vec& x);

// gamma(sigma) * loss_grad at x_eval. Callers pass either the noisy state
// (noisy-state bridging) or the detached denoised estimate (denoised-state
// bridging); no derivative information flows through x_eval.
Vec bridge_term(const ConstraintSpec& c, const GammaSchedule& g, double sigma, const Vec& x_eval);

}  // namespace bridgegen
