#include "bridgegen/constraints.hpp"

#include <cmath>

namespace bridgegen {

ConstraintSpec ConstraintSpec::quadratic(Vec c) {
    ConstraintSpec s;
    s.kind = Kind::QuadraticToPoint;
    s.target = std::move(c);
    return s;
}

ConstraintSpec ConstraintSpec::halfplane(Vec normal, double offset) {
    check(normal.size() > 0, "halfplane: empty normal");
    ConstraintSpec s;
    s.kind = Kind::Halfplane;
    s.normal = std::move(normal);
    s.offset = offset;
    return s;
}

ConstraintSpec ConstraintSpec::ball_collision(BallLayout layout, double radius) {
    check(layout.n_balls > 0 && layout.n_steps > 0, "ball_collision: empty layout");
    check(radius > 0.0, "ball_collision: radius must be positive");
    ConstraintSpec s;
    s.kind = Kind::BallCollision;
    s.layout = layout;
    s.radius = radius;
    return s;
}

ConstraintSpec ConstraintSpec::ball_boundary(BallLayout layout, double radius,
                                             double box_halfwidth) {
    check(layout.n_balls > 0 && layout.n_steps > 0, "ball_boundary: empty layout");
    check(radius > 0.0 && box_halfwidth > radius, "ball_boundary: invalid geometry");
    ConstraintSpec s;
    s.kind = Kind::BallBoundary;
    s.layout = layout;
    s.radius = radius;
    s.box_halfwidth = box_halfwidth;
    return s;
}

ConstraintSpec ConstraintSpec::composite(std::vector<double> weights,
                                         std::vector<ConstraintSpec> members) {
    check(!members.empty() && weights.size() == members.size(),
          "composite: weights/members size mismatch");
    ConstraintSpec s;
    s.kind = Kind::Composite;
    s.weights = std::move(weights);
    for (auto& m : members) s.members.push_back(std::make_shared<const ConstraintSpec>(std::move(m)));
    return s;
}

namespace {

void check_layout(const ConstraintSpec& c, const Vec& x) {
    check(x.size() == c.layout.dim(), "constraint: state does not match scenario layout");
}

// Squared hinge on pairwise overlap: sum_{t,i<j} max(0, 2r - d_ij)^2.
double collision_loss(const ConstraintSpec& c, const Vec& x, Vec* grad) {
    check_layout(c, x);
    const BallLayout& L = c.layout;
    double contact = 2.0 * c.radius;
    double total = 0.0;
    for (int t = 0; t < L.n_steps; ++t) {
        for (int i = 0; i < L.n_balls; ++i) {
            for (int j = i + 1; j < L.n_balls; ++j) {
                double dx = x[L.idx(t, i, 0)] - x[L.idx(t, j, 0)];
                double dy = x[L.idx(t, i, 1)] - x[L.idx(t, j, 1)];
                double d = std::sqrt(dx * dx + dy * dy);
                double h = contact - d;
                if (h <= 0.0) continue;
                total += h * h;
                if (grad && d > 1e-12) {
                    double coef = -2.0 * h / d;
                    (*grad)[L.idx(t, i, 0)] += coef * dx;
                    (*grad)[L.idx(t, i, 1)] += coef * dy;
                    (*grad)[L.idx(t, j, 0)] -= coef * dx;
                    (*grad)[L.idx(t, j, 1)] -= coef * dy;
                }
            }
        }
    }
    return total;
}

// Squared hinge on wall penetration per axis: sum max(0, |p| - (L - r))^2.
double boundary_loss(const ConstraintSpec& c, const Vec& x, Vec* grad) {
    check_layout(c, x);
    const BallLayout& L = c.layout;
    double lim = c.box_halfwidth - c.radius;
    double total = 0.0;
    for (int t = 0; t < L.n_steps; ++t) {
        for (int b = 0; b < L.n_balls; ++b) {
            for (int axis = 0; axis < 2; ++axis) {
                double p = x[L.idx(t, b, axis)];
                double h = std::abs(p) - lim;
                if (h <= 0.0) continue;
                total += h * h;
                if (grad) (*grad)[L.idx(t, b, axis)] += 2.0 * h * (p > 0.0 ? 1.0 : -1.0);
            }
        }
    }
    return total;
}

double eval(const ConstraintSpec& c, const Vec& x, Vec* grad) {
    switch (c.kind) {
        case ConstraintSpec::Kind::QuadraticToPoint: {
            check(x.size() == c.target.size(), "quadratic: dimension mismatch");
            Vec d = x - c.target;
            if (grad) *grad += d;
            return 0.5 * d.squaredNorm();
        }
        case ConstraintSpec::Kind::Halfplane: {
            check(x.size() == c.normal.size(), "halfplane: dimension mismatch");
            double h = c.normal.dot(x) - c.offset;
            if (h <= 0.0) return 0.0;
            if (grad) *grad += 2.0 * h * c.normal;
            return h * h;
        }
        case ConstraintSpec::Kind::BallCollision:
            return collision_loss(c, x, grad);
        case ConstraintSpec::Kind::BallBoundary:
            return boundary_loss(c, x, grad);
        case ConstraintSpec::Kind::Composite: {
            double total = 0.0;
            for (size_t m = 0; m < c.members.size(); ++m) {
                Vec g;
                if (grad) g = Vec::Zero(x.size());
                total += c.weights[m] * eval(*c.members[m], x, grad ? &g : nullptr);
                if (grad) *grad += c.weights[m] * g;
            }
            return total;
        }
    }
    throw Error("constraint: unknown kind");
}

}  // namespace

double loss_value(const ConstraintSpec& c, const Vec& x) { return eval(c, x, nullptr); }

Vec loss_grad(const ConstraintSpec& c, const Vec& x) {
    Vec g = Vec::Zero(x.size());
    eval(c, x, &g);
    return g;
}

Vec bridge_term(const ConstraintSpec& c, const GammaSchedule& g, double sigma,
                const Vec& x_eval) {
    return gamma_value(g, sigma) * loss_grad(c, x_eval);
}

}  // namespace bridgegen
