#include "hmdcal/lift.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/LU>

namespace hmdcal {

void point_line_residual(const Vec3& anchor, const Mat32& d_anchor, const Vec3& dir, const Mat32& d_dir,
                         const Vec3& target, bool clamp_nonnegative, Eigen::Vector3d& r, Mat32& jac) {
    const double len = dir.norm();
    const Vec3 w = dir / len;
    const Vec3 q = anchor - target;
    const double wq = w.dot(q);
    if (clamp_nonnegative && -wq < 0.0) {
        r = q;
        jac = d_anchor;
        return;
    }
    const Mat32 dw = (Eigen::Matrix3d::Identity() - w * w.transpose()) * d_dir / len;
    r = q - wq * w;
    const Eigen::RowVector2d d_wq = q.transpose() * dw + w.transpose() * d_anchor;
    jac = d_anchor - w * d_wq - wq * dw;
}

LiftResult solve_lift(const Vec2& x0, const LiftResidual& residual, const LiftOptions& opts) {
    Vec2 x = x0;
    Eigen::Vector3d r;
    Mat32 jac;
    residual(x, r, jac);
    double cost = r.squaredNorm();
    double mu = -1.0;
    double nu = 2.0;
    int accepted = 0;
    bool converged = false;
    constexpr int kMaxPolish = 4;
    int polish = 0;

    for (int pass = 0; pass < 4 * opts.max_iterations && accepted < opts.max_iterations; ++pass) {
        const Eigen::Matrix2d h = jac.transpose() * jac;
        const Vec2 g = jac.transpose() * r;
        if (mu < 0.0) {
            mu = 1e-9 * h.diagonal().maxCoeff();
        }
        const Vec2 gn_step = -h.partialPivLu().solve(g);
        if (!gn_step.allFinite() || r.norm() <= 1e-14) {
            converged = true;
            break;
        }
        if (gn_step.norm() <= 1e-13 * (1.0 + x.norm())) {
            // polish: take undamped steps while they still lower the cost
            Eigen::Vector3d rt;
            Mat32 jt;
            residual(x + gn_step, rt, jt);
            if (polish < kMaxPolish && rt.squaredNorm() < cost) {
                x += gn_step;
                r = rt;
                jac = jt;
                cost = r.squaredNorm();
                ++accepted;
                ++polish;
                continue;
            }
            converged = true;
            break;
        }
        const Vec2 step = -(h + mu * Eigen::Matrix2d::Identity()).partialPivLu().solve(g);
        const Vec2 xt = x + step;
        Eigen::Vector3d rt;
        Mat32 jt;
        residual(xt, rt, jt);
        const double cost_t = rt.squaredNorm();
        const double predicted = -(2.0 * g.dot(step) + step.dot(h * step));
        if (std::isfinite(cost_t) && cost_t < cost) {
            const double rho = predicted > 0.0 ? (cost - cost_t) / predicted : 1.0;
            x = xt;
            r = rt;
            jac = jt;
            cost = cost_t;
            ++accepted;
            mu *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
            nu = 2.0;
        } else {
            if (step.norm() <= 1e-12 * (1.0 + x.norm())) {
                // at the rounding floor
                converged = true;
                break;
            }
            mu *= nu;
            nu *= 2.0;
        }
    }

    LiftResult out;
    out.solution = x;
    out.iterations = accepted;
    out.residual = r.norm();
    out.gradient_norm = (2.0 * jac.transpose() * r).norm();
    if (!converged || !(out.residual <= opts.diverged_residual)) {
        std::ostringstream msg;
        msg << "lift did not converge: residual " << out.residual << " mm after " << accepted << " updates";
        fail(ErrorCode::LiftDiverged, msg.str());
    }
    return out;
}

} // namespace hmdcal
