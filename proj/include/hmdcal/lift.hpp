#pragma once

// Two-unknown damped least squares used by the lifting projections. The
// unknown is a chart point on a base plane; the residual is a point-to-line
// offset in 3D with the line parameter eliminated in closed form.

#include <functional>
#include <optional>

#include <Eigen/Core>

#include "hmdcal/geometry.hpp"

namespace hmdcal {

using Mat32 = Eigen::Matrix<double, 3, 2>;

/// Per-caller warm-start memory. One instance per thread of control.
struct LiftState {
    std::optional<Vec2> last_solution;
    const void* last_query_key = nullptr;  ///< identity of the model that produced last_solution

    void reset() {
        last_solution.reset();
        last_query_key = nullptr;
    }
};

struct LiftResult {
    Vec2 solution = Vec2::Zero();
    int iterations = 0;          ///< accepted parameter updates
    double residual = 0.0;       ///< point-to-line distance at the solution, mm
    double gradient_norm = 0.0;  ///< ||grad ||r||^2|| at the solution
    bool extrapolated = false;   ///< (base point, slope) at the solution lies outside the sampled box
    bool warm_started = false;
};

struct LiftOptions {
    int max_iterations = 50;
    double diverged_residual = 1e-3;  ///< mm; larger final residual throws LiftDiverged
    bool use_warm_start = true;
};

/// Residual r(x) in R^3 and its Jacobian dr/dx, x in R^2.
using LiftResidual = std::function<void(const Vec2& x, Eigen::Vector3d& r, Mat32& jac)>;

/// Levenberg-Marquardt from x0 until the Gauss-Newton step is negligible.
/// Throws LiftDiverged.
LiftResult solve_lift(const Vec2& x0, const LiftResidual& residual, const LiftOptions& opts);

/// Offset from target to the line anchor + t * dir with t chosen to minimize
/// the distance (clamped to t >= 0 when requested), plus its Jacobian given
/// d anchor / dx and d dir / dx. dir need not be unit length.
void point_line_residual(const Vec3& anchor, const Mat32& d_anchor, const Vec3& dir, const Mat32& d_dir,
                         const Vec3& target, bool clamp_nonnegative, Eigen::Vector3d& r, Mat32& jac);

} // namespace hmdcal
