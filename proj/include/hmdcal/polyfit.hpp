#pragma once

// Dense total-degree multivariate polynomials with per-input affine
// normalization to [-1, 1], least-squares fitting and analytic Jacobians.

#include <utility>
#include <vector>

#include <Eigen/Core>

namespace hmdcal {

struct InputRange {
    double lo = -1.0;
    double hi = 1.0;
};

struct FitReport {
    double rms_residual = 0.0;  ///< sqrt(mean ||residual||^2), output units
    double max_residual = 0.0;  ///< max ||residual||
    double condition_estimate = 0.0;
    int n_samples = 0;
    bool regularized = false;   ///< ridge fallback was used
};

class PolyModel {
public:
    static constexpr int kMaxInputs = 8;
    static constexpr int kMaxDegree = 15;

    PolyModel() = default;
    /// Zero-coefficient model over the given box.
    PolyModel(int in_dim, int out_dim, int degree, std::vector<InputRange> box);

    int in_dim() const { return in_dim_; }
    int out_dim() const { return out_dim_; }
    int degree() const { return degree_; }
    int n_terms() const { return static_cast<int>(exponents_.size()); }
    const std::vector<InputRange>& input_box() const { return box_; }
    const std::vector<std::vector<int>>& exponents() const { return exponents_; }
    const Eigen::MatrixXd& coeffs() const { return coeffs_; }

    /// out_dim x n_terms, in normalized-input monomial space.
    void set_coeffs(const Eigen::MatrixXd& c);

    bool in_box(const Eigen::Ref<const Eigen::VectorXd>& x) const;

    Eigen::VectorXd eval(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    Eigen::VectorXd eval(const Eigen::Ref<const Eigen::VectorXd>& x, bool& extrapolated) const;

    /// out_dim x in_dim, d output / d raw input.
    Eigen::MatrixXd jacobian(const Eigen::Ref<const Eigen::VectorXd>& x) const;

    /// Value and Jacobian in one pass.
    void eval_with_jacobian(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::VectorXd& value,
                            Eigen::MatrixXd& jac) const;

    /// Normalized monomial row used as one Vandermonde row.
    Eigen::RowVectorXd basis_row(const Eigen::Ref<const Eigen::VectorXd>& x) const;

    /// Exponent lists for every monomial of total degree <= degree, graded
    /// lexicographic order.
    static std::vector<std::vector<int>> total_degree_exponents(int in_dim, int degree);

    friend bool operator==(const PolyModel& a, const PolyModel& b);

private:
    void normalize(const Eigen::Ref<const Eigen::VectorXd>& x, double* z) const;

    int in_dim_ = 0;
    int out_dim_ = 0;
    int degree_ = 0;
    std::vector<InputRange> box_;
    std::vector<std::vector<int>> exponents_;
    Eigen::MatrixXd coeffs_;
};

struct FitOptions {
    double max_condition = 1e12;
    bool allow_ridge = true;  ///< otherwise ill-conditioning throws
    double ridge_lambda = 1e-10;
};

/// Least squares on the normalized Vandermonde matrix via column-pivoted QR.
/// x is n x in_dim, y is n x out_dim. Throws Underdetermined for too few or
/// rank-deficient samples and IllConditioned when the condition estimate
/// exceeds the limit and the ridge fallback is disabled.
std::pair<PolyModel, FitReport> fit_poly(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, int degree,
                                         const FitOptions& opts = {});

/// Same as fit_poly, with an explicit normalization box.
std::pair<PolyModel, FitReport> fit_poly(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, int degree,
                                         std::vector<InputRange> box, const FitOptions& opts = {});

} // namespace hmdcal
