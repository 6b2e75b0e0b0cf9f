#include "hmdcal/polyfit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "hmdcal/error.hpp"

namespace hmdcal {

namespace {

using PowerTable = std::array<std::array<double, PolyModel::kMaxDegree + 1>, PolyModel::kMaxInputs>;

void fill_powers(const double* z, int in_dim, int degree, PowerTable& pw) {
    for (int d = 0; d < in_dim; ++d) {
        pw[d][0] = 1.0;
        for (int k = 1; k <= degree; ++k) {
            pw[d][k] = pw[d][k - 1] * z[d];
        }
    }
}

std::vector<InputRange> bounding_box(const Eigen::MatrixXd& x) {
    std::vector<InputRange> box(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index d = 0; d < x.cols(); ++d) {
        box[static_cast<std::size_t>(d)] = InputRange{x.col(d).minCoeff(), x.col(d).maxCoeff()};
    }
    return box;
}

} // namespace

std::vector<std::vector<int>> PolyModel::total_degree_exponents(int in_dim, int degree) {
    std::vector<std::vector<int>> out;
    std::vector<int> e(static_cast<std::size_t>(in_dim), 0);
    // enumerate by total degree, then lexicographically
    for (int total = 0; total <= degree; ++total) {
        auto rec = [&](auto&& self, int dim, int remaining) -> void {
            if (dim == in_dim - 1) {
                e[static_cast<std::size_t>(dim)] = remaining;
                out.push_back(e);
                return;
            }
            for (int k = remaining; k >= 0; --k) {
                e[static_cast<std::size_t>(dim)] = k;
                self(self, dim + 1, remaining - k);
            }
        };
        rec(rec, 0, total);
    }
    return out;
}

PolyModel::PolyModel(int in_dim, int out_dim, int degree, std::vector<InputRange> box)
    : in_dim_(in_dim), out_dim_(out_dim), degree_(degree), box_(std::move(box)) {
    if (in_dim < 1 || in_dim > kMaxInputs || out_dim < 1 || degree < 0 || degree > kMaxDegree) {
        fail(ErrorCode::InvalidArgument, "PolyModel: unsupported dimensions or degree");
    }
    if (static_cast<int>(box_.size()) != in_dim) {
        fail(ErrorCode::InvalidArgument, "PolyModel: input box size does not match in_dim");
    }
    for (const auto& r : box_) {
        if (!(r.lo < r.hi) || !std::isfinite(r.lo) || !std::isfinite(r.hi)) {
            fail(ErrorCode::Underdetermined, "PolyModel: degenerate input box");
        }
    }
    exponents_ = total_degree_exponents(in_dim, degree);
    coeffs_ = Eigen::MatrixXd::Zero(out_dim, n_terms());
}

void PolyModel::set_coeffs(const Eigen::MatrixXd& c) {
    if (c.rows() != out_dim_ || c.cols() != n_terms() || !c.allFinite()) {
        fail(ErrorCode::InvalidArgument, "PolyModel: coefficient matrix has the wrong shape or is not finite");
    }
    coeffs_ = c;
}

void PolyModel::normalize(const Eigen::Ref<const Eigen::VectorXd>& x, double* z) const {
    if (x.size() != in_dim_) {
        fail(ErrorCode::InvalidArgument, "PolyModel: input has the wrong dimension");
    }
    for (int d = 0; d < in_dim_; ++d) {
        const auto& r = box_[static_cast<std::size_t>(d)];
        z[d] = (2.0 * x[d] - (r.lo + r.hi)) / (r.hi - r.lo);
    }
}

bool PolyModel::in_box(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    for (int d = 0; d < in_dim_; ++d) {
        const auto& r = box_[static_cast<std::size_t>(d)];
        if (x[d] < r.lo || x[d] > r.hi) {
            return false;
        }
    }
    return true;
}

Eigen::RowVectorXd PolyModel::basis_row(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    std::array<double, kMaxInputs> z{};
    normalize(x, z.data());
    PowerTable pw;
    fill_powers(z.data(), in_dim_, degree_, pw);
    Eigen::RowVectorXd row(n_terms());
    for (int t = 0; t < n_terms(); ++t) {
        const auto& e = exponents_[static_cast<std::size_t>(t)];
        double m = 1.0;
        for (int d = 0; d < in_dim_; ++d) {
            m *= pw[d][e[static_cast<std::size_t>(d)]];
        }
        row[t] = m;
    }
    return row;
}

Eigen::VectorXd PolyModel::eval(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    return coeffs_ * basis_row(x).transpose();
}

Eigen::VectorXd PolyModel::eval(const Eigen::Ref<const Eigen::VectorXd>& x, bool& extrapolated) const {
    extrapolated = !in_box(x);
    return eval(x);
}

void PolyModel::eval_with_jacobian(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::VectorXd& value,
                                   Eigen::MatrixXd& jac) const {
    std::array<double, kMaxInputs> z{};
    normalize(x, z.data());
    PowerTable pw;
    fill_powers(z.data(), in_dim_, degree_, pw);
    value = Eigen::VectorXd::Zero(out_dim_);
    jac = Eigen::MatrixXd::Zero(out_dim_, in_dim_);
    std::array<double, kMaxInputs> dm{};
    for (int t = 0; t < n_terms(); ++t) {
        const auto& e = exponents_[static_cast<std::size_t>(t)];
        double m = 1.0;
        for (int d = 0; d < in_dim_; ++d) {
            m *= pw[d][e[static_cast<std::size_t>(d)]];
        }
        for (int d = 0; d < in_dim_; ++d) {
            const int ed = e[static_cast<std::size_t>(d)];
            if (ed == 0) {
                dm[d] = 0.0;
                continue;
            }
            double p = ed * pw[d][ed - 1];
            for (int k = 0; k < in_dim_; ++k) {
                if (k != d) {
                    p *= pw[k][e[static_cast<std::size_t>(k)]];
                }
            }
            dm[d] = p;
        }
        for (int o = 0; o < out_dim_; ++o) {
            const double c = coeffs_(o, t);
            value[o] += c * m;
            for (int d = 0; d < in_dim_; ++d) {
                jac(o, d) += c * dm[d];
            }
        }
    }
    // chain rule through the normalization
    for (int d = 0; d < in_dim_; ++d) {
        const auto& r = box_[static_cast<std::size_t>(d)];
        jac.col(d) *= 2.0 / (r.hi - r.lo);
    }
}

Eigen::MatrixXd PolyModel::jacobian(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    Eigen::VectorXd v;
    Eigen::MatrixXd j;
    eval_with_jacobian(x, v, j);
    return j;
}

bool operator==(const PolyModel& a, const PolyModel& b) {
    if (a.in_dim_ != b.in_dim_ || a.out_dim_ != b.out_dim_ || a.degree_ != b.degree_ ||
        a.exponents_ != b.exponents_ || a.box_.size() != b.box_.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.box_.size(); ++i) {
        if (a.box_[i].lo != b.box_[i].lo || a.box_[i].hi != b.box_[i].hi) {
            return false;
        }
    }
    return a.coeffs_ == b.coeffs_;
}

std::pair<PolyModel, FitReport> fit_poly(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, int degree,
                                         const FitOptions& opts) {
    if (x.rows() == 0) {
        fail(ErrorCode::Underdetermined, "fit_poly: no samples");
    }
    return fit_poly(x, y, degree, bounding_box(x), opts);
}

std::pair<PolyModel, FitReport> fit_poly(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, int degree,
                                         std::vector<InputRange> box, const FitOptions& opts) {
    if (x.rows() != y.rows()) {
        fail(ErrorCode::InvalidArgument, "fit_poly: x and y sample counts differ");
    }
    if (!x.allFinite() || !y.allFinite()) {
        fail(ErrorCode::InvalidArgument, "fit_poly: non-finite samples");
    }
    PolyModel model(static_cast<int>(x.cols()), static_cast<int>(y.cols()), degree, std::move(box));
    const Eigen::Index n = x.rows();
    const int terms = model.n_terms();
    if (n < terms) {
        std::ostringstream msg;
        msg << "fit_poly: " << n << " samples for " << terms << " terms";
        fail(ErrorCode::Underdetermined, msg.str());
    }

    Eigen::MatrixXd a(n, terms);
    for (Eigen::Index i = 0; i < n; ++i) {
        a.row(i) = model.basis_row(x.row(i).transpose());
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < terms) {
        std::ostringstream msg;
        msg << "fit_poly: Vandermonde matrix has rank " << qr.rank() << " < " << terms;
        fail(ErrorCode::Underdetermined, msg.str());
    }
    const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(terms, terms).triangularView<Eigen::Upper>();
    const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(r).singularValues();
    FitReport report;
    report.condition_estimate = sv[0] / sv[sv.size() - 1];
    report.n_samples = static_cast<int>(n);

    Eigen::MatrixXd c;
    if (report.condition_estimate > opts.max_condition) {
        if (!opts.allow_ridge) {
            std::ostringstream msg;
            msg << "fit_poly: condition estimate " << report.condition_estimate;
            fail(ErrorCode::IllConditioned, msg.str());
        }
        Eigen::MatrixXd aug(n + terms, terms);
        aug << a, std::sqrt(opts.ridge_lambda) * Eigen::MatrixXd::Identity(terms, terms);
        Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n + terms, y.cols());
        rhs.topRows(n) = y;
        c = aug.colPivHouseholderQr().solve(rhs);
        report.regularized = true;
    } else {
        c = qr.solve(y);
    }
    model.set_coeffs(c.transpose());

    double sum_sq = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double e = (model.eval(x.row(i).transpose()) - y.row(i).transpose()).norm();
        sum_sq += e * e;
        report.max_residual = std::max(report.max_residual, e);
    }
    report.rms_residual = std::sqrt(sum_sq / static_cast<double>(n));
    return {std::move(model), report};
}

} // namespace hmdcal
