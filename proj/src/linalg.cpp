// SPDX-License-Identifier: Apache-2.0

#include "linalg.hpp"

#include <Eigen/Dense>

#include "nlml/errors.hpp"

namespace nlml::linalg {

namespace {

Eigen::MatrixXd to_eigen(const Matrix& a) {
    Eigen::MatrixXd m(a.rows(), a.cols());
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = a(r, c);
    return m;
}

}  // namespace

void thin_svd(const Matrix& a, Matrix& u, std::vector<double>& sigma) {
    if (a.rows() == 0 || a.cols() == 0) throw UsageError("thin_svd: empty matrix");
    const Eigen::MatrixXd m = to_eigen(a);
    Eigen::MatrixXd eu;
    Eigen::VectorXd es;
    // Jacobi is the more accurate choice for the small side; fall back to
    // bidiagonal divide-and-conquer when both sides are large.
    if (std::min(a.rows(), a.cols()) <= 128) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU);
        eu = svd.matrixU();
        es = svd.singularValues();
    } else {
        Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU);
        eu = svd.matrixU();
        es = svd.singularValues();
    }
    u = Matrix(static_cast<std::size_t>(eu.rows()), static_cast<std::size_t>(eu.cols()));
    for (Eigen::Index r = 0; r < eu.rows(); ++r)
        for (Eigen::Index c = 0; c < eu.cols(); ++c)
            u(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = eu(r, c);
    sigma.assign(es.data(), es.data() + es.size());
}

std::vector<double> lstsq_min_norm(const Matrix& a, std::span<const double> b,
                                   bool& rank_deficient) {
    if (a.rows() != b.size()) throw UsageError("lstsq: rhs length mismatch");
    const Eigen::MatrixXd m = to_eigen(a);
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(b.size()));
    for (std::size_t i = 0; i < b.size(); ++i) rhs(static_cast<Eigen::Index>(i)) = b[i];

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    const double cutoff = s.size() > 0 ? 1e-12 * s(0) : 0.0;

    rank_deficient = false;
    Eigen::VectorXd coef = svd.matrixU().transpose() * rhs;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > cutoff) {
            coef(i) /= s(i);
        } else {
            coef(i) = 0.0;
            rank_deficient = true;
        }
    }
    Eigen::VectorXd x = svd.matrixV() * coef;
    return std::vector<double>(x.data(), x.data() + x.size());
}

}  // namespace nlml::linalg
