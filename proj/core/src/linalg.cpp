#include "wasgd/linalg.hpp"

#include <string>

#include "wasgd/error.hpp"

namespace wasgd {

DenseMatrix symmetrize(const DenseMatrix& m) { return 0.5 * (m + m.transpose()); }

namespace {

Eigen::LDLT<DenseMatrix> factorize(const DenseMatrix& m, double ridge) {
    if (m.rows() != m.cols() || m.rows() == 0) {
        throw NotSpd("expected a non-empty square matrix, got " + std::to_string(m.rows()) + "x" +
                     std::to_string(m.cols()));
    }
    DenseMatrix sym = symmetrize(m);
    Eigen::LDLT<DenseMatrix> ldlt(sym);
    auto min_pivot = [](const Eigen::LDLT<DenseMatrix>& f) { return f.vectorD().minCoeff(); };

    if (ridge > 0.0 && (ldlt.info() != Eigen::Success || min_pivot(ldlt) < ridge)) {
        sym.diagonal().array() += ridge;
        ldlt.compute(sym);
    }
    if (ldlt.info() != Eigen::Success || !(min_pivot(ldlt) > 0.0)) {
        throw NotSpd("matrix is not positive definite (smallest pivot " +
                     std::to_string(min_pivot(ldlt)) + ", ridge " + std::to_string(ridge) + ")");
    }
    return ldlt;
}

}  // namespace

DenseMatrix invert_spd(const DenseMatrix& m, double ridge) {
    const auto ldlt = factorize(m, ridge);
    DenseMatrix inv = ldlt.solve(DenseMatrix::Identity(m.rows(), m.cols()));
    return symmetrize(inv);
}

Vector solve_spd(const DenseMatrix& m, const Vector& rhs, double ridge) {
    return factorize(m, ridge).solve(rhs);
}

}  // namespace wasgd
