#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace volterra::linalg {

using DenseMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Thrown when a factorization meets a pivot (or R diagonal) that is zero to
/// working tolerance. Carries the offending magnitude for diagnostics.
class SingularMatrixError : public std::runtime_error {
public:
    SingularMatrixError(const std::string& what, double pivot_magnitude)
        : std::runtime_error(what), pivot_(pivot_magnitude) {}
    double pivot_magnitude() const { return pivot_; }

private:
    double pivot_;
};

/// Banded matrix in packed column-major band storage.
/// entry(i,j) lives at data[j*(lower+upper+1) + upper + i - j] and is zero
/// whenever j-i > upper_bw or i-j > lower_bw.
class BandedMatrix {
public:
    BandedMatrix() : BandedMatrix(0, 0, 0, 0) {}
    BandedMatrix(Index rows, Index cols, Index lower_bw, Index upper_bw);

    static BandedMatrix identity(Index n);
    /// Compress a dense matrix, keeping the smallest band containing all
    /// entries with |a_ij| > tol * max|a|.
    static BandedMatrix from_dense(const DenseMatrix& a, double tol = 0.0);

    Index rows() const { return rows_; }
    Index cols() const { return cols_; }
    Index lower_bw() const { return lower_; }
    Index upper_bw() const { return upper_; }

    /// Read any entry; entries outside the band are zero.
    double operator()(Index i, Index j) const;
    /// Mutable access, only valid inside the band profile.
    double& at(Index i, Index j);

    DenseMatrix to_dense() const;
    /// Drop outer bands whose entries are all below tol * max|entry|.
    BandedMatrix trimmed(double rel_tol = 1e-15) const;
    BandedMatrix transpose() const;
    /// Top-left r x c block, band profile clipped to the new shape.
    BandedMatrix top_left(Index r, Index c) const;
    double max_abs() const;

private:
    Index rows_, cols_, lower_, upper_;
    std::vector<double> data_;

    Index stride() const { return lower_ + upper_ + 1; }
};

Vector band_mul_vec(const BandedMatrix& a, const Vector& v);
BandedMatrix band_mul_band(const BandedMatrix& a, const BandedMatrix& b);
BandedMatrix band_add(const BandedMatrix& a, const BandedMatrix& b);
BandedMatrix band_scale(double s, const BandedMatrix& a);

/// Banded matrix with r unrestricted dense top rows (rows 0..r-1 come from
/// top_block; rows r.. obey the band profile of `band`).
struct AlmostBandedMatrix {
    BandedMatrix band;
    Index dense_top_rows = 0;
    DenseMatrix top_block;  // dense_top_rows x cols

    Index rows() const { return band.rows(); }
    Index cols() const { return band.cols(); }
    double entry(Index i, Index j) const;
    Vector apply(const Vector& v) const;
    DenseMatrix to_dense() const;
};

/// Solve Ax=b for square almost-banded A by Givens QR with row-segment
/// storage; O(n*(l+u)^2 + n*r) work. Throws SingularMatrixError when an
/// R diagonal entry vanishes to tolerance.
Vector almost_banded_solve(const AlmostBandedMatrix& a, const Vector& b);

/// Convenience overload for fully banded systems (r = 0).
Vector banded_solve(const BandedMatrix& a, const Vector& b);

/// Pivoted dense LU solve with an explicit singularity check.
Vector dense_solve(const DenseMatrix& a, const Vector& b);

}  // namespace volterra::linalg
