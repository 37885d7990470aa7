#include "volterra/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace volterra::linalg {

BandedMatrix::BandedMatrix(Index rows, Index cols, Index lower_bw, Index upper_bw)
    : rows_(rows), cols_(cols), lower_(lower_bw), upper_(upper_bw) {
    if (rows < 0 || cols < 0 || lower_bw < 0 || upper_bw < 0)
        throw std::invalid_argument("BandedMatrix: negative dimension or bandwidth");
    if (rows > 0 && lower_bw >= rows) lower_ = rows - 1;
    if (cols > 0 && upper_bw >= cols) upper_ = cols - 1;
    data_.assign(static_cast<size_t>(cols_) * stride(), 0.0);
}

BandedMatrix BandedMatrix::identity(Index n) {
    BandedMatrix a(n, n, 0, 0);
    for (Index i = 0; i < n; ++i) a.at(i, i) = 1.0;
    return a;
}

BandedMatrix BandedMatrix::from_dense(const DenseMatrix& a, double tol) {
    const double cutoff = tol * a.cwiseAbs().maxCoeff();
    Index lower = 0, upper = 0;
    for (Index j = 0; j < a.cols(); ++j)
        for (Index i = 0; i < a.rows(); ++i)
            if (std::abs(a(i, j)) > cutoff) {
                lower = std::max(lower, i - j);
                upper = std::max(upper, j - i);
            }
    BandedMatrix out(a.rows(), a.cols(), lower, upper);
    for (Index j = 0; j < a.cols(); ++j) {
        const Index i0 = std::max<Index>(0, j - upper);
        const Index i1 = std::min(a.rows() - 1, j + lower);
        for (Index i = i0; i <= i1; ++i) out.at(i, j) = a(i, j);
    }
    return out;
}

double BandedMatrix::operator()(Index i, Index j) const {
    if (i < 0 || j < 0 || i >= rows_ || j >= cols_)
        throw std::out_of_range("BandedMatrix: index out of range");
    if (j - i > upper_ || i - j > lower_) return 0.0;
    return data_[static_cast<size_t>(j) * stride() + upper_ + i - j];
}

double& BandedMatrix::at(Index i, Index j) {
    if (i < 0 || j < 0 || i >= rows_ || j >= cols_ || j - i > upper_ || i - j > lower_)
        throw std::out_of_range("BandedMatrix::at outside band profile");
    return data_[static_cast<size_t>(j) * stride() + upper_ + i - j];
}

DenseMatrix BandedMatrix::to_dense() const {
    DenseMatrix d = DenseMatrix::Zero(rows_, cols_);
    for (Index j = 0; j < cols_; ++j) {
        const Index i0 = std::max<Index>(0, j - upper_);
        const Index i1 = std::min(rows_ - 1, j + lower_);
        for (Index i = i0; i <= i1; ++i) d(i, j) = (*this)(i, j);
    }
    return d;
}

double BandedMatrix::max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
}

BandedMatrix BandedMatrix::trimmed(double rel_tol) const {
    const double cutoff = rel_tol * max_abs();
    Index lower = 0, upper = 0;
    for (Index j = 0; j < cols_; ++j) {
        const Index i0 = std::max<Index>(0, j - upper_);
        const Index i1 = std::min(rows_ - 1, j + lower_);
        for (Index i = i0; i <= i1; ++i)
            if (std::abs((*this)(i, j)) > cutoff) {
                lower = std::max(lower, i - j);
                upper = std::max(upper, j - i);
            }
    }
    BandedMatrix out(rows_, cols_, lower, upper);
    for (Index j = 0; j < cols_; ++j) {
        const Index i0 = std::max<Index>(0, j - upper);
        const Index i1 = std::min(rows_ - 1, j + lower);
        for (Index i = i0; i <= i1; ++i) out.at(i, j) = (*this)(i, j);
    }
    return out;
}

BandedMatrix BandedMatrix::transpose() const {
    BandedMatrix out(cols_, rows_, upper_, lower_);
    for (Index j = 0; j < cols_; ++j) {
        const Index i0 = std::max<Index>(0, j - upper_);
        const Index i1 = std::min(rows_ - 1, j + lower_);
        for (Index i = i0; i <= i1; ++i) out.at(j, i) = (*this)(i, j);
    }
    return out;
}

BandedMatrix BandedMatrix::top_left(Index r, Index c) const {
    if (r > rows_ || c > cols_)
        throw std::invalid_argument("BandedMatrix::top_left: block larger than matrix");
    BandedMatrix out(r, c, std::min(lower_, r > 0 ? r - 1 : 0), std::min(upper_, c > 0 ? c - 1 : 0));
    for (Index j = 0; j < c; ++j) {
        const Index i0 = std::max<Index>(0, j - out.upper_bw());
        const Index i1 = std::min(r - 1, j + out.lower_bw());
        for (Index i = i0; i <= i1; ++i) out.at(i, j) = (*this)(i, j);
    }
    return out;
}

Vector band_mul_vec(const BandedMatrix& a, const Vector& v) {
    if (v.size() != a.cols())
        throw std::invalid_argument("band_mul_vec: dimension mismatch");
    Vector out = Vector::Zero(a.rows());
    for (Index j = 0; j < a.cols(); ++j) {
        const Index i0 = std::max<Index>(0, j - a.upper_bw());
        const Index i1 = std::min(a.rows() - 1, j + a.lower_bw());
        const double vj = v[j];
        for (Index i = i0; i <= i1; ++i) out[i] += a(i, j) * vj;
    }
    return out;
}

BandedMatrix band_mul_band(const BandedMatrix& a, const BandedMatrix& b) {
    if (a.cols() != b.rows())
        throw std::invalid_argument("band_mul_band: dimension mismatch");
    BandedMatrix c(a.rows(), b.cols(), a.lower_bw() + b.lower_bw(), a.upper_bw() + b.upper_bw());
    for (Index j = 0; j < b.cols(); ++j) {
        const Index k0 = std::max<Index>(0, j - b.upper_bw());
        const Index k1 = std::min(b.rows() - 1, j + b.lower_bw());
        for (Index k = k0; k <= k1; ++k) {
            const double bkj = b(k, j);
            if (bkj == 0.0) continue;
            const Index i0 = std::max<Index>(0, k - a.upper_bw());
            const Index i1 = std::min(a.rows() - 1, k + a.lower_bw());
            for (Index i = i0; i <= i1; ++i) c.at(i, j) += a(i, k) * bkj;
        }
    }
    return c.trimmed(1e-15);
}

BandedMatrix band_add(const BandedMatrix& a, const BandedMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("band_add: dimension mismatch");
    BandedMatrix c(a.rows(), a.cols(), std::max(a.lower_bw(), b.lower_bw()),
                   std::max(a.upper_bw(), b.upper_bw()));
    for (Index j = 0; j < c.cols(); ++j) {
        const Index i0 = std::max<Index>(0, j - c.upper_bw());
        const Index i1 = std::min(c.rows() - 1, j + c.lower_bw());
        for (Index i = i0; i <= i1; ++i) c.at(i, j) = a(i, j) + b(i, j);
    }
    return c;
}

BandedMatrix band_scale(double s, const BandedMatrix& a) {
    BandedMatrix c = a;
    for (Index j = 0; j < c.cols(); ++j) {
        const Index i0 = std::max<Index>(0, j - c.upper_bw());
        const Index i1 = std::min(c.rows() - 1, j + c.lower_bw());
        for (Index i = i0; i <= i1; ++i) c.at(i, j) *= s;
    }
    return c;
}

double AlmostBandedMatrix::entry(Index i, Index j) const {
    if (i < dense_top_rows) return top_block(i, j);
    return band(i, j);
}

Vector AlmostBandedMatrix::apply(const Vector& v) const {
    Vector out = band_mul_vec(band, v);
    for (Index i = 0; i < dense_top_rows; ++i) out[i] = top_block.row(i).dot(v);
    return out;
}

DenseMatrix AlmostBandedMatrix::to_dense() const {
    DenseMatrix d = band.to_dense();
    for (Index i = 0; i < dense_top_rows; ++i) d.row(i) = top_block.row(i);
    return d;
}

namespace {

// Row segment: contiguous nonzeros starting at column `start`.
struct RowSeg {
    Index start = 0;
    std::vector<double> vals;

    double get(Index j) const {
        const Index o = j - start;
        return (o >= 0 && o < static_cast<Index>(vals.size())) ? vals[o] : 0.0;
    }
};

// Replace the segment pair (p, q) by a given plane rotation, extending both
// to the union of supports truncated on the left at `col`.
void rotate_segs(RowSeg& p, RowSeg& q, Index col, double c, double s) {
    const Index end = std::max(p.start + static_cast<Index>(p.vals.size()),
                               q.start + static_cast<Index>(q.vals.size()));
    RowSeg np, nq;
    np.start = col;
    nq.start = col;
    np.vals.resize(std::max<Index>(end - col, 1));
    nq.vals.resize(std::max<Index>(end - col, 1));
    for (Index j = col; j < end; ++j) {
        const double pj = p.get(j), qj = q.get(j);
        np.vals[j - col] = c * pj + s * qj;
        nq.vals[j - col] = -s * pj + c * qj;
    }
    p = std::move(np);
    q = std::move(nq);
}

}  // namespace

Vector almost_banded_solve(const AlmostBandedMatrix& a, const Vector& b) {
    const Index n = a.rows();
    if (a.cols() != n) throw std::invalid_argument("almost_banded_solve: matrix not square");
    if (b.size() != n) throw std::invalid_argument("almost_banded_solve: rhs size mismatch");
    const Index r = a.dense_top_rows;
    const Index l = a.band.lower_bw(), u = a.band.upper_bw();

    // Working row i is seg[i] + fcoef.row(i) * top_block. Givens rotations
    // preserve this split, so fill-in caused by the dense rows stays rank-r
    // instead of spreading a dense tail through the band (which would make
    // the factorization quadratic in n).
    std::vector<RowSeg> seg(n);
    DenseMatrix fcoef = DenseMatrix::Zero(n, std::max<Index>(r, 1));
    for (Index i = 0; i < n; ++i) {
        if (i < r) {
            seg[i].start = i;
            seg[i].vals.assign(1, 0.0);
            fcoef(i, i) = 1.0;
        } else {
            const Index j0 = std::max<Index>(0, i - l);
            const Index j1 = std::min(n - 1, i + u);
            seg[i].start = j0;
            seg[i].vals.resize(j1 - j0 + 1);
            for (Index j = j0; j <= j1; ++j) seg[i].vals[j - j0] = a.band(i, j);
        }
    }
    Vector rhs = b;

    auto entry = [&](Index i, Index j) {
        double v = seg[i].get(j);
        if (r > 0) v += fcoef.row(i).head(r).dot(a.top_block.col(j));
        return v;
    };

    const double scale = std::max(a.band.max_abs(),
                                  r > 0 ? a.top_block.cwiseAbs().maxCoeff() : 0.0);
    // Eliminate below the diagonal, column by column. Rows with support
    // reaching column j from below are the banded rows i <= j+l and any
    // not-yet-pivoted dense top rows; rows further down have not been touched
    // yet and are still zero left of their band.
    for (Index j = 0; j < n; ++j) {
        const Index last = std::min(n - 1, std::max(j + l, r - 1));
        for (Index i = j + 1; i <= last; ++i) {
            const double pj = entry(j, j), qj = entry(i, j);
            if (qj == 0.0) continue;
            const double h = std::hypot(pj, qj);
            const double c = pj / h, s = qj / h;
            rotate_segs(seg[j], seg[i], j, c, s);
            if (r > 0) {
                const Vector fp = c * fcoef.row(j).transpose() + s * fcoef.row(i).transpose();
                fcoef.row(i) = -s * fcoef.row(j) + c * fcoef.row(i);
                fcoef.row(j) = fp.transpose();
                // make the eliminated entry exactly zero in the split form
                seg[i].vals[0] = -fcoef.row(i).head(r).dot(a.top_block.col(j));
            } else {
                seg[i].vals[0] = 0.0;
            }
            const double bp = c * rhs[j] + s * rhs[i];
            rhs[i] = -s * rhs[j] + c * rhs[i];
            rhs[j] = bp;
        }
    }

    Vector x(n);
    Vector suffix = Vector::Zero(std::max<Index>(r, 1));  // sum_{k>i} x_k * top_block(:,k)
    const double tol = 1e-14 * std::max(scale, 1.0);
    for (Index i = n - 1; i >= 0; --i) {
        const RowSeg& row = seg[i];
        double s = rhs[i];
        const Index end = row.start + static_cast<Index>(row.vals.size());
        for (Index j = std::max(row.start, i + 1); j < end; ++j) s -= row.get(j) * x[j];
        if (r > 0) s -= fcoef.row(i).head(r).dot(suffix.head(r));
        const double d = entry(i, i);
        if (std::abs(d) <= tol)
            throw SingularMatrixError(
                "almost_banded_solve: R diagonal entry " + std::to_string(i) +
                    " has magnitude " + std::to_string(std::abs(d)),
                std::abs(d));
        x[i] = s / d;
        if (r > 0) suffix.head(r) += x[i] * a.top_block.col(i);
    }
    return x;
}

Vector banded_solve(const BandedMatrix& a, const Vector& b) {
    AlmostBandedMatrix ab{a, 0, DenseMatrix(0, a.cols())};
    return almost_banded_solve(ab, b);
}

Vector dense_solve(const DenseMatrix& a, const Vector& b) {
    if (a.rows() != a.cols()) throw std::invalid_argument("dense_solve: matrix not square");
    if (b.size() != a.rows()) throw std::invalid_argument("dense_solve: rhs size mismatch");
    Eigen::PartialPivLU<DenseMatrix> lu(a);
    const auto diag = lu.matrixLU().diagonal();
    const double dmin = diag.cwiseAbs().minCoeff();
    const double dmax = std::max(a.cwiseAbs().maxCoeff(), 1.0);
    if (dmin <= 1e-15 * dmax)
        throw SingularMatrixError(
            "dense_solve: pivot magnitude " + std::to_string(dmin), dmin);
    return lu.solve(b);
}

}  // namespace volterra::linalg
