#pragma once

// Interval vectors, matrices and boxes for small dimensions (<= 8).

#include <vmel/interval.hpp>

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace vmel {

class DimensionMismatch : public error {
public:
    DimensionMismatch() : error("dimension mismatch") {}
};

struct IVector {
    std::vector<Interval> c;

    IVector() = default;
    explicit IVector(std::size_t n) : c(n) {}
    IVector(std::initializer_list<Interval> init) : c(init) {}

    std::size_t size() const { return c.size(); }
    Interval& operator[](std::size_t i) { return c[i]; }
    const Interval& operator[](std::size_t i) const { return c[i]; }

    bool contains(const IVector& o) const {
        if (o.size() != size()) return false;
        for (std::size_t i = 0; i < size(); ++i)
            if (!c[i].contains(o.c[i])) return false;
        return true;
    }
    bool strictly_inside(const IVector& o) const {
        if (o.size() != size()) return false;
        for (std::size_t i = 0; i < size(); ++i)
            if (!c[i].strictly_inside(o.c[i])) return false;
        return true;
    }
    IVector mid() const {
        IVector m(size());
        for (std::size_t i = 0; i < size(); ++i) m[i] = Interval(c[i].mid());
        return m;
    }
    double max_width() const {
        double w = 0;
        for (const auto& x : c) w = std::max(w, x.width());
        return w;
    }
};

inline IVector operator+(const IVector& a, const IVector& b) {
    if (a.size() != b.size()) throw DimensionMismatch();
    IVector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}
inline IVector operator-(const IVector& a, const IVector& b) {
    if (a.size() != b.size()) throw DimensionMismatch();
    IVector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}
inline IVector operator*(const Interval& s, const IVector& a) {
    IVector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = s * a[i];
    return r;
}
inline IVector operator-(const IVector& a) {
    IVector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = -a[i];
    return r;
}

inline Interval dot(const IVector& a, const IVector& b) {
    if (a.size() != b.size()) throw DimensionMismatch();
    Interval s(0.0);
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// enclosure of the Euclidean norm over all points of the box
inline Interval vec_norm_sup(const IVector& v) {
    Interval s(0.0);
    for (std::size_t i = 0; i < v.size(); ++i) s += sqr(v[i]);
    if (s.lo < 0.0) s.lo = 0.0;  // sums of squares, rounding skew only
    return sqrt(s);
}

struct IMatrix {
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<Interval> e;  // row major

    IMatrix() = default;
    IMatrix(std::size_t r, std::size_t c) : rows_(r), cols_(c), e(r * c) {}

    static IMatrix identity(std::size_t n) {
        IMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = Interval(1.0);
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    Interval& operator()(std::size_t i, std::size_t j) { return e[i * cols_ + j]; }
    const Interval& operator()(std::size_t i, std::size_t j) const { return e[i * cols_ + j]; }

    IMatrix transpose() const {
        IMatrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }
    IMatrix mid() const {
        IMatrix m(rows_, cols_);
        for (std::size_t i = 0; i < e.size(); ++i) m.e[i] = Interval(e[i].mid());
        return m;
    }
    bool contains(const IMatrix& o) const {
        if (o.rows_ != rows_ || o.cols_ != cols_) return false;
        for (std::size_t i = 0; i < e.size(); ++i)
            if (!e[i].contains(o.e[i])) return false;
        return true;
    }
    double max_width() const {
        double w = 0;
        for (const auto& x : e) w = std::max(w, x.width());
        return w;
    }
};

inline IMatrix operator+(const IMatrix& a, const IMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionMismatch();
    IMatrix r(a.rows(), a.cols());
    for (std::size_t i = 0; i < r.e.size(); ++i) r.e[i] = a.e[i] + b.e[i];
    return r;
}
inline IMatrix operator-(const IMatrix& a, const IMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionMismatch();
    IMatrix r(a.rows(), a.cols());
    for (std::size_t i = 0; i < r.e.size(); ++i) r.e[i] = a.e[i] - b.e[i];
    return r;
}
inline IMatrix operator-(const IMatrix& a) {
    IMatrix r(a.rows(), a.cols());
    for (std::size_t i = 0; i < r.e.size(); ++i) r.e[i] = -a.e[i];
    return r;
}
inline IMatrix operator*(const Interval& s, const IMatrix& a) {
    IMatrix r(a.rows(), a.cols());
    for (std::size_t i = 0; i < r.e.size(); ++i) r.e[i] = s * a.e[i];
    return r;
}
inline IMatrix operator*(const IMatrix& a, const IMatrix& b) {
    if (a.cols() != b.rows()) throw DimensionMismatch();
    IMatrix r(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const Interval aik = a(i, k);
            if (aik.lo == 0 && aik.hi == 0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) r(i, j) += aik * b(k, j);
        }
    return r;
}
inline IVector operator*(const IMatrix& a, const IVector& x) {
    if (a.cols() != x.size()) throw DimensionMismatch();
    IVector r(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        Interval s(0.0);
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
        r[i] = s;
    }
    return r;
}

// cheap rigorous bound on the spectral norm: min(Frobenius, sqrt(norm1*normInf))
// of the magnitude matrix
inline double mat_opnorm_sup(const IMatrix& a) {
    if (a.rows() == 0 || a.cols() == 0) return 0.0;
    Interval frob(0.0);
    for (const auto& x : a.e) frob += sqr(x);
    if (frob.lo < 0.0) frob.lo = 0.0;
    double f = sqrt(frob).hi;
    // one-norm and infinity-norm of |A|
    double n1 = 0, ninf = 0;
    for (std::size_t j = 0; j < a.cols(); ++j) {
        Interval s(0.0);
        for (std::size_t i = 0; i < a.rows(); ++i) s += Interval(a(i, j).mag());
        n1 = std::max(n1, s.hi);
    }
    for (std::size_t i = 0; i < a.rows(); ++i) {
        Interval s(0.0);
        for (std::size_t j = 0; j < a.cols(); ++j) s += Interval(a(i, j).mag());
        ninf = std::max(ninf, s.hi);
    }
    Interval prod = Interval(n1) * Interval(ninf);
    if (prod.lo < 0.0) prod.lo = 0.0;
    double g = sqrt(prod).hi;
    return std::min(f, g);
}

class SingularJacobian : public error {
public:
    SingularJacobian() : error("interval matrix could not be inverted") {}
};

// Solve A x = b by interval Gaussian elimination with partial pivoting
// (by midpoint magnitude).  Throws SingularJacobian when a pivot contains 0.
inline IVector solve(IMatrix a, IVector b) {
    const std::size_t n = a.rows();
    if (a.cols() != n || b.size() != n) throw DimensionMismatch();
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        double best = a(k, k).mig();
        for (std::size_t i = k + 1; i < n; ++i)
            if (a(i, k).mig() > best) { best = a(i, k).mig(); piv = i; }
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
            std::swap(b[k], b[piv]);
        }
        if (a(k, k).contains_zero()) throw SingularJacobian();
        for (std::size_t i = k + 1; i < n; ++i) {
            Interval m = a(i, k) / a(k, k);
            a(i, k) = Interval(0.0);
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= m * a(k, j);
            b[i] -= m * b[k];
        }
    }
    IVector x(n);
    for (std::size_t k = n; k-- > 0;) {
        Interval s = b[k];
        for (std::size_t j = k + 1; j < n; ++j) s -= a(k, j) * x[j];
        x[k] = s / a(k, k);
    }
    return x;
}

inline IMatrix inverse(const IMatrix& a) {
    const std::size_t n = a.rows();
    IMatrix inv(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        IVector ej(n);
        ej[j] = Interval(1.0);
        IVector col = solve(a, ej);
        for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
    }
    return inv;
}

// -------------------------------------------------------------------------
// Box: an interval vector with per-coordinate topology.
// -------------------------------------------------------------------------

struct CoordTopology {
    bool periodic = false;
    double period = 0.0;
};

struct Box {
    IVector v;
    std::vector<CoordTopology> topo;

    Box() = default;
    explicit Box(IVector vec) : v(std::move(vec)), topo(v.size()) {}
    Box(IVector vec, std::vector<CoordTopology> t) : v(std::move(vec)), topo(std::move(t)) {
        if (topo.size() != v.size()) throw DimensionMismatch();
    }

    std::size_t dim() const { return v.size(); }
    Interval& operator[](std::size_t i) { return v[i]; }
    const Interval& operator[](std::size_t i) const { return v[i]; }
};

// split a box along one axis into n equal parts (outer rounding keeps the
// union a superset of the input)
inline std::vector<Box> split(const Box& b, std::size_t axis, std::size_t parts) {
    if (parts < 1) throw error("split into zero parts");
    if (axis >= b.dim()) throw DimensionMismatch();
    std::vector<Box> out;
    out.reserve(parts);
    const Interval whole = b[axis];
    double prev = whole.lo;
    for (std::size_t i = 0; i < parts; ++i) {
        double frac_hi;
        if (i + 1 == parts) {
            frac_hi = whole.hi;
        } else {
            // endpoint of piece i+1: lo + w*(i+1)/parts rounded up
            Interval t = Interval(whole.lo) +
                         (Interval(whole.hi) - Interval(whole.lo)) * Interval(double(i + 1)) / Interval(double(parts));
            frac_hi = std::min(whole.hi, t.hi);
        }
        Box piece = b;
        piece[axis] = Interval(prev, std::max(prev, frac_hi));
        out.push_back(piece);
        prev = piece[axis].hi;
    }
    return out;
}

// grid split: counts per coordinate
inline std::vector<Box> split_grid(const Box& b, const std::vector<std::size_t>& counts) {
    if (counts.size() != b.dim()) throw DimensionMismatch();
    std::vector<Box> cells{b};
    for (std::size_t axis = 0; axis < counts.size(); ++axis) {
        if (counts[axis] <= 1) continue;
        std::vector<Box> next;
        next.reserve(cells.size() * counts[axis]);
        for (const auto& c : cells) {
            auto parts = split(c, axis, counts[axis]);
            next.insert(next.end(), parts.begin(), parts.end());
        }
        cells = std::move(next);
    }
    return cells;
}

}  // namespace vmel
