#pragma once

#include <cmath>

namespace smm {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

// General real 2x2 matrix (drift matrices).
struct Mat2 {
    double a11 = 0.0, a12 = 0.0;
    double a21 = 0.0, a22 = 0.0;

    double trace() const { return a11 + a22; }
    double det() const { return a11 * a22 - a12 * a21; }
};

// Symmetric real 2x2 matrix (covariances, diffusion).
struct SymMat2 {
    double m11 = 0.0;
    double m12 = 0.0;
    double m22 = 0.0;

    double trace() const { return m11 + m22; }
    double det() const { return m11 * m22 - m12 * m12; }

    SymMat2 inverse() const {
        const double d = det();
        return {m22 / d, -m12 / d, m11 / d};
    }

    friend SymMat2 operator+(const SymMat2& a, const SymMat2& b) {
        return {a.m11 + b.m11, a.m12 + b.m12, a.m22 + b.m22};
    }
    friend SymMat2 operator-(const SymMat2& a, const SymMat2& b) {
        return {a.m11 - b.m11, a.m12 - b.m12, a.m22 - b.m22};
    }
    friend SymMat2 operator*(double s, const SymMat2& a) {
        return {s * a.m11, s * a.m12, s * a.m22};
    }
    friend SymMat2 operator/(const SymMat2& a, double s) {
        return {a.m11 / s, a.m12 / s, a.m22 / s};
    }
};

// tr[(A^-1 B)^2] for symmetric A, B; used by the Gaussian QFI.
inline double trace_inv_sq(const SymMat2& a, const SymMat2& b) {
    const SymMat2 ai = a.inverse();
    // G = ai * b (general matrix)
    const double g11 = ai.m11 * b.m11 + ai.m12 * b.m12;
    const double g12 = ai.m11 * b.m12 + ai.m12 * b.m22;
    const double g21 = ai.m12 * b.m11 + ai.m22 * b.m12;
    const double g22 = ai.m12 * b.m12 + ai.m22 * b.m22;
    return g11 * g11 + 2.0 * g12 * g21 + g22 * g22;
}

// x^T A^-1 x
inline double quad_form_inv(const SymMat2& a, const Vec2& v) {
    const SymMat2 ai = a.inverse();
    return ai.m11 * v.x * v.x + 2.0 * ai.m12 * v.x * v.y + ai.m22 * v.y * v.y;
}

inline double frobenius(const SymMat2& a) {
    return std::sqrt(a.m11 * a.m11 + 2.0 * a.m12 * a.m12 + a.m22 * a.m22);
}

} // namespace smm
