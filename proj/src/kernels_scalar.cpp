#include "audexplain/kernels.hpp"

#include <cmath>

namespace audexplain::kernels {

namespace {

void axpy_f64(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void accumulate_f32_f64(const float* x, double* acc, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) acc[i] += static_cast<double>(x[i]);
}

void window_mul_f32_f64(const float* x, const double* w, double* dst, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] = static_cast<double>(x[i]) * w[i];
}

void scale_f32(const float* x, float a, float* dst, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] = x[i] * a;
}

double sum_squares_f32(const float* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = static_cast<double>(x[i]);
        acc += v * v;
    }
    return acc;
}

float max_abs_f32(const float* x, std::size_t n) {
    float peak = 0.0f;
    for (std::size_t i = 0; i < n; ++i) {
        const float v = std::fabs(x[i]);
        if (v > peak) peak = v;
    }
    return peak;
}

double dot_f64(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

void complex_mag_f64(const std::complex<double>* z, double* dst, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double re = z[i].real();
        const double im = z[i].imag();
        dst[i] = std::sqrt(re * re + im * im);
    }
}

} // namespace

const Ops& scalar_ops() {
    static const Ops ops = {
        axpy_f64,
        accumulate_f32_f64,
        window_mul_f32_f64,
        scale_f32,
        sum_squares_f32,
        max_abs_f32,
        dot_f64,
        complex_mag_f64,
        "scalar",
    };
    return ops;
}

} // namespace audexplain::kernels
