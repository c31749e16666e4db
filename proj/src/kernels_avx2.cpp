// AVX2+FMA kernel variants. This translation unit is the only one compiled
// with -mavx2 -mfma; callers reach it through the dispatch table, never
// directly, so the binary stays runnable on plain SSE2 machines.
#if defined(AUDEXPLAIN_HAVE_AVX2)

#include "audexplain/kernels.hpp"

#include <cmath>
#include <immintrin.h>

namespace audexplain::kernels {

namespace {

void axpy_f64(double a, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vx = _mm256_loadu_pd(x + i);
        const __m256d vy = _mm256_loadu_pd(y + i);
        _mm256_storeu_pd(y + i, _mm256_add_pd(vy, _mm256_mul_pd(va, vx)));
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void accumulate_f32_f64(const float* x, double* acc, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vx = _mm256_cvtps_pd(_mm_loadu_ps(x + i));
        const __m256d va = _mm256_loadu_pd(acc + i);
        _mm256_storeu_pd(acc + i, _mm256_add_pd(va, vx));
    }
    for (; i < n; ++i) acc[i] += static_cast<double>(x[i]);
}

void window_mul_f32_f64(const float* x, const double* w, double* dst, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vx = _mm256_cvtps_pd(_mm_loadu_ps(x + i));
        const __m256d vw = _mm256_loadu_pd(w + i);
        _mm256_storeu_pd(dst + i, _mm256_mul_pd(vx, vw));
    }
    for (; i < n; ++i) dst[i] = static_cast<double>(x[i]) * w[i];
}

void scale_f32(const float* x, float a, float* dst, std::size_t n) {
    const __m256 va = _mm256_set1_ps(a);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        _mm256_storeu_ps(dst + i, _mm256_mul_ps(_mm256_loadu_ps(x + i), va));
    }
    for (; i < n; ++i) dst[i] = x[i] * a;
}

double sum_squares_f32(const float* x, std::size_t n) {
    __m256d vacc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vx = _mm256_cvtps_pd(_mm_loadu_ps(x + i));
        vacc = _mm256_add_pd(vacc, _mm256_mul_pd(vx, vx));
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, vacc);
    double acc = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    for (; i < n; ++i) {
        const double v = static_cast<double>(x[i]);
        acc += v * v;
    }
    return acc;
}

float max_abs_f32(const float* x, std::size_t n) {
    const __m256 sign_mask = _mm256_castsi256_ps(_mm256_set1_epi32(0x7fffffff));
    __m256 vmax = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        vmax = _mm256_max_ps(vmax, _mm256_and_ps(_mm256_loadu_ps(x + i), sign_mask));
    }
    alignas(32) float lanes[8];
    _mm256_store_ps(lanes, vmax);
    float peak = 0.0f;
    for (float lane : lanes) peak = lane > peak ? lane : peak;
    for (; i < n; ++i) {
        const float v = std::fabs(x[i]);
        if (v > peak) peak = v;
    }
    return peak;
}

double dot_f64(const double* x, const double* y, std::size_t n) {
    __m256d vacc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        vacc = _mm256_add_pd(vacc, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, vacc);
    double acc = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    for (; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

void complex_mag_f64(const std::complex<double>* z, double* dst, std::size_t n) {
    const double* raw = reinterpret_cast<const double*>(z);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        // [re0 im0 re1 im1] and [re2 im2 re3 im3]
        const __m256d p0 = _mm256_loadu_pd(raw + 2 * i);
        const __m256d p1 = _mm256_loadu_pd(raw + 2 * i + 4);
        const __m256d re = _mm256_unpacklo_pd(p0, p1); // re0 re2 re1 re3
        const __m256d im = _mm256_unpackhi_pd(p0, p1); // im0 im2 im1 im3
        const __m256d mag = _mm256_sqrt_pd(
            _mm256_add_pd(_mm256_mul_pd(re, re), _mm256_mul_pd(im, im)));
        _mm256_storeu_pd(dst + i, _mm256_permute4x64_pd(mag, 0b11011000));
    }
    for (; i < n; ++i) {
        const double re = z[i].real();
        const double im = z[i].imag();
        dst[i] = std::sqrt(re * re + im * im);
    }
}

} // namespace

const Ops& avx2_ops() {
    static const Ops ops = {
        axpy_f64,
        accumulate_f32_f64,
        window_mul_f32_f64,
        scale_f32,
        sum_squares_f32,
        max_abs_f32,
        dot_f64,
        complex_mag_f64,
        "avx2",
    };
    return ops;
}

bool avx2_available() {
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

} // namespace audexplain::kernels

#endif // x86-64
