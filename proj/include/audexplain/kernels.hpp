#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>

// Data-parallel primitives behind the DSP and fitting code. Every kernel has
// a scalar reference implementation and, on x86-64 with AVX2+FMA, a vector
// variant selected once at startup. The two are equivalence-tested; scalar is
// the semantic definition.
namespace audexplain::kernels {

struct Ops {
    // y[i] += a * x[i]
    void (*axpy_f64)(double a, const double* x, double* y, std::size_t n);
    // acc[i] += x[i]  (float source, double accumulator; remix/mixdown)
    void (*accumulate_f32_f64)(const float* x, double* acc, std::size_t n);
    // dst[i] = x[i] * w[i]  (float signal, double window; STFT framing)
    void (*window_mul_f32_f64)(const float* x, const double* w, double* dst, std::size_t n);
    // dst[i] = x[i] * a
    void (*scale_f32)(const float* x, float a, float* dst, std::size_t n);
    // sum of x[i]^2 accumulated in double
    double (*sum_squares_f32)(const float* x, std::size_t n);
    // max |x[i]|, 0 for empty input
    float (*max_abs_f32)(const float* x, std::size_t n);
    // dot product, double accumulation
    double (*dot_f64)(const double* x, const double* y, std::size_t n);
    // dst[i] = |z[i]| for interleaved complex doubles
    void (*complex_mag_f64)(const std::complex<double>* z, double* dst, std::size_t n);

    const char* name;
};

const Ops& scalar_ops();

#if defined(AUDEXPLAIN_HAVE_AVX2)
const Ops& avx2_ops();
bool avx2_available();
#endif

/// Kernel set picked for this process: AVX2 when the CPU supports it,
/// scalar otherwise. Overridable for tests via force_scalar().
const Ops& active();
void force_scalar(bool on);

} // namespace audexplain::kernels
