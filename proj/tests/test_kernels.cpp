#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "audexplain/kernels.hpp"
#include "audexplain/rng.hpp"

#include <cmath>
#include <complex>
#include <string>
#include <vector>

using namespace audexplain;

namespace {

// Lengths straddling the vector widths so tails get exercised.
const std::vector<std::size_t> kLengths = {0, 1, 3, 4, 7, 8, 9, 15, 16, 31, 100, 1023, 4096};

std::vector<double> random_f64(std::size_t n, Rng& rng) {
    std::vector<double> out(n);
    for (auto& v : out) v = rng.uniform(-2.0, 2.0);
    return out;
}

std::vector<float> random_f32(std::size_t n, Rng& rng) {
    std::vector<float> out(n);
    for (auto& v : out) v = static_cast<float>(rng.uniform(-2.0, 2.0));
    return out;
}

} // namespace

#if defined(AUDEXPLAIN_HAVE_AVX2)

TEST_CASE("avx2 kernels match the scalar reference") {
    if (!kernels::avx2_available()) {
        MESSAGE("AVX2 not available on this host; equivalence suite skipped");
        return;
    }
    const auto& scalar = kernels::scalar_ops();
    const auto& vec = kernels::avx2_ops();
    Rng rng(2024);

    for (std::size_t n : kLengths) {
        CAPTURE(n);

        { // axpy_f64
            const auto x = random_f64(n, rng);
            auto y1 = random_f64(n, rng);
            auto y2 = y1;
            scalar.axpy_f64(0.37, x.data(), y1.data(), n);
            vec.axpy_f64(0.37, x.data(), y2.data(), n);
            for (std::size_t i = 0; i < n; ++i) {
                CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-14));
            }
        }
        { // accumulate_f32_f64 (single add per element, bit-exact)
            const auto x = random_f32(n, rng);
            auto a1 = random_f64(n, rng);
            auto a2 = a1;
            scalar.accumulate_f32_f64(x.data(), a1.data(), n);
            vec.accumulate_f32_f64(x.data(), a2.data(), n);
            for (std::size_t i = 0; i < n; ++i) CHECK(a1[i] == a2[i]);
        }
        { // window_mul_f32_f64 (single mul, bit-exact)
            const auto x = random_f32(n, rng);
            const auto w = random_f64(n, rng);
            std::vector<double> d1(n), d2(n);
            scalar.window_mul_f32_f64(x.data(), w.data(), d1.data(), n);
            vec.window_mul_f32_f64(x.data(), w.data(), d2.data(), n);
            for (std::size_t i = 0; i < n; ++i) CHECK(d1[i] == d2[i]);
        }
        { // scale_f32 (single mul, bit-exact)
            const auto x = random_f32(n, rng);
            std::vector<float> d1(n), d2(n);
            scalar.scale_f32(x.data(), 0.55f, d1.data(), n);
            vec.scale_f32(x.data(), 0.55f, d2.data(), n);
            for (std::size_t i = 0; i < n; ++i) CHECK(d1[i] == d2[i]);
        }
        { // sum_squares_f32 (reduction order differs; tolerance)
            const auto x = random_f32(n, rng);
            const double s1 = scalar.sum_squares_f32(x.data(), n);
            const double s2 = vec.sum_squares_f32(x.data(), n);
            CHECK(s1 == doctest::Approx(s2).epsilon(1e-12));
        }
        { // max_abs_f32 (exact)
            const auto x = random_f32(n, rng);
            CHECK(scalar.max_abs_f32(x.data(), n) == vec.max_abs_f32(x.data(), n));
        }
        { // dot_f64 (reduction order differs; tolerance)
            const auto x = random_f64(n, rng);
            const auto y = random_f64(n, rng);
            const double s1 = scalar.dot_f64(x.data(), y.data(), n);
            const double s2 = vec.dot_f64(x.data(), y.data(), n);
            CHECK(s1 == doctest::Approx(s2).epsilon(1e-12));
        }
        { // complex_mag_f64
            std::vector<std::complex<double>> z(n);
            for (auto& c : z) c = {rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
            std::vector<double> m1(n), m2(n);
            scalar.complex_mag_f64(z.data(), m1.data(), n);
            vec.complex_mag_f64(z.data(), m2.data(), n);
            for (std::size_t i = 0; i < n; ++i) {
                CHECK(m1[i] == doctest::Approx(m2[i]).epsilon(1e-14));
            }
        }
    }
}

#endif // AUDEXPLAIN_HAVE_AVX2

TEST_CASE("scalar kernels compute what they claim") {
    const auto& ops = kernels::scalar_ops();

    const std::vector<double> x = {1.0, 2.0, 3.0};
    std::vector<double> y = {10.0, 10.0, 10.0};
    ops.axpy_f64(2.0, x.data(), y.data(), 3);
    CHECK(y == std::vector<double>{12.0, 14.0, 16.0});

    const std::vector<float> f = {3.0f, -4.0f};
    CHECK(ops.sum_squares_f32(f.data(), 2) == doctest::Approx(25.0));
    CHECK(ops.max_abs_f32(f.data(), 2) == 4.0f);

    const std::complex<double> z[2] = {{3.0, 4.0}, {0.0, -2.0}};
    double mag[2];
    ops.complex_mag_f64(z, mag, 2);
    CHECK(mag[0] == doctest::Approx(5.0));
    CHECK(mag[1] == doctest::Approx(2.0));

    CHECK(ops.dot_f64(x.data(), x.data(), 3) == doctest::Approx(14.0));
}

TEST_CASE("active dispatch names a real kernel set and force_scalar works") {
    const std::string name = kernels::active().name;
    CHECK((name == "scalar" || name == "avx2"));

    kernels::force_scalar(true);
    CHECK(std::string(kernels::active().name) == "scalar");
    kernels::force_scalar(false);
    CHECK(std::string(kernels::active().name) == name);
}
