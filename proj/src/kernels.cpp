#include "audexplain/kernels.hpp"

#include <atomic>

namespace audexplain::kernels {

namespace {

std::atomic<bool> g_force_scalar{false};

const Ops& pick_ops() {
#if defined(AUDEXPLAIN_HAVE_AVX2)
    if (avx2_available()) return avx2_ops();
#endif
    return scalar_ops();
}

} // namespace

const Ops& active() {
    static const Ops& detected = pick_ops();
    return g_force_scalar.load(std::memory_order_relaxed) ? scalar_ops() : detected;
}

void force_scalar(bool on) {
    g_force_scalar.store(on, std::memory_order_relaxed);
}

} // namespace audexplain::kernels
