#include "hmptcp/nn/kernels.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace hmptcp::nn {

#if defined(HMPTCP_HAVE_AVX2)
namespace avx2 {
const KernelTable& table();
}
#endif

const KernelTable* avx2_kernels() {
#if defined(HMPTCP_HAVE_AVX2)
    static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return supported ? &avx2::table() : nullptr;
#else
    return nullptr;
#endif
}

namespace {

const KernelTable* pick(std::string_view name) {
    if (name == "scalar") return &scalar_kernels();
    if (name == "avx2") return avx2_kernels();
    if (name == "auto" || name.empty()) {
        const KernelTable* best = avx2_kernels();
        return best ? best : &scalar_kernels();
    }
    return nullptr;
}

const KernelTable*& active() {
    static const KernelTable* current = [] {
        const char* env = std::getenv("HMPTCP_SIMD");
        const KernelTable* t = pick(env ? env : "auto");
        return t ? t : pick("auto");
    }();
    return current;
}

}  // namespace

const KernelTable& kernels() { return *active(); }

void select_kernels(std::string_view name) {
    const KernelTable* t = pick(name);
    if (!t) throw std::invalid_argument("kernel variant '" + std::string(name) + "' is not available");
    active() = t;
}

}  // namespace hmptcp::nn
