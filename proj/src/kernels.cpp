#include "alignet/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

#include "kernels_detail.hpp"

namespace alignet::kern {

namespace ref {

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double sqdist(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

double sum(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale(double alpha, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

} // namespace ref

namespace {

struct Dispatch {
    Isa isa;
    double (*dot)(const double*, const double*, std::size_t);
    double (*sqdist)(const double*, const double*, std::size_t);
    double (*sum)(const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    void (*scale)(double, double*, std::size_t);
};

constexpr Dispatch kScalar{Isa::scalar, ref::dot, ref::sqdist, ref::sum, ref::axpy, ref::scale};

bool isa_supported(Isa isa) {
    switch (isa) {
    case Isa::scalar:
        return true;
    case Isa::avx2:
#if defined(ALIGNET_HAVE_AVX2_TU)
        return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
        return false;
#endif
    case Isa::neon:
#if defined(ALIGNET_HAVE_NEON_TU)
        return true; // NEON is baseline on aarch64
#else
        return false;
#endif
    }
    return false;
}

Dispatch make_dispatch(Isa isa) {
    switch (isa) {
#if defined(ALIGNET_HAVE_AVX2_TU)
    case Isa::avx2:
        return Dispatch{Isa::avx2, detail::dot_avx2, detail::sqdist_avx2, detail::sum_avx2,
                        detail::axpy_avx2, detail::scale_avx2};
#endif
#if defined(ALIGNET_HAVE_NEON_TU)
    case Isa::neon:
        return Dispatch{Isa::neon, detail::dot_neon, detail::sqdist_neon, detail::sum_neon,
                        detail::axpy_neon, detail::scale_neon};
#endif
    default:
        return kScalar;
    }
}

Isa detect() {
    if (const char* env = std::getenv("ALIGNET_KERNELS")) {
        if (std::strcmp(env, "scalar") == 0) return Isa::scalar;
        if (std::strcmp(env, "avx2") == 0 && isa_supported(Isa::avx2)) return Isa::avx2;
        if (std::strcmp(env, "neon") == 0 && isa_supported(Isa::neon)) return Isa::neon;
        return Isa::scalar;
    }
    if (isa_supported(Isa::avx2)) return Isa::avx2;
    if (isa_supported(Isa::neon)) return Isa::neon;
    return Isa::scalar;
}

Dispatch& dispatch() {
    static Dispatch table = make_dispatch(detect());
    return table;
}

} // namespace

Isa active() { return dispatch().isa; }

void force(Isa isa) {
    dispatch() = make_dispatch(isa_supported(isa) ? isa : Isa::scalar);
}

const char* name(Isa isa) {
    switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
    }
    return "unknown";
}

double dot(const double* a, const double* b, std::size_t n) { return dispatch().dot(a, b, n); }
double sqdist(const double* a, const double* b, std::size_t n) { return dispatch().sqdist(a, b, n); }
double sum(const double* x, std::size_t n) { return dispatch().sum(x, n); }
void axpy(double alpha, const double* x, double* y, std::size_t n) { dispatch().axpy(alpha, x, y, n); }
void scale(double alpha, double* x, std::size_t n) { dispatch().scale(alpha, x, n); }

} // namespace alignet::kern
