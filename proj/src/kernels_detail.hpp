#pragma once

#include <cstddef>

// Internal: per-ISA kernel entry points, defined in their own translation
// units so each can be compiled with the matching target flags.
namespace alignet::kern::detail {

#if defined(ALIGNET_HAVE_AVX2_TU)
double dot_avx2(const double* a, const double* b, std::size_t n);
double sqdist_avx2(const double* a, const double* b, std::size_t n);
double sum_avx2(const double* x, std::size_t n);
void axpy_avx2(double alpha, const double* x, double* y, std::size_t n);
void scale_avx2(double alpha, double* x, std::size_t n);
#endif

#if defined(ALIGNET_HAVE_NEON_TU)
double dot_neon(const double* a, const double* b, std::size_t n);
double sqdist_neon(const double* a, const double* b, std::size_t n);
double sum_neon(const double* x, std::size_t n);
void axpy_neon(double alpha, const double* x, double* y, std::size_t n);
void scale_neon(double alpha, double* x, std::size_t n);
#endif

} // namespace alignet::kern::detail
