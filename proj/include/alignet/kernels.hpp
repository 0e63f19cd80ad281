#pragma once

#include <cstddef>

// Data-parallel inner loops used by every numeric module. A scalar
// reference implementation is always available; AVX2 (x86-64) and NEON
// (aarch64) variants are selected once at startup based on what the CPU
// supports. The environment variable ALIGNET_KERNELS=scalar|avx2|neon
// overrides detection (unsupported requests fall back to scalar).
namespace alignet::kern {

enum class Isa { scalar, avx2, neon };

Isa active();
void force(Isa isa);
const char* name(Isa isa);

double dot(const double* a, const double* b, std::size_t n);
double sqdist(const double* a, const double* b, std::size_t n);
double sum(const double* x, std::size_t n);
// y[i] += alpha * x[i]
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double alpha, double* x, std::size_t n);

// Scalar reference kernels. Single accumulator, sequential order; the
// oracle the SIMD variants are equivalence-tested against.
namespace ref {
double dot(const double* a, const double* b, std::size_t n);
double sqdist(const double* a, const double* b, std::size_t n);
double sum(const double* x, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double alpha, double* x, std::size_t n);
} // namespace ref

} // namespace alignet::kern
