#pragma once

// Data-parallel inner loops used by the problem adapters.
//
// Every kernel has a scalar reference and optional AVX2 / NEON variants. The
// reductions use a fixed 4-lane striped summation order (term i goes to lane
// i % 4, lanes combined as (l0 + l1) + (l2 + l3)), so all backends produce
// bit-identical results and seeded runs do not depend on the host CPU.

#include <cstddef>
#include <span>
#include <string_view>

namespace hetero::kernels {

enum class Backend { Scalar, Avx2, Neon };

std::string_view to_string(Backend b);

/// Best backend supported by this CPU (HETERO_SIMD=scalar forces the reference).
Backend detect_backend();
Backend active_backend();
/// Switches the dispatch table; returns false if `b` is unavailable on this host.
bool set_backend(Backend b);
bool backend_available(Backend b);

/// Closed tour length over a row-major n x n distance matrix.
double tour_length(std::span<const double> dist, std::span<const int> order);
/// Canonical Rosenbrock sum over z: sum_i 100 (z_i^2 - z_{i+1})^2 + (z_i - 1)^2.
double rosenbrock(std::span<const double> z);
/// out_i = b_i + w_i * (a_i - b_i), i.e. the convex blend w_i a_i + (1 - w_i) b_i
void blend(std::span<const double> a, std::span<const double> b, std::span<const double> w, std::span<double> out);
/// out_i = base_i + f * (a_i - b_i)
void difference_step(std::span<const double> base, std::span<const double> a, std::span<const double> b, double f,
                     std::span<double> out);
/// x_i = min(max(x_i, lo_i), hi_i)
void clamp(std::span<double> x, std::span<const double> lo, std::span<const double> hi);

namespace scalar {
double tour_length(const double* dist, const int* order, std::size_t n);
double rosenbrock(const double* z, std::size_t n);
void blend(const double* a, const double* b, const double* w, double* out, std::size_t n);
void difference_step(const double* base, const double* a, const double* b, double f, double* out, std::size_t n);
void clamp(double* x, const double* lo, const double* hi, std::size_t n);
}  // namespace scalar

}  // namespace hetero::kernels
