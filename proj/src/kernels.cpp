#include "hetero/kernels.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

#if defined(__x86_64__) || defined(__i386__)
#define HETERO_X86 1
#include <immintrin.h>
#else
#define HETERO_X86 0
#endif

#if defined(__aarch64__) && defined(__ARM_NEON)
#define HETERO_NEON 1
#include <arm_neon.h>
#else
#define HETERO_NEON 0
#endif

namespace hetero::kernels {

namespace {

inline double combine(const std::array<double, 4>& lane) { return (lane[0] + lane[1]) + (lane[2] + lane[3]); }

inline double rosen_term(double zi, double zn) {
    double a = zi * zi - zn;
    double b = zi - 1.0;
    return 100.0 * (a * a) + b * b;
}

}  // namespace

// ---------------------------------------------------------------------------
// Scalar reference
// ---------------------------------------------------------------------------

namespace scalar {

double tour_length(const double* dist, const int* order, std::size_t n) {
    std::array<double, 4> lane{};
    for (std::size_t e = 0; e + 1 < n; ++e)
        lane[e % 4] += dist[static_cast<std::size_t>(order[e]) * n + static_cast<std::size_t>(order[e + 1])];
    if (n > 0) lane[(n - 1) % 4] += dist[static_cast<std::size_t>(order[n - 1]) * n + static_cast<std::size_t>(order[0])];
    return combine(lane);
}

double rosenbrock(const double* z, std::size_t n) {
    std::array<double, 4> lane{};
    for (std::size_t i = 0; i + 1 < n; ++i) lane[i % 4] += rosen_term(z[i], z[i + 1]);
    return combine(lane);
}

void blend(const double* a, const double* b, const double* w, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = b[i] + w[i] * (a[i] - b[i]);
}

void difference_step(const double* base, const double* a, const double* b, double f, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = base[i] + f * (a[i] - b[i]);
}

void clamp(double* x, const double* lo, const double* hi, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] = std::min(std::max(x[i], lo[i]), hi[i]);
}

}  // namespace scalar

// ---------------------------------------------------------------------------
// AVX2
// ---------------------------------------------------------------------------

#if HETERO_X86
namespace avx2 {

__attribute__((target("avx2"))) double tour_length(const double* dist, const int* order, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    const __m128i stride = _mm_set1_epi32(static_cast<int>(n));
    std::size_t e = 0;
    // Edge e joins order[e] -> order[e + 1]; the vector body needs order[e + 4].
    for (; e + 4 < n; e += 4) {
        __m128i from = _mm_loadu_si128(reinterpret_cast<const __m128i*>(order + e));
        __m128i to = _mm_loadu_si128(reinterpret_cast<const __m128i*>(order + e + 1));
        __m128i idx = _mm_add_epi32(_mm_mullo_epi32(from, stride), to);
        acc = _mm256_add_pd(acc, _mm256_i32gather_pd(dist, idx, 8));
    }
    alignas(32) std::array<double, 4> lane;
    _mm256_store_pd(lane.data(), acc);
    for (; e + 1 < n; ++e)
        lane[e % 4] += dist[static_cast<std::size_t>(order[e]) * n + static_cast<std::size_t>(order[e + 1])];
    if (n > 0) lane[(n - 1) % 4] += dist[static_cast<std::size_t>(order[n - 1]) * n + static_cast<std::size_t>(order[0])];
    return combine(lane);
}

__attribute__((target("avx2"))) double rosenbrock(const double* z, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    const __m256d hundred = _mm256_set1_pd(100.0);
    const __m256d one = _mm256_set1_pd(1.0);
    std::size_t i = 0;
    for (; i + 4 < n; i += 4) {
        __m256d zi = _mm256_loadu_pd(z + i);
        __m256d zn = _mm256_loadu_pd(z + i + 1);
        __m256d a = _mm256_sub_pd(_mm256_mul_pd(zi, zi), zn);
        __m256d b = _mm256_sub_pd(zi, one);
        __m256d t = _mm256_add_pd(_mm256_mul_pd(hundred, _mm256_mul_pd(a, a)), _mm256_mul_pd(b, b));
        acc = _mm256_add_pd(acc, t);
    }
    alignas(32) std::array<double, 4> lane;
    _mm256_store_pd(lane.data(), acc);
    for (; i + 1 < n; ++i) lane[i % 4] += rosen_term(z[i], z[i + 1]);
    return combine(lane);
}

__attribute__((target("avx2"))) void blend(const double* a, const double* b, const double* w, double* out,
                                           std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d bv = _mm256_loadu_pd(b + i);
        __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), bv);
        _mm256_storeu_pd(out + i, _mm256_add_pd(bv, _mm256_mul_pd(_mm256_loadu_pd(w + i), d)));
    }
    scalar::blend(a + i, b + i, w + i, out + i, n - i);
}

__attribute__((target("avx2"))) void difference_step(const double* base, const double* a, const double* b, double f,
                                                     double* out, std::size_t n) {
    const __m256d fv = _mm256_set1_pd(f);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(base + i), _mm256_mul_pd(fv, d)));
    }
    scalar::difference_step(base + i, a + i, b + i, f, out + i, n - i);
}

__attribute__((target("avx2"))) void clamp(double* x, const double* lo, const double* hi, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        // max/min return the second operand when the first is NaN; operand order matches std::max/std::min.
        __m256d v = _mm256_max_pd(_mm256_loadu_pd(lo + i), _mm256_loadu_pd(x + i));
        v = _mm256_min_pd(_mm256_loadu_pd(hi + i), v);
        _mm256_storeu_pd(x + i, v);
    }
    scalar::clamp(x + i, lo + i, hi + i, n - i);
}

}  // namespace avx2
#endif

// ---------------------------------------------------------------------------
// NEON (aarch64): two float64x2 accumulators hold lanes {0,1} and {2,3}.
// ---------------------------------------------------------------------------

#if HETERO_NEON
namespace neon {

double tour_length(const double* dist, const int* order, std::size_t n) {
    float64x2_t lo = vdupq_n_f64(0.0);
    float64x2_t hi = vdupq_n_f64(0.0);
    std::size_t e = 0;
    for (; e + 4 < n; e += 4) {
        double d[4];
        for (int k = 0; k < 4; ++k)
            d[k] = dist[static_cast<std::size_t>(order[e + k]) * n + static_cast<std::size_t>(order[e + k + 1])];
        lo = vaddq_f64(lo, vld1q_f64(d));
        hi = vaddq_f64(hi, vld1q_f64(d + 2));
    }
    std::array<double, 4> lane;
    vst1q_f64(lane.data(), lo);
    vst1q_f64(lane.data() + 2, hi);
    for (; e + 1 < n; ++e)
        lane[e % 4] += dist[static_cast<std::size_t>(order[e]) * n + static_cast<std::size_t>(order[e + 1])];
    if (n > 0) lane[(n - 1) % 4] += dist[static_cast<std::size_t>(order[n - 1]) * n + static_cast<std::size_t>(order[0])];
    return combine(lane);
}

double rosenbrock(const double* z, std::size_t n) {
    float64x2_t acc[2] = {vdupq_n_f64(0.0), vdupq_n_f64(0.0)};
    const float64x2_t hundred = vdupq_n_f64(100.0);
    const float64x2_t one = vdupq_n_f64(1.0);
    std::size_t i = 0;
    for (; i + 4 < n; i += 4) {
        for (int h = 0; h < 2; ++h) {
            float64x2_t zi = vld1q_f64(z + i + 2 * h);
            float64x2_t zn = vld1q_f64(z + i + 2 * h + 1);
            float64x2_t a = vsubq_f64(vmulq_f64(zi, zi), zn);
            float64x2_t b = vsubq_f64(zi, one);
            acc[h] = vaddq_f64(acc[h], vaddq_f64(vmulq_f64(hundred, vmulq_f64(a, a)), vmulq_f64(b, b)));
        }
    }
    std::array<double, 4> lane;
    vst1q_f64(lane.data(), acc[0]);
    vst1q_f64(lane.data() + 2, acc[1]);
    for (; i + 1 < n; ++i) lane[i % 4] += rosen_term(z[i], z[i + 1]);
    return combine(lane);
}

void blend(const double* a, const double* b, const double* w, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t bv = vld1q_f64(b + i);
        float64x2_t d = vsubq_f64(vld1q_f64(a + i), bv);
        vst1q_f64(out + i, vaddq_f64(bv, vmulq_f64(vld1q_f64(w + i), d)));
    }
    scalar::blend(a + i, b + i, w + i, out + i, n - i);
}

void difference_step(const double* base, const double* a, const double* b, double f, double* out, std::size_t n) {
    const float64x2_t fv = vdupq_n_f64(f);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t d = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
        vst1q_f64(out + i, vaddq_f64(vld1q_f64(base + i), vmulq_f64(fv, d)));
    }
    scalar::difference_step(base + i, a + i, b + i, f, out + i, n - i);
}

void clamp(double* x, const double* lo, const double* hi, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(x + i, vminq_f64(vmaxq_f64(vld1q_f64(x + i), vld1q_f64(lo + i)), vld1q_f64(hi + i)));
    scalar::clamp(x + i, lo + i, hi + i, n - i);
}

}  // namespace neon
#endif

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

namespace {

struct Table {
    Backend backend;
    double (*tour_length)(const double*, const int*, std::size_t);
    double (*rosenbrock)(const double*, std::size_t);
    void (*blend)(const double*, const double*, const double*, double*, std::size_t);
    void (*difference_step)(const double*, const double*, const double*, double, double*, std::size_t);
    void (*clamp)(double*, const double*, const double*, std::size_t);
};

constexpr Table kScalar{Backend::Scalar, scalar::tour_length, scalar::rosenbrock, scalar::blend,
                        scalar::difference_step, scalar::clamp};
#if HETERO_X86
constexpr Table kAvx2{Backend::Avx2, avx2::tour_length, avx2::rosenbrock, avx2::blend, avx2::difference_step,
                      avx2::clamp};
#endif
#if HETERO_NEON
constexpr Table kNeon{Backend::Neon, neon::tour_length, neon::rosenbrock, neon::blend, neon::difference_step,
                      neon::clamp};
#endif

const Table* table_for(Backend b) {
    switch (b) {
        case Backend::Scalar: return &kScalar;
        case Backend::Avx2:
#if HETERO_X86
            return __builtin_cpu_supports("avx2") ? &kAvx2 : nullptr;
#else
            return nullptr;
#endif
        case Backend::Neon:
#if HETERO_NEON
            return &kNeon;
#else
            return nullptr;
#endif
    }
    return nullptr;
}

std::atomic<const Table*>& current() {
    static std::atomic<const Table*> t{table_for(detect_backend())};
    return t;
}

inline const Table& active() { return *current().load(std::memory_order_relaxed); }

void check_same(std::size_t a, std::size_t b) {
    if (a != b) throw std::invalid_argument("kernel operand lengths differ");
}

}  // namespace

std::string_view to_string(Backend b) {
    switch (b) {
        case Backend::Scalar: return "scalar";
        case Backend::Avx2: return "avx2";
        case Backend::Neon: return "neon";
    }
    return "?";
}

bool backend_available(Backend b) { return table_for(b) != nullptr; }

Backend detect_backend() {
    if (const char* env = std::getenv("HETERO_SIMD"); env && std::strcmp(env, "scalar") == 0) return Backend::Scalar;
    if (backend_available(Backend::Avx2)) return Backend::Avx2;
    if (backend_available(Backend::Neon)) return Backend::Neon;
    return Backend::Scalar;
}

Backend active_backend() { return active().backend; }

bool set_backend(Backend b) {
    const Table* t = table_for(b);
    if (!t) return false;
    current().store(t, std::memory_order_relaxed);
    return true;
}

double tour_length(std::span<const double> dist, std::span<const int> order) {
    if (dist.size() != order.size() * order.size()) throw std::invalid_argument("distance matrix is not n x n");
    return active().tour_length(dist.data(), order.data(), order.size());
}

double rosenbrock(std::span<const double> z) { return active().rosenbrock(z.data(), z.size()); }

void blend(std::span<const double> a, std::span<const double> b, std::span<const double> w, std::span<double> out) {
    check_same(a.size(), b.size());
    check_same(a.size(), w.size());
    check_same(a.size(), out.size());
    active().blend(a.data(), b.data(), w.data(), out.data(), a.size());
}

void difference_step(std::span<const double> base, std::span<const double> a, std::span<const double> b, double f,
                     std::span<double> out) {
    check_same(base.size(), a.size());
    check_same(base.size(), b.size());
    check_same(base.size(), out.size());
    active().difference_step(base.data(), a.data(), b.data(), f, out.data(), base.size());
}

void clamp(std::span<double> x, std::span<const double> lo, std::span<const double> hi) {
    check_same(x.size(), lo.size());
    check_same(x.size(), hi.size());
    active().clamp(x.data(), lo.data(), hi.data(), x.size());
}

}  // namespace hetero::kernels
