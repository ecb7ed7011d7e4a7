#include "hetero/kernels.hpp"
#include "hetero/random.hpp"

#include <doctest.h>

#include <bit>
#include <cstring>
#include <numeric>
#include <vector>

using namespace hetero;
namespace k = hetero::kernels;

namespace {

bool same_bits(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

std::vector<double> random_vec(Rng& rng, std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (auto& x : v) x = uniform_real(rng, lo, hi);
    return v;
}

/// Restores the detected backend when a test is done with it.
struct BackendGuard {
    k::Backend saved = k::active_backend();
    ~BackendGuard() { k::set_backend(saved); }
};

}  // namespace

TEST_CASE("scalar tour length matches a plain loop on small cases") {
    // Unit square, row-major matrix.
    const double s2 = std::sqrt(2.0);
    std::vector<double> d = {0, 1, s2, 1, 1, 0, 1, s2, s2, 1, 0, 1, 1, s2, 1, 0};
    std::vector<int> o = {0, 1, 2, 3};
    CHECK(k::scalar::tour_length(d.data(), o.data(), 4) == doctest::Approx(4.0));
    std::vector<int> o2 = {0, 2, 1, 3};
    CHECK(k::scalar::tour_length(d.data(), o2.data(), 4) == doctest::Approx(2 + 2 * s2));
}

TEST_CASE("scalar rosenbrock is zero at all-ones") {
    std::vector<double> z(10, 1.0);
    CHECK(k::scalar::rosenbrock(z.data(), z.size()) == 0.0);
    std::vector<double> zero(3, 0.0);
    CHECK(k::scalar::rosenbrock(zero.data(), 3) == doctest::Approx(2.0));
}

TEST_CASE("every available backend is bit-identical to the scalar reference") {
    BackendGuard guard;
    Rng rng(2024);
    std::vector<k::Backend> backends;
    for (auto b : {k::Backend::Scalar, k::Backend::Avx2, k::Backend::Neon})
        if (k::backend_available(b)) backends.push_back(b);
    MESSAGE("backends available: ", backends.size());
    for (std::size_t n : {1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 15u, 16u, 17u, 31u, 50u, 101u, 1000u}) {
        for (int rep = 0; rep < 20; ++rep) {
            std::vector<double> dist = random_vec(rng, n * n, 0, 1000);
            std::vector<int> order(n);
            std::iota(order.begin(), order.end(), 0);
            std::shuffle(order.begin(), order.end(), rng);
            auto z = random_vec(rng, n, -5, 5);
            auto a = random_vec(rng, n, -5, 5), b = random_vec(rng, n, -5, 5), c = random_vec(rng, n, -5, 5);
            auto w = random_vec(rng, n, 0, 1);
            auto lo = random_vec(rng, n, -3, -1), hi = random_vec(rng, n, 1, 3);

            const double ref_tour = k::scalar::tour_length(dist.data(), order.data(), n);
            const double ref_rosen = k::scalar::rosenbrock(z.data(), n);
            std::vector<double> ref_blend(n), ref_diff(n), ref_clamp = c;
            k::scalar::blend(a.data(), b.data(), w.data(), ref_blend.data(), n);
            k::scalar::difference_step(c.data(), a.data(), b.data(), 0.8, ref_diff.data(), n);
            k::scalar::clamp(ref_clamp.data(), lo.data(), hi.data(), n);

            for (auto be : backends) {
                REQUIRE(k::set_backend(be));
                CAPTURE(k::to_string(be));
                CAPTURE(n);
                CHECK(same_bits(k::tour_length(dist, order), ref_tour));
                CHECK(same_bits(k::rosenbrock(z), ref_rosen));
                std::vector<double> out(n), diff(n), cl = c;
                k::blend(a, b, w, out);
                k::difference_step(c, a, b, 0.8, diff);
                k::clamp(cl, lo, hi);
                CHECK(same_bits(out, ref_blend));
                CHECK(same_bits(diff, ref_diff));
                CHECK(same_bits(cl, ref_clamp));
            }
        }
    }
}

TEST_CASE("blend of a vector with itself is exact on every backend") {
    BackendGuard guard;
    Rng rng(8);
    for (auto be : {k::Backend::Scalar, k::Backend::Avx2, k::Backend::Neon}) {
        if (!k::set_backend(be)) continue;
        for (int rep = 0; rep < 200; ++rep) {
            auto x = random_vec(rng, 13, -5, 5), w = random_vec(rng, 13, 0, 1);
            std::vector<double> out(13);
            k::blend(x, x, w, out);
            CHECK(same_bits(out, x));
        }
    }
}

TEST_CASE("unavailable backends are refused and the scalar path is always there") {
    BackendGuard guard;
    CHECK(k::backend_available(k::Backend::Scalar));
    CHECK(k::set_backend(k::Backend::Scalar));
    CHECK(k::active_backend() == k::Backend::Scalar);
#if !defined(__aarch64__)
    CHECK_FALSE(k::set_backend(k::Backend::Neon));
    CHECK(k::active_backend() == k::Backend::Scalar);
#endif
}

TEST_CASE("kernels reject mismatched spans") {
    std::vector<double> a(3), b(4), out(3);
    CHECK_THROWS(k::blend(a, b, a, out));
    std::vector<double> dist(9);
    std::vector<int> order = {0, 1};
    CHECK_THROWS(k::tour_length(dist, order));
}
