#include "hetero/kernels.hpp"
#include "hetero/problems.hpp"
#include "hetero/random.hpp"

#include <cmath>
#include <numbers>

namespace hetero {

namespace {

// Conditioning exponent i / (D - 1), defined as 0 in one dimension.
inline double ramp(std::size_t i, std::size_t d) { return d > 1 ? static_cast<double>(i) / static_cast<double>(d - 1) : 0.0; }

double boundary_penalty(const std::vector<double>& x) {
    double p = 0.0;
    for (double xi : x) {
        double over = std::abs(xi) - 5.0;
        if (over > 0.0) p += over * over;
    }
    return p;
}

double buche_rastrigin(const std::vector<double>& z) {
    const std::size_t d = z.size();
    double cos_sum = 0.0, sq_sum = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        double s = std::pow(10.0, 0.5 * ramp(i, d));
        if (i % 2 == 0 && z[i] > 0.0) s *= 10.0;
        const double y = s * z[i];
        cos_sum += std::cos(2.0 * std::numbers::pi * y);
        sq_sum += y * y;
    }
    return 10.0 * (static_cast<double>(d) - cos_sum) + sq_sum;
}

double different_powers(const std::vector<double>& z) {
    const std::size_t d = z.size();
    double sum = 0.0;
    for (std::size_t i = 0; i < d; ++i) sum += std::pow(std::abs(z[i]), 2.0 + 4.0 * ramp(i, d));
    return std::sqrt(sum);
}

double schaffers_f7(const std::vector<double>& z) {
    const std::size_t d = z.size();
    if (d < 2) return 0.0;
    std::vector<double> y(d);
    for (std::size_t i = 0; i < d; ++i) y[i] = std::pow(10.0, 0.5 * ramp(i, d)) * z[i];
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < d; ++i) {
        const double s = std::sqrt(y[i] * y[i] + y[i + 1] * y[i + 1]);
        const double root = std::sqrt(s);
        const double sn = std::sin(50.0 * std::pow(s, 0.2));
        sum += root + root * sn * sn;
    }
    const double mean = sum / static_cast<double>(d - 1);
    return mean * mean;
}

const RealVector& as_vec(const Genome& g) {
    if (const auto* v = std::get_if<RealVector>(&g)) return *v;
    throw ContractViolation("expected a real-vector genome");
}

}  // namespace

std::string_view to_string(CoKind k) {
    switch (k) {
        case CoKind::F04BucheRastrigin: return "f04";
        case CoKind::F08Rosenbrock: return "f08";
        case CoKind::F14DifferentPowers: return "f14";
        case CoKind::F17Schaffers: return "f17";
    }
    return "?";
}

CoKind parse_co_kind(std::string_view text) {
    if (text == "f04" || text == "COf04") return CoKind::F04BucheRastrigin;
    if (text == "f08" || text == "COf08") return CoKind::F08Rosenbrock;
    if (text == "f14" || text == "COf14") return CoKind::F14DifferentPowers;
    if (text == "f17" || text == "COf17") return CoKind::F17Schaffers;
    throw ParseError("unknown continuous function '" + std::string(text) + "'");
}

CoFunction CoFunction::shifted(CoKind kind, int dimension, std::uint64_t seed, double f_opt) {
    CoFunction fn;
    fn.kind = kind;
    fn.dimension = dimension;
    fn.f_opt = f_opt;
    Rng rng(seed);
    fn.x_opt.resize(dimension);
    for (auto& x : fn.x_opt) x = uniform_real(rng, -4.0, 4.0);
    fn.normalize();
    return fn;
}

void CoFunction::normalize() {
    if (dimension < 1) throw ContractViolation("dimension must be >= 1");
    // Unshifted Rosenbrock keeps its textbook minimiser at all-ones; the others sit at the origin.
    if (x_opt.empty()) x_opt.assign(dimension, kind == CoKind::F08Rosenbrock ? 1.0 : 0.0);
    if (bounds.empty()) bounds.assign(dimension, Bounds{-5.0, 5.0});
    if (static_cast<int>(x_opt.size()) != dimension || static_cast<int>(bounds.size()) != dimension)
        throw ContractViolation("shift/bounds length does not match dimension");
    for (int i = 0; i < dimension; ++i) {
        if (!(bounds[i].lo < bounds[i].hi)) throw ContractViolation("empty bound interval");
        if (x_opt[i] < bounds[i].lo || x_opt[i] > bounds[i].hi) throw ContractViolation("x_opt outside bounds");
    }
}

double co_evaluate(const CoFunction& fn, const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != fn.dimension) throw ContractViolation("dimension mismatch");
    for (int i = 0; i < fn.dimension; ++i)
        if (!(x[i] >= fn.bounds[i].lo && x[i] <= fn.bounds[i].hi))
            throw ContractViolation("dimension " + std::to_string(i) + " out of bounds");
    std::vector<double> z(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) z[i] = x[i] - fn.x_opt[i];
    switch (fn.kind) {
        case CoKind::F04BucheRastrigin: return buche_rastrigin(z) + 100.0 * boundary_penalty(x) + fn.f_opt;
        case CoKind::F08Rosenbrock:
            for (auto& zi : z) zi += 1.0;
            return kernels::rosenbrock(z) + fn.f_opt;
        case CoKind::F14DifferentPowers: return different_powers(z) + fn.f_opt;
        case CoKind::F17Schaffers: return schaffers_f7(z) + 10.0 * boundary_penalty(x) + fn.f_opt;
    }
    throw ContractViolation("unknown function");
}

CoProblem::CoProblem(CoFunction fn) : fn_(std::move(fn)) {
    fn_.normalize();
    spec_.encoding = Encoding::RealVector;
    spec_.size = fn_.dimension;
    spec_.bounds = fn_.bounds;
    for (const auto& b : fn_.bounds) {
        lo_.push_back(b.lo);
        hi_.push_back(b.hi);
    }
}

std::string CoProblem::name() const { return "CO" + std::string(to_string(fn_.kind)); }

std::optional<double> CoProblem::evaluate(const Genome& g) const { return co_evaluate(fn_, as_vec(g).values); }

Genome CoProblem::random_solution(Rng& rng) const {
    RealVector v;
    v.values.resize(lo_.size());
    for (std::size_t i = 0; i < lo_.size(); ++i) v.values[i] = uniform_real(rng, lo_[i], hi_[i]);
    return v;
}

std::optional<Genome> CoProblem::next_solution(Cursor& cursor, Rng&) const {
    if (cursor.exhausted) return std::nullopt;
    const std::size_t d = lo_.size();
    if (!cursor.position) {
        cursor.position = RealVector{lo_};
    } else {
        auto& x = std::get<RealVector>(*cursor.position).values;
        std::size_t i = 0;
        for (; i < d; ++i) {
            // Grid coordinates are recomputed from their index so the walk does not drift.
            const double k = std::round((x[i] - lo_[i]) / kGridStep) + 1.0;
            const double next = lo_[i] + k * kGridStep;
            if (next <= hi_[i] + 1e-12) {
                x[i] = std::min(next, hi_[i]);
                break;
            }
            x[i] = lo_[i];
        }
        if (i == d) {
            cursor.exhausted = true;
            return std::nullopt;
        }
    }
    ++cursor.produced;
    return *cursor.position;
}

Genome CoProblem::unary(const Genome& g, Rng& rng, OperatorState&) const {
    RealVector out = as_vec(g);
    for (auto& x : out.values) x += uniform_real(rng, -kUnaryRadius, kUnaryRadius);
    kernels::clamp(out.values, lo_, hi_);
    return out;
}

Genome CoProblem::binary(const Genome& a, const Genome& b, Rng& rng) const {
    const auto& x = as_vec(a).values;
    const auto& y = as_vec(b).values;
    std::vector<double> w(x.size());
    for (auto& wi : w) wi = uniform_real(rng, 0.0, 1.0);
    RealVector out;
    out.values.resize(x.size());
    kernels::blend(x, y, w, out.values);
    kernels::clamp(out.values, lo_, hi_);
    return out;
}

Genome CoProblem::ternary(const Genome& a, const Genome& b, const Genome& c, double scale, Rng&) const {
    RealVector out;
    out.values.resize(lo_.size());
    kernels::difference_step(as_vec(c).values, as_vec(a).values, as_vec(b).values, scale, out.values);
    kernels::clamp(out.values, lo_, hi_);
    return out;
}

}  // namespace hetero
