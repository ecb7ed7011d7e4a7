#include "hetero/problems.hpp"
#include "hetero/random.hpp"
#include "hetero/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hetero {

namespace perm {

Permutation random(int n, Rng& rng) {
    Permutation p;
    p.order.resize(n);
    std::iota(p.order.begin(), p.order.end(), 0);
    // Fisher-Yates with our own index draws so the sequence does not depend on std::shuffle.
    for (int i = n - 1; i > 0; --i) std::swap(p.order[i], p.order[uniform_int(rng, 0, i)]);
    return p;
}

bool next_lexicographic(std::vector<int>& p) { return std::next_permutation(p.begin(), p.end()); }

Permutation reverse_segment(const Permutation& p, int i, int j) {
    Permutation out = p;
    if (i > j) std::swap(i, j);
    std::reverse(out.order.begin() + i, out.order.begin() + j + 1);
    return out;
}

Permutation two_opt(const Permutation& p, Rng& rng) {
    const int n = static_cast<int>(p.order.size());
    if (n < 2) return p;
    int i = uniform_int(rng, 0, n - 1);
    int j = uniform_int(rng, 0, n - 2);
    if (j >= i) ++j;
    return reverse_segment(p, std::min(i, j), std::max(i, j));
}

Permutation single_point_crossover(const Permutation& a, const Permutation& b, int k) {
    const std::size_t n = a.order.size();
    Permutation child;
    child.order.reserve(n);
    std::vector<char> used(n, 0);
    for (int i = 0; i < k; ++i) {
        child.order.push_back(b.order[i]);
        used[b.order[i]] = 1;
    }
    for (int v : a.order)
        if (!used[v]) child.order.push_back(v);
    return child;
}

Permutation single_point_crossover(const Permutation& a, const Permutation& b, Rng& rng) {
    const int n = static_cast<int>(a.order.size());
    int k = n > 1 ? uniform_int(rng, 1, n - 1) : 0;
    return single_point_crossover(a, b, k);
}

Permutation ternary(const Permutation& a, const Permutation& b, const Permutation& c) {
    const int n = static_cast<int>(a.order.size());
    Permutation out;
    out.order.resize(n);
    if (n == 0) return out;
    // a - b + c + (n-1) lies in [0, 3n-3]: a counting sort is stable and linear.
    std::vector<int> v(n), next(3 * n - 1, 0);
    for (int i = 0; i < n; ++i) {
        v[i] = a.order[i] - b.order[i] + c.order[i] + n - 1;
        if (v[i] + 1 < 3 * n - 1) ++next[v[i] + 1];
    }
    for (int k = 1; k < 3 * n - 1; ++k) next[k] += next[k - 1];
    for (int i = 0; i < n; ++i) out.order[next[v[i]]++] = i;
    return out;
}

Permutation move_block_to_end(const Permutation& p, int start, int len) {
    Permutation out;
    out.order.reserve(p.order.size());
    out.order.insert(out.order.end(), p.order.begin(), p.order.begin() + start);
    out.order.insert(out.order.end(), p.order.begin() + start + len, p.order.end());
    out.order.insert(out.order.end(), p.order.begin() + start, p.order.begin() + start + len);
    return out;
}

Permutation shift_to_end(const Permutation& p, int pos) { return move_block_to_end(p, pos, 1); }

Permutation order_crossover(const Permutation& a, const Permutation& b, int i, int j) {
    const std::size_t n = a.order.size();
    if (i > j) std::swap(i, j);
    Permutation child;
    child.order.assign(n, -1);
    // Values are not assumed to be 0..n-1 here, so membership uses the slice itself.
    std::vector<int> slice(a.order.begin() + i, a.order.begin() + j + 1);
    std::vector<int> sorted_slice = slice;
    std::sort(sorted_slice.begin(), sorted_slice.end());
    for (int k = i; k <= j; ++k) child.order[k] = a.order[k];
    std::size_t pos = 0;
    for (int v : b.order) {
        if (std::binary_search(sorted_slice.begin(), sorted_slice.end(), v)) continue;
        while (pos < n && child.order[pos] != -1) ++pos;
        child.order[pos++] = v;
    }
    return child;
}

Permutation order_crossover(const Permutation& a, const Permutation& b, Rng& rng) {
    const int n = static_cast<int>(a.order.size());
    int i = uniform_int(rng, 0, n - 1);
    int j = uniform_int(rng, 0, n - 1);
    return order_crossover(a, b, std::min(i, j), std::max(i, j));
}

}  // namespace perm

namespace {

const Permutation& as_perm(const Genome& g) {
    if (const auto* p = std::get_if<Permutation>(&g)) return *p;
    throw ContractViolation("expected a permutation genome");
}

std::optional<Genome> next_permutation_cursor(Cursor& cursor, int n) {
    if (cursor.exhausted) return std::nullopt;
    if (!cursor.position) {
        Permutation id;
        id.order.resize(n);
        std::iota(id.order.begin(), id.order.end(), 0);
        cursor.position = id;
    } else {
        auto& order = std::get<Permutation>(*cursor.position).order;
        if (!perm::next_lexicographic(order)) {
            cursor.exhausted = true;
            return std::nullopt;
        }
    }
    ++cursor.produced;
    return *cursor.position;
}

}  // namespace

// ---------------------------------------------------------------------------
// TSP
// ---------------------------------------------------------------------------

TspInstance TspInstance::from_coordinates(const std::vector<std::pair<double, double>>& coords, DistanceRule rule) {
    TspInstance inst;
    inst.n = static_cast<int>(coords.size());
    inst.dist.assign(coords.size() * coords.size(), 0.0);
    for (int i = 0; i < inst.n; ++i) {
        for (int j = 0; j < inst.n; ++j) {
            double dx = coords[i].first - coords[j].first;
            double dy = coords[i].second - coords[j].second;
            double d = std::sqrt(dx * dx + dy * dy);
            if (rule == DistanceRule::TsplibEuc2d) d = static_cast<double>(static_cast<long long>(d + 0.5));
            inst.dist[static_cast<std::size_t>(i) * inst.n + j] = d;
        }
    }
    inst.validate();
    return inst;
}

TspInstance TspInstance::from_matrix(int n, std::vector<double> dist) {
    TspInstance inst{n, std::move(dist)};
    inst.validate();
    return inst;
}

void TspInstance::validate() const {
    if (n < 3) throw ContractViolation("TSP instance needs at least 3 cities");
    if (dist.size() != static_cast<std::size_t>(n) * n) throw ContractViolation("distance matrix is not n x n");
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double d = at(i, j);
            if (!(d >= 0.0) || !std::isfinite(d)) throw ContractViolation("negative or non-finite distance");
            if (d != at(j, i)) throw ContractViolation("distance matrix is not symmetric");
        }
}

TspProblem::TspProblem(TspInstance inst, std::string label) : inst_(std::move(inst)), label_(std::move(label)) {
    inst_.validate();
    spec_.encoding = Encoding::Permutation;
    spec_.size = inst_.n;
}

double TspProblem::tour_length(const Permutation& p) const { return kernels::tour_length(inst_.dist, p.order); }

std::optional<double> TspProblem::evaluate(const Genome& g) const {
    require_valid(g, spec_);
    return tour_length(std::get<Permutation>(g));
}

Genome TspProblem::random_solution(Rng& rng) const { return perm::random(inst_.n, rng); }

std::optional<Genome> TspProblem::next_solution(Cursor& cursor, Rng&) const {
    return next_permutation_cursor(cursor, inst_.n);
}

Genome TspProblem::unary(const Genome& g, Rng& rng, OperatorState&) const { return perm::two_opt(as_perm(g), rng); }

Genome TspProblem::binary(const Genome& a, const Genome& b, Rng& rng) const {
    return perm::single_point_crossover(as_perm(a), as_perm(b), rng);
}

Genome TspProblem::ternary(const Genome& a, const Genome& b, const Genome& c, double, Rng&) const {
    return perm::ternary(as_perm(a), as_perm(b), as_perm(c));
}

// ---------------------------------------------------------------------------
// BPP
// ---------------------------------------------------------------------------

void BppInstance::validate() const {
    if (!(capacity > 0.0)) throw ContractViolation("bin capacity must be positive");
    if (volumes.empty()) throw ContractViolation("BPP instance has no items");
    for (double v : volumes) {
        if (!(v > 0.0) || !std::isfinite(v)) throw ContractViolation("volume must be positive");
        if (v > capacity) throw ContractViolation("volume exceeds capacity");
    }
}

int first_fit_bins(const BppInstance& inst, const std::vector<int>& order) {
    std::vector<double> residual;
    residual.reserve(order.size());
    for (int item : order) {
        const double v = inst.volumes[item];
        auto it = std::find_if(residual.begin(), residual.end(), [v](double r) { return r >= v; });
        if (it == residual.end())
            residual.push_back(inst.capacity - v);
        else
            *it -= v;
    }
    return static_cast<int>(residual.size());
}

int max_displacement_block(int n) { return std::max(1, static_cast<int>(std::ceil(0.005 * n))); }

BppProblem::BppProblem(BppInstance inst, std::string label) : inst_(std::move(inst)), label_(std::move(label)) {
    inst_.validate();
    spec_.encoding = Encoding::Permutation;
    spec_.size = static_cast<int>(inst_.volumes.size());
}

std::optional<double> BppProblem::evaluate(const Genome& g) const {
    require_valid(g, spec_);
    return static_cast<double>(first_fit_bins(inst_, std::get<Permutation>(g).order));
}

Genome BppProblem::random_solution(Rng& rng) const { return perm::random(spec_.size, rng); }

std::optional<Genome> BppProblem::next_solution(Cursor& cursor, Rng&) const {
    return next_permutation_cursor(cursor, spec_.size);
}

Genome BppProblem::unary(const Genome& g, Rng& rng, OperatorState& state) const {
    const auto& p = as_perm(g);
    const int n = static_cast<int>(p.order.size());
    const int max_block = max_displacement_block(n);
    if (state.block < 1 || state.block > max_block) state.block = max_block;
    const int len = std::min(uniform_int(rng, 1, state.block), n);
    const int start = uniform_int(rng, 0, n - len);
    return perm::move_block_to_end(p, start, len);
}

Genome BppProblem::mutation(const Genome& g, Rng& rng, OperatorState&) const {
    const auto& p = as_perm(g);
    return perm::shift_to_end(p, uniform_int(rng, 0, static_cast<int>(p.order.size()) - 1));
}

Genome BppProblem::binary(const Genome& a, const Genome& b, Rng& rng) const {
    return perm::order_crossover(as_perm(a), as_perm(b), rng);
}

Genome BppProblem::ternary(const Genome& a, const Genome& b, const Genome& c, double, Rng&) const {
    return perm::ternary(as_perm(a), as_perm(b), as_perm(c));
}

void BppProblem::note_outcome(OperatorState& state, bool improved) const {
    const int max_block = max_displacement_block(spec_.size);
    if (improved) {
        state.block = max_block;
        state.stall = 0;
        return;
    }
    if (++state.stall >= 10) {
        state.block = std::max(1, (state.block < 1 ? max_block : state.block) / 2);
        state.stall = 0;
    }
}

}  // namespace hetero
