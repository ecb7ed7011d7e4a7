#include "hetero/problems.hpp"
#include "hetero/random.hpp"

#include <algorithm>
#include <queue>
#include <tuple>

namespace hetero {

namespace {

const VertexSet& as_set(const Genome& g) {
    if (const auto* s = std::get_if<VertexSet>(&g)) return *s;
    throw ContractViolation("expected a vertex-set genome");
}

}  // namespace

void VcInstance::validate() const {
    if (n < 0) throw ContractViolation("negative vertex count");
    for (const auto& [u, v] : edges) {
        if (u < 0 || v < 0 || u >= n || v >= n) throw ContractViolation("edge endpoint outside vertex range");
        if (u == v) throw ContractViolation("self-loop on vertex " + std::to_string(u));
    }
}

VcProblem::VcProblem(VcInstance inst, std::string label) : inst_(std::move(inst)), label_(std::move(label)) {
    inst_.validate();
    // Parallel edges add nothing to coverage.
    for (auto& e : inst_.edges)
        if (e.first > e.second) std::swap(e.first, e.second);
    std::sort(inst_.edges.begin(), inst_.edges.end());
    inst_.edges.erase(std::unique(inst_.edges.begin(), inst_.edges.end()), inst_.edges.end());
    spec_.encoding = Encoding::VertexSet;
    spec_.size = inst_.n;
    adjacency_.assign(inst_.n, {});
    for (const auto& [u, v] : inst_.edges) {
        adjacency_[u].push_back(v);
        adjacency_[v].push_back(u);
    }
}

std::vector<char> VcProblem::to_mask(const VertexSet& s) const {
    std::vector<char> mask(inst_.n, 0);
    for (int v : s.members) mask[v] = 1;
    return mask;
}

VertexSet VcProblem::to_set(const std::vector<char>& mask) const {
    VertexSet s;
    for (int v = 0; v < inst_.n; ++v)
        if (mask[v]) s.members.push_back(v);
    return s;
}

bool VcProblem::is_cover(const VertexSet& s) const {
    auto mask = to_mask(s);
    return std::all_of(inst_.edges.begin(), inst_.edges.end(),
                       [&](const auto& e) { return mask[e.first] || mask[e.second]; });
}

std::optional<double> VcProblem::evaluate(const Genome& g) const {
    require_valid(g, spec_);
    const auto& s = std::get<VertexSet>(g);
    if (!is_cover(s)) throw ContractViolation("vertex set is not a cover");
    return static_cast<double>(s.members.size());
}

void VcProblem::repair(std::vector<char>& mask, Rng& rng, const std::vector<char>& allowed) const {
    const int n = inst_.n;
    std::vector<int> degree(n, 0);
    std::vector<int> candidates;
    for (const auto& [u, v] : inst_.edges) {
        if (mask[u] || mask[v]) continue;
        for (int w : {u, v}) {
            if (!allowed.empty() && !allowed[w]) continue;
            if (degree[w]++ == 0) candidates.push_back(w);
        }
    }
    if (candidates.empty()) return;

    // Max-heap on (uncovered degree, random tie key); stale entries are skipped on pop.
    std::vector<std::uint64_t> key(n, 0);
    using Entry = std::tuple<int, std::uint64_t, int>;
    std::priority_queue<Entry> heap;
    for (int w : candidates) {
        key[w] = rng();
        heap.emplace(degree[w], key[w], w);
    }
    while (!heap.empty()) {
        auto [deg, k, w] = heap.top();
        heap.pop();
        if (mask[w] || deg != degree[w] || deg == 0) continue;
        mask[w] = 1;
        degree[w] = 0;
        for (int x : adjacency_[w]) {
            if (mask[x] || degree[x] == 0) continue;
            heap.emplace(--degree[x], key[x], x);
        }
    }
}

Genome VcProblem::random_solution(Rng& rng) const {
    std::vector<char> mask(inst_.n, 0);
    for (auto& m : mask) m = coin(rng, 0.5) ? 1 : 0;
    std::vector<std::size_t> order(inst_.edges.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
    for (std::size_t idx : order) {
        const auto& [u, v] = inst_.edges[idx];
        if (!mask[u] && !mask[v]) mask[coin(rng, 0.5) ? u : v] = 1;
    }
    return to_set(mask);
}

std::optional<Genome> VcProblem::next_solution(Cursor& cursor, Rng& rng) const {
    if (cursor.exhausted) return std::nullopt;
    if (!cursor.position) {
        cursor.position = VertexSet{};
    } else {
        // Binary counter over the inclusion mask, vertex 0 as the lowest bit.
        auto mask = to_mask(std::get<VertexSet>(*cursor.position));
        int i = 0;
        while (i < inst_.n && mask[i]) mask[i++] = 0;
        if (i == inst_.n) {
            cursor.exhausted = true;
            return std::nullopt;
        }
        mask[i] = 1;
        cursor.position = to_set(mask);
    }
    ++cursor.produced;
    auto mask = to_mask(std::get<VertexSet>(*cursor.position));
    repair(mask, rng);
    return to_set(mask);
}

VertexSet VcProblem::remove_and_repair(const VertexSet& s, int removals, Rng& rng) const {
    auto mask = to_mask(s);
    std::vector<int> members = s.members;
    const int k = std::min<int>(removals, static_cast<int>(members.size()));
    for (int i = 0; i < k; ++i) {
        std::size_t j = i + uniform_index(rng, members.size() - i);
        std::swap(members[i], members[j]);
        mask[members[i]] = 0;
    }
    repair(mask, rng);
    return to_set(mask);
}

Genome VcProblem::unary(const Genome& g, Rng& rng, OperatorState&) const {
    return remove_and_repair(as_set(g), kUnaryRemovals, rng);
}

Genome VcProblem::mutation(const Genome& g, Rng& rng, OperatorState&) const {
    return remove_and_repair(as_set(g), kMutationRemovals, rng);
}

Genome VcProblem::binary(const Genome& a, const Genome& b, Rng& rng) const {
    auto ma = to_mask(as_set(a));
    auto mb = to_mask(as_set(b));
    std::vector<char> child(inst_.n, 0);
    for (int v = 0; v < inst_.n; ++v) {
        if (ma[v] && mb[v])
            child[v] = 1;
        else if (ma[v] || mb[v])
            child[v] = coin(rng, 0.5) ? 1 : 0;
    }
    repair(child, rng);
    return to_set(child);
}

Genome VcProblem::ternary(const Genome& a, const Genome& b, const Genome& c, double, Rng& rng) const {
    auto ma = to_mask(as_set(a));
    auto mb = to_mask(as_set(b));
    std::vector<char> child(inst_.n, 0);
    for (int v = 0; v < inst_.n; ++v) child[v] = (ma[v] && mb[v]) ? 1 : 0;
    const auto from = to_mask(as_set(c));
    repair(child, rng, from);
    // A third parent that is not a cover cannot finish the job on its own.
    repair(child, rng);
    return to_set(child);
}

}  // namespace hetero
