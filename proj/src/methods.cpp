#include "hetero/methods.hpp"
#include "hetero/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hetero {

namespace {

constexpr int kMaxInitAttempts = 100;

}  // namespace

// ---------------------------------------------------------------------------
// Common loop bookkeeping
// ---------------------------------------------------------------------------

Method::Method(MethodKind kind, const MethodConfig& config, const Problem& problem, MethodInstanceId id)
    : problem_(problem), config_(config), kind_(kind), id_(id) {
    config_.validate();
}

std::optional<EvaluatedSolution> Method::make_solution(Genome g, const Lineage* parent) {
    auto objective = problem_.evaluate(g);
    if (!objective) {
        ++failed_evaluations_;
        return std::nullopt;
    }
    ++evaluations_;
    if (!std::isfinite(*objective)) throw ContractViolation("objective is not finite");
    EvaluatedSolution s;
    s.genome = std::move(g);
    s.objective = *objective;
    if (parent) s.lineage = *parent;
    s.lineage.append(id_);
    s.origin = id_;
    s.sequence_no = ++sequence_;
    offer_best(s);
    return s;
}

EvaluatedSolution Method::make_random(Rng& rng) {
    for (int attempt = 0; attempt < kMaxInitAttempts; ++attempt)
        if (auto s = make_solution(problem_.random_solution(rng), nullptr)) return std::move(*s);
    throw std::runtime_error("evaluator failed on every initial solution");
}

bool Method::offer_best(const EvaluatedSolution& s) {
    if (best_ && !(s.objective < best_->objective)) return false;
    best_ = s;
    return true;
}

IncorporateResult Method::receive(const Migrant& m, bool count_help) {
    if (encoding_of(m.solution.genome) != problem_.genome_spec().encoding)
        throw ContractViolation("migrant encoding does not match this problem");
    ++received_;
    IncorporateResult r;
    const double before = best_ ? best_->objective : std::numeric_limits<double>::infinity();
    r.accepted = incorporate(m.solution);
    if (r.accepted) offer_best(m.solution);
    r.improved_best = m.solution.objective < before;
    if (r.improved_best && count_help) {
        ++helper_counts_[m.sender];
        ++helper_by_kind_[m.sender_kind];
    }
    return r;
}

std::optional<EvaluatedSolution> Method::share_best() {
    if (!best_) return std::nullopt;
    const auto digest = genome_digest(best_->genome);
    if (last_share_digest_ == digest && !outbox_log_.empty() && outbox_log_.back().genome == best_->genome)
        return std::nullopt;
    last_share_digest_ = digest;
    outbox_log_.push_back(*best_);
    return *best_;
}

// ---------------------------------------------------------------------------
// Single-incumbent methods
// ---------------------------------------------------------------------------

bool SingleSolutionMethod::incorporate(const EvaluatedSolution& s) {
    if (current_ && !(s.objective < current_->objective)) return false;
    current_ = s;
    return true;
}

RandomSearch::RandomSearch(const MethodConfig& c, const Problem& p, MethodInstanceId id, Rng& rng)
    : SingleSolutionMethod(MethodKind::RS, c, p, id) {
    current_ = make_random(rng);
}

void RandomSearch::step(Rng& rng) {
    auto s = make_solution(problem_.random_solution(rng), nullptr);
    if (s && s->objective < current_->objective) current_ = std::move(*s);
}

HillClimbing::HillClimbing(const MethodConfig& c, const Problem& p, MethodInstanceId id, Rng& rng)
    : SingleSolutionMethod(MethodKind::HC, c, p, id) {
    current_ = make_random(rng);
}

void HillClimbing::step(Rng& rng) {
    std::optional<EvaluatedSolution> best_neighbour;
    for (int k = 0; k < config_.hc_neighbors; ++k) {
        auto s = make_solution(problem_.unary(current_->genome, rng, op_state_), &current_->lineage);
        if (!s) continue;
        problem_.note_outcome(op_state_, s->objective < current_->objective);
        if (!best_neighbour || s->objective < best_neighbour->objective) best_neighbour = std::move(s);
    }
    if (best_neighbour && best_neighbour->objective < current_->objective) current_ = std::move(*best_neighbour);
}

SimulatedAnnealing::SimulatedAnnealing(const MethodConfig& c, const Problem& p, MethodInstanceId id, Rng& rng)
    : SingleSolutionMethod(MethodKind::SA, c, p, id), temperature_(c.sa_temperature) {
    current_ = make_random(rng);
}

void SimulatedAnnealing::step(Rng& rng) {
    auto s = make_solution(problem_.unary(current_->genome, rng, op_state_), &current_->lineage);
    if (s) {
        const double delta = s->objective - current_->objective;
        problem_.note_outcome(op_state_, delta < 0.0);
        // Equal objectives give exp(0) = 1, so sideways moves are always taken.
        if (delta <= 0.0 || uniform_real(rng, 0.0, 1.0) < std::exp(-delta / temperature_)) current_ = std::move(*s);
    }
    temperature_ *= (1.0 - config_.sa_cooling_rate);
}

TabuSearch::TabuSearch(const MethodConfig& c, const Problem& p, MethodInstanceId id, Rng& rng)
    : SingleSolutionMethod(MethodKind::TS, c, p, id) {
    current_ = make_random(rng);
    push_tabu(current_->genome);
}

bool TabuSearch::is_tabu(const Genome& g) const {
    const auto d = genome_digest(g);
    return std::any_of(tabu_.begin(), tabu_.end(), [&](const auto& e) { return e.first == d && e.second == g; });
}

std::vector<Genome> TabuSearch::tabu_list() const {
    std::vector<Genome> out;
    for (const auto& e : tabu_) out.push_back(e.second);
    return out;
}

void TabuSearch::push_tabu(const Genome& g) {
    tabu_.emplace_back(genome_digest(g), g);
    while (static_cast<int>(tabu_.size()) > config_.ts_tabu_size) tabu_.pop_front();
}

void TabuSearch::step(Rng& rng) {
    // best_own before this step's neighbours were scored, for the aspiration test.
    const double aspiration = best().objective;
    std::optional<EvaluatedSolution> chosen;
    for (int k = 0; k < config_.hc_neighbors; ++k) {
        auto s = make_solution(problem_.unary(current_->genome, rng, op_state_), &current_->lineage);
        if (!s) continue;
        problem_.note_outcome(op_state_, s->objective < current_->objective);
        if (is_tabu(s->genome) && !(s->objective < aspiration)) continue;
        if (!chosen || s->objective < chosen->objective) chosen = std::move(s);
    }
    if (!chosen) return;
    current_ = std::move(*chosen);
    push_tabu(current_->genome);
}

BruteForce::BruteForce(const MethodConfig& c, const Problem& p, MethodInstanceId id, Rng& rng)
    : SingleSolutionMethod(MethodKind::BF, c, p, id) {
    for (int attempt = 0; attempt < kMaxInitAttempts && !current_; ++attempt) {
        auto g = problem_.next_solution(cursor_, rng);
        if (!g) break;
        current_ = make_solution(std::move(*g), nullptr);
    }
    if (!current_) current_ = make_random(rng);
    finished_ = cursor_.exhausted;
}

void BruteForce::step(Rng& rng) {
    if (finished_) return;
    auto g = problem_.next_solution(cursor_, rng);
    if (!g) {
        finished_ = true;
        return;
    }
    auto s = make_solution(std::move(*g), nullptr);
    if (s && s->objective < current_->objective) current_ = std::move(*s);
}

// ---------------------------------------------------------------------------
// Population methods
// ---------------------------------------------------------------------------

void PopulationMethod::fill_population(int size, Rng& rng) {
    population_.clear();
    population_.reserve(size);
    for (int i = 0; i < size; ++i) population_.push_back(make_random(rng));
}

bool PopulationMethod::incorporate(const EvaluatedSolution& s) {
    auto worst = std::max_element(population_.begin(), population_.end(),
                                  [](const auto& a, const auto& b) { return a.objective < b.objective; });
    if (worst == population_.end() || !(s.objective < worst->objective)) return false;
    *worst = s;
    return true;
}

Evolution::Evolution(const MethodConfig& c, const Problem& p, MethodInstanceId id, Rng& rng)
    : PopulationMethod(MethodKind::EA, c, p, id) {
    fill_population(config_.ea_pop, rng);
}

const EvaluatedSolution& Evolution::tournament(Rng& rng) const {
    const auto& a = population_[uniform_index(rng, population_.size())];
    const auto& b = population_[uniform_index(rng, population_.size())];
    return b.objective < a.objective ? b : a;
}

void Evolution::step(Rng& rng) {
    std::vector<EvaluatedSolution> next;
    next.reserve(population_.size());
    next.push_back(*std::min_element(population_.begin(), population_.end(),
                                     [](const auto& a, const auto& b) { return a.objective < b.objective; }));
    while (next.size() < population_.size()) {
        const auto& p1 = tournament(rng);
        std::optional<Genome> child;
        if (coin(rng, config_.ea_crossover_rate)) child = problem_.binary(p1.genome, tournament(rng).genome, rng);
        if (coin(rng, config_.ea_mutation_rate)) child = problem_.mutation(child ? *child : p1.genome, rng, op_state_);
        std::optional<EvaluatedSolution> evaluated;
        if (child) evaluated = make_solution(std::move(*child), &p1.lineage);
        next.push_back(evaluated ? std::move(*evaluated) : p1);
    }
    population_ = std::move(next);
}

DifferentialEvolution::DifferentialEvolution(const MethodConfig& c, const Problem& p, MethodInstanceId id, Rng& rng)
    : PopulationMethod(MethodKind::DE, c, p, id) {
    fill_population(config_.de_pop, rng);
}

void DifferentialEvolution::step(Rng& rng) {
    const std::size_t n = population_.size();
    std::vector<EvaluatedSolution> next = population_;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t r[3];
        for (int k = 0; k < 3; ++k) {
            do {
                r[k] = uniform_index(rng, n);
            } while (r[k] == i || (k > 0 && r[k] == r[0]) || (k > 1 && r[k] == r[1]));
        }
        const auto& base = population_[r[2]];
        auto trial = make_solution(
            problem_.ternary(population_[r[0]].genome, population_[r[1]].genome, base.genome, config_.de_f, rng),
            &base.lineage);
        if (trial && trial->objective < population_[i].objective) next[i] = std::move(*trial);
    }
    population_ = std::move(next);
}

std::unique_ptr<Method> make_method(MethodKind kind, const MethodConfig& config, const Problem& problem,
                                    MethodInstanceId id, Rng& rng) {
    switch (kind) {
        case MethodKind::RS: return std::make_unique<RandomSearch>(config, problem, id, rng);
        case MethodKind::HC: return std::make_unique<HillClimbing>(config, problem, id, rng);
        case MethodKind::SA: return std::make_unique<SimulatedAnnealing>(config, problem, id, rng);
        case MethodKind::TS: return std::make_unique<TabuSearch>(config, problem, id, rng);
        case MethodKind::EA: return std::make_unique<Evolution>(config, problem, id, rng);
        case MethodKind::DE: return std::make_unique<DifferentialEvolution>(config, problem, id, rng);
        case MethodKind::BF: return std::make_unique<BruteForce>(config, problem, id, rng);
    }
    throw ContractViolation("unknown method kind");
}

}  // namespace hetero
