#pragma once

#include "hetero/core.hpp"

#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace hetero {

/// Per-method-instance adaptive operator state (owned by the method, never shared).
struct OperatorState {
    int block = 0;   // BPP displacement block size; 0 = not initialised
    int stall = 0;   // consecutive non-improving applications
};

/// Position of a systematic (brute force) enumeration.
struct Cursor {
    std::optional<Genome> position;   // raw enumeration state; empty before the first call
    bool exhausted = false;
    std::uint64_t produced = 0;
};

/// A problem family plus one instance: objective and the five shared operators.
/// Implementations are immutable after construction and safe to share across islands.
class Problem {
public:
    virtual ~Problem() = default;

    virtual std::string name() const = 0;
    virtual const GenomeSpec& genome_spec() const = 0;
    /// True when evaluate() may return different values for the same genome.
    virtual bool stochastic() const { return false; }

    /// Objective (minimised). std::nullopt marks a failed evaluation; contract breaches throw.
    virtual std::optional<double> evaluate(const Genome& g) const = 0;

    virtual Genome random_solution(Rng& rng) const = 0;
    /// Next solution of the systematic enumeration, or std::nullopt once exhausted.
    virtual std::optional<Genome> next_solution(Cursor& cursor, Rng& rng) const = 0;
    /// Neighbourhood move used by HC, SA and TS.
    virtual Genome unary(const Genome& g, Rng& rng, OperatorState& state) const = 0;
    /// EA mutation; the same move as unary() unless the family defines its own.
    virtual Genome mutation(const Genome& g, Rng& rng, OperatorState& state) const { return unary(g, rng, state); }
    virtual Genome binary(const Genome& a, const Genome& b, Rng& rng) const = 0;
    /// DE combination of three parents; `scale` is the differential weight F.
    virtual Genome ternary(const Genome& a, const Genome& b, const Genome& c, double scale, Rng& rng) const = 0;
    /// Feedback after a unary() move was judged (adaptive operators only).
    virtual void note_outcome(OperatorState&, bool /*improved*/) const {}
};

// ---------------------------------------------------------------------------
// Permutation helpers shared by TSP and BPP
// ---------------------------------------------------------------------------

namespace perm {

Permutation random(int n, Rng& rng);
/// Lexicographic successor; false when `p` is the last permutation.
bool next_lexicographic(std::vector<int>& p);
/// Reverses positions [i, j] (inclusive).
Permutation reverse_segment(const Permutation& p, int i, int j);
Permutation two_opt(const Permutation& p, Rng& rng);
/// child[0..k) = b[0..k), remainder = values missing from that prefix in the order they appear in a.
Permutation single_point_crossover(const Permutation& a, const Permutation& b, int k);
Permutation single_point_crossover(const Permutation& a, const Permutation& b, Rng& rng);
/// v = a - b + c, then indices ordered by a stable ascending sort on v.
Permutation ternary(const Permutation& a, const Permutation& b, const Permutation& c);
/// Moves positions [start, start + len) to the end, preserving their order.
Permutation move_block_to_end(const Permutation& p, int start, int len);
Permutation shift_to_end(const Permutation& p, int pos);
/// Order crossover: keep a[i..j], fill the other positions with b's remaining values in order (from position 0).
Permutation order_crossover(const Permutation& a, const Permutation& b, int i, int j);
Permutation order_crossover(const Permutation& a, const Permutation& b, Rng& rng);

}  // namespace perm

// ---------------------------------------------------------------------------
// Travelling salesman
// ---------------------------------------------------------------------------

enum class DistanceRule { Euclidean, TsplibEuc2d };

struct TspInstance {
    int n = 0;
    std::vector<double> dist;   // row-major n x n

    static TspInstance from_coordinates(const std::vector<std::pair<double, double>>& coords, DistanceRule rule);
    static TspInstance from_matrix(int n, std::vector<double> dist);
    double at(int i, int j) const { return dist[static_cast<std::size_t>(i) * n + j]; }
    void validate() const;
};

class TspProblem final : public Problem {
public:
    explicit TspProblem(TspInstance inst, std::string label = "tsp");

    std::string name() const override { return label_; }
    const GenomeSpec& genome_spec() const override { return spec_; }
    std::optional<double> evaluate(const Genome& g) const override;
    double tour_length(const Permutation& p) const;

    Genome random_solution(Rng& rng) const override;
    std::optional<Genome> next_solution(Cursor& cursor, Rng& rng) const override;
    Genome unary(const Genome& g, Rng& rng, OperatorState& state) const override;
    Genome binary(const Genome& a, const Genome& b, Rng& rng) const override;
    Genome ternary(const Genome& a, const Genome& b, const Genome& c, double scale, Rng& rng) const override;

    const TspInstance& instance() const { return inst_; }

private:
    TspInstance inst_;
    GenomeSpec spec_;
    std::string label_;
};

// ---------------------------------------------------------------------------
// Bin packing
// ---------------------------------------------------------------------------

struct BppInstance {
    std::vector<double> volumes;
    double capacity = 1.0;
    void validate() const;
};

/// Places items in permutation order into the first bin with enough residual capacity.
int first_fit_bins(const BppInstance& inst, const std::vector<int>& order);
/// Largest block the displacement operator may move for n items: max(1, ceil(0.005 n)).
int max_displacement_block(int n);

class BppProblem final : public Problem {
public:
    explicit BppProblem(BppInstance inst, std::string label = "bpp");

    std::string name() const override { return label_; }
    const GenomeSpec& genome_spec() const override { return spec_; }
    std::optional<double> evaluate(const Genome& g) const override;

    Genome random_solution(Rng& rng) const override;
    std::optional<Genome> next_solution(Cursor& cursor, Rng& rng) const override;
    /// Displacement: a block of adaptive size is moved to the end.
    Genome unary(const Genome& g, Rng& rng, OperatorState& state) const override;
    /// Shift mutation: one random item moved to the end.
    Genome mutation(const Genome& g, Rng& rng, OperatorState& state) const override;
    Genome binary(const Genome& a, const Genome& b, Rng& rng) const override;
    Genome ternary(const Genome& a, const Genome& b, const Genome& c, double scale, Rng& rng) const override;
    /// Halve the block after 10 straight failures, reset to the maximum on improvement.
    void note_outcome(OperatorState& state, bool improved) const override;

    const BppInstance& instance() const { return inst_; }

private:
    BppInstance inst_;
    GenomeSpec spec_;
    std::string label_;
};

// ---------------------------------------------------------------------------
// Continuous optimisation
// ---------------------------------------------------------------------------

enum class CoKind { F04BucheRastrigin, F08Rosenbrock, F14DifferentPowers, F17Schaffers };

std::string_view to_string(CoKind k);
CoKind parse_co_kind(std::string_view text);

struct CoFunction {
    CoKind kind = CoKind::F08Rosenbrock;
    int dimension = 10;
    std::vector<double> x_opt;   // empty = origin
    double f_opt = 0.0;
    std::vector<Bounds> bounds;  // empty = [-5, 5]^n

    /// Shifted optimum drawn uniformly from [-4, 4]^n, reproducible from the seed.
    static CoFunction shifted(CoKind kind, int dimension, std::uint64_t seed, double f_opt = 0.0);
    void normalize();
};

/// Raw function value; throws ContractViolation when x lies outside the bounds.
double co_evaluate(const CoFunction& fn, const std::vector<double>& x);

class CoProblem final : public Problem {
public:
    static constexpr double kUnaryRadius = 0.0025;
    static constexpr double kGridStep = 0.005;

    explicit CoProblem(CoFunction fn);

    std::string name() const override;
    const GenomeSpec& genome_spec() const override { return spec_; }
    std::optional<double> evaluate(const Genome& g) const override;

    Genome random_solution(Rng& rng) const override;
    std::optional<Genome> next_solution(Cursor& cursor, Rng& rng) const override;
    Genome unary(const Genome& g, Rng& rng, OperatorState& state) const override;
    Genome binary(const Genome& a, const Genome& b, Rng& rng) const override;
    Genome ternary(const Genome& a, const Genome& b, const Genome& c, double scale, Rng& rng) const override;

    const CoFunction& function() const { return fn_; }

private:
    CoFunction fn_;
    GenomeSpec spec_;
    std::vector<double> lo_, hi_;
};

// ---------------------------------------------------------------------------
// Vertex cover
// ---------------------------------------------------------------------------

struct VcInstance {
    int n = 0;
    std::vector<std::pair<int, int>> edges;
    void validate() const;
};

class VcProblem final : public Problem {
public:
    static constexpr int kUnaryRemovals = 5;
    static constexpr int kMutationRemovals = 3;

    explicit VcProblem(VcInstance inst, std::string label = "vc");

    std::string name() const override { return label_; }
    const GenomeSpec& genome_spec() const override { return spec_; }
    /// Cover size; evaluating a non-cover is a contract violation.
    std::optional<double> evaluate(const Genome& g) const override;
    bool is_cover(const VertexSet& s) const;

    /// Random subset completed by random endpoints of uncovered edges.
    Genome random_solution(Rng& rng) const override;
    /// Binary counter over the inclusion mask, each subset repaired into a cover.
    std::optional<Genome> next_solution(Cursor& cursor, Rng& rng) const override;
    /// Removes five random members and repairs.
    Genome unary(const Genome& g, Rng& rng, OperatorState& state) const override;
    /// Removes three random members and repairs.
    Genome mutation(const Genome& g, Rng& rng, OperatorState& state) const override;
    /// Uniform crossover on the inclusion masks, then repair.
    Genome binary(const Genome& a, const Genome& b, Rng& rng) const override;
    /// Intersection of the first two, completed from the third.
    Genome ternary(const Genome& a, const Genome& b, const Genome& c, double scale, Rng& rng) const override;

    VertexSet remove_and_repair(const VertexSet& s, int removals, Rng& rng) const;
    /// Greedy completion: adds endpoints of uncovered edges by highest uncovered degree,
    /// random among ties. When `allowed` is non-empty only those vertices may be added.
    void repair(std::vector<char>& mask, Rng& rng, const std::vector<char>& allowed = {}) const;

    const VcInstance& instance() const { return inst_; }

private:
    VertexSet to_set(const std::vector<char>& mask) const;
    std::vector<char> to_mask(const VertexSet& s) const;

    VcInstance inst_;
    GenomeSpec spec_;
    std::string label_;
    std::vector<std::vector<int>> adjacency_;
};

// ---------------------------------------------------------------------------
// Hyper-parameter records
// ---------------------------------------------------------------------------

/// Scores a parameter record. Implementations must be safe to call from several islands at once.
class ParamEvaluator {
public:
    virtual ~ParamEvaluator() = default;
    virtual std::optional<double> evaluate(const ParamRecord& rec, const ParamSpace& space) = 0;
    virtual bool stochastic() const { return false; }
};

/// Deterministic smooth stand-in for a model's error rate:
///   0.05 + sum_i w_i (u_i - t_i)^2 over normalised parameters u_i in [0, 1].
/// For the random-forest space the unique minimiser is
///   P=60 K=3 V=0.1 U=1 B=0 depth=12 I=25 batchsize=100, with value 0.05.
class SurrogateEvaluator final : public ParamEvaluator {
public:
    static constexpr double kMinimum = 0.05;

    SurrogateEvaluator();
    SurrogateEvaluator(ParamRecord minimiser, std::vector<double> weights);

    std::optional<double> evaluate(const ParamRecord& rec, const ParamSpace& space) override;
    const ParamRecord& minimiser() const { return minimiser_; }

private:
    ParamRecord minimiser_;
    std::vector<double> weights_;
};

/// Line protocol over a child process's stdin/stdout:
///   -> "EVAL <canonical record>"     <- "OK <objective>" | "ERR <message>"
/// One child per concurrent caller; a child that times out or breaks protocol is discarded.
class ExternalEvaluator final : public ParamEvaluator {
public:
    ExternalEvaluator(std::string command, std::chrono::milliseconds timeout = std::chrono::seconds(60),
                      bool stochastic = true);
    ~ExternalEvaluator() override;
    ExternalEvaluator(const ExternalEvaluator&) = delete;
    ExternalEvaluator& operator=(const ExternalEvaluator&) = delete;

    std::optional<double> evaluate(const ParamRecord& rec, const ParamSpace& space) override;
    bool stochastic() const override { return stochastic_; }
    const std::string& last_error() const { return last_error_; }

private:
    struct Session;
    std::unique_ptr<Session> checkout();
    void checkin(std::unique_ptr<Session> s);

    std::string command_;
    std::chrono::milliseconds timeout_;
    bool stochastic_;
    std::mutex mutex_;
    std::vector<std::unique_ptr<Session>> idle_;
    std::string last_error_;
};

class ParamProblem final : public Problem {
public:
    static constexpr double kRealStep = 0.005;

    ParamProblem(ParamSpace space, std::shared_ptr<ParamEvaluator> evaluator, std::string label = "ml");

    std::string name() const override { return label_; }
    const GenomeSpec& genome_spec() const override { return spec_; }
    bool stochastic() const override { return evaluator_->stochastic(); }
    std::optional<double> evaluate(const Genome& g) const override;

    Genome random_solution(Rng& rng) const override;
    /// Nested range scan: integers by 1, booleans 0/1, reals by kRealStep of their range; first entry fastest.
    std::optional<Genome> next_solution(Cursor& cursor, Rng& rng) const override;
    /// Integers +-1, reals by a random amount below 0.005 in magnitude, booleans flip with probability 0.5.
    Genome unary(const Genome& g, Rng& rng, OperatorState& state) const override;
    /// One-point crossover.
    Genome binary(const Genome& a, const Genome& b, Rng& rng) const override;
    /// c + F (a - b), integers rounded, then clamped.
    Genome ternary(const Genome& a, const Genome& b, const Genome& c, double scale, Rng& rng) const override;

    const ParamSpace& space() const { return spec_.params; }

private:
    double snap(std::size_t i, double v) const;

    GenomeSpec spec_;
    std::shared_ptr<ParamEvaluator> evaluator_;
    std::string label_;
};

// ---------------------------------------------------------------------------
// Instance files
// ---------------------------------------------------------------------------

enum class InstanceFormat { TsplibEuc2d, VolumeList, DimacsEdges };

TspInstance load_tsplib(const std::filesystem::path& path);
BppInstance load_volume_list(const std::filesystem::path& path);
VcInstance load_dimacs(const std::filesystem::path& path);
TspInstance parse_tsplib(std::istream& in);
BppInstance parse_volume_list(std::istream& in);
VcInstance parse_dimacs(std::istream& in);

/// n volumes drawn uniformly from (0, 1), reproducible from the seed.
BppInstance generate_bpp(int n, std::uint64_t seed);
void write_volume_list(const BppInstance& inst, std::ostream& out);

}  // namespace hetero
