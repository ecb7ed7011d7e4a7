#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace hetero {

using Rng = std::mt19937_64;

/// Raised when a value breaks a documented invariant (invalid genome, bad config, ...).
class ContractViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

// ---------------------------------------------------------------------------
// Identifiers and method kinds
// ---------------------------------------------------------------------------

struct MethodInstanceId {
    int island = 0;
    int epoch = 0;

    auto operator<=>(const MethodInstanceId&) const = default;
    std::string str() const { return std::to_string(island) + "." + std::to_string(epoch); }
};

enum class MethodKind : std::uint8_t { RS, HC, SA, TS, EA, DE, BF };

inline constexpr MethodKind kAllKinds[] = {MethodKind::RS, MethodKind::HC, MethodKind::SA, MethodKind::TS,
                                           MethodKind::EA, MethodKind::DE, MethodKind::BF};
inline constexpr int kKindCount = 7;

enum class MethodClass : std::uint8_t { Exploration, Exploitation };

std::string_view to_string(MethodKind kind);
MethodKind parse_method_kind(std::string_view text);
std::vector<MethodKind> parse_kind_list(std::string_view text);
inline int index_of(MethodKind kind) { return static_cast<int>(kind); }

// ---------------------------------------------------------------------------
// Genomes
// ---------------------------------------------------------------------------

struct Permutation {
    std::vector<int> order;
    bool operator==(const Permutation&) const = default;
};

/// Bounds live in the problem's GenomeSpec; only the coordinates travel with the genome.
struct RealVector {
    std::vector<double> values;
    bool operator==(const RealVector&) const = default;
};

/// Members are kept sorted ascending and unique.
struct VertexSet {
    std::vector<int> members;
    bool operator==(const VertexSet&) const = default;
};

/// Values are positional, matching the entries of the problem's ParamSpace.
struct ParamRecord {
    std::vector<double> values;
    bool operator==(const ParamRecord&) const = default;
};

using Genome = std::variant<Permutation, RealVector, VertexSet, ParamRecord>;

enum class Encoding : std::uint8_t { Permutation, RealVector, VertexSet, ParamRecord };

inline Encoding encoding_of(const Genome& g) { return static_cast<Encoding>(g.index()); }
std::string_view to_string(Encoding e);

struct Bounds {
    double lo = 0.0;
    double hi = 0.0;
};

enum class ParamType : std::uint8_t { Integer, Real, Boolean };

struct ParamEntry {
    std::string name;
    ParamType type = ParamType::Real;
    double lo = 0.0;
    double hi = 1.0;
};

struct ParamSpace {
    std::vector<ParamEntry> entries;

    /// Random-forest search space: P, K, V, U, B, depth, I, batchsize.
    static ParamSpace random_forest();
    int index(std::string_view name) const;
};

/// Everything needed to check a genome in isolation.
struct GenomeSpec {
    Encoding encoding = Encoding::Permutation;
    int size = 0;                 // permutation length, dimension, universe size, or entry count
    std::vector<Bounds> bounds;   // RealVector only
    ParamSpace params;            // ParamRecord only
};

/// Returns std::nullopt when the genome satisfies every invariant of `spec`,
/// otherwise a description of the first violation found.
std::optional<std::string> validate_genome(const Genome& g, const GenomeSpec& spec);
void require_valid(const Genome& g, const GenomeSpec& spec);

std::string format_genome(const Genome& g, const GenomeSpec& spec);
Genome parse_genome(std::string_view text, const GenomeSpec& spec);
std::string format_real(double value);

/// 64-bit FNV-1a over the encoding tag and the raw genome values.
std::uint64_t genome_digest(const Genome& g);

// ---------------------------------------------------------------------------
// Lineage and evaluated solutions
// ---------------------------------------------------------------------------

/// Ordered history of method instances that created or modified a solution.
/// Stored run-length encoded; repeated appends by one instance stay O(1).
class Lineage {
public:
    struct Run {
        MethodInstanceId id;
        std::int64_t count = 0;
        bool operator==(const Run&) const = default;
    };

    Lineage() = default;
    Lineage(std::initializer_list<MethodInstanceId> ids) {
        for (const auto& id : ids) append(id);
    }

    void append(MethodInstanceId id, std::int64_t times = 1);
    std::int64_t size() const noexcept { return size_; }
    bool empty() const noexcept { return size_ == 0; }
    const std::vector<Run>& runs() const noexcept { return runs_; }
    std::vector<MethodInstanceId> expanded() const;
    std::int64_t occurrences(MethodInstanceId id) const;
    bool operator==(const Lineage&) const = default;

private:
    std::vector<Run> runs_;
    std::int64_t size_ = 0;
};

struct EvaluatedSolution {
    Genome genome;
    double objective = 0.0;   // minimization
    Lineage lineage;
    MethodInstanceId origin;
    std::uint64_t sequence_no = 0;
};

EvaluatedSolution append_lineage(EvaluatedSolution s, MethodInstanceId id);

// ---------------------------------------------------------------------------
// Configuration records
// ---------------------------------------------------------------------------

struct MethodConfig {
    int hc_neighbors = 10;
    int ea_pop = 10;
    double ea_mutation_rate = 0.9;
    double ea_crossover_rate = 0.1;
    int ts_tabu_size = 50;
    double sa_temperature = 10000.0;
    double sa_cooling_rate = 0.002;
    int de_pop = 50;
    double de_f = 1.0;

    void validate() const;
};

struct PlannerConfig {
    int iterations = 50;
    int islands = 16;
    int runs = 9;
    int n_init = 5;
    int n_protect = 3;
    int n_patience = 3;
    int m_min = 3;
    int top_n = 10;

    void validate(std::size_t catalog_size) const;
};

/// Default exploration/exploitation split: RS and BF explore, the rest exploit.
std::map<MethodKind, MethodClass> default_classification();

}  // namespace hetero
