#include "hetero/core.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>

namespace hetero {

namespace {

constexpr std::string_view kKindNames[] = {"RS", "HC", "SA", "TS", "EA", "DE", "BF"};

std::vector<std::string_view> split_ws(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        if (j > i) out.push_back(text.substr(i, j - i));
        i = j;
    }
    return out;
}

long parse_long(std::string_view tok) {
    long v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || p != tok.data() + tok.size())
        throw ParseError("expected integer, got '" + std::string(tok) + "'");
    return v;
}

double parse_double(std::string_view tok) {
    std::string s(tok);
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) throw ParseError("expected number, got '" + s + "'");
    return v;
}

struct Fnv {
    std::uint64_t h = 1469598103934665603ull;
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 1099511628211ull;
        }
    }
    template <class T>
    void value(T v) { bytes(&v, sizeof v); }
};

}  // namespace

std::string_view to_string(MethodKind kind) { return kKindNames[index_of(kind)]; }

MethodKind parse_method_kind(std::string_view text) {
    std::string upper(text);
    for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    for (int i = 0; i < kKindCount; ++i)
        if (kKindNames[i] == upper) return static_cast<MethodKind>(i);
    throw ParseError("unknown method kind '" + std::string(text) + "'");
}

std::vector<MethodKind> parse_kind_list(std::string_view text) {
    std::vector<MethodKind> kinds;
    std::string normalized(text);
    std::replace(normalized.begin(), normalized.end(), ',', ' ');
    for (auto tok : split_ws(normalized)) {
        auto kind = parse_method_kind(tok);
        if (std::find(kinds.begin(), kinds.end(), kind) != kinds.end())
            throw ParseError("method kind '" + std::string(tok) + "' listed twice");
        kinds.push_back(kind);
    }
    return kinds;
}

std::string_view to_string(Encoding e) {
    switch (e) {
        case Encoding::Permutation: return "permutation";
        case Encoding::RealVector: return "real-vector";
        case Encoding::VertexSet: return "vertex-set";
        case Encoding::ParamRecord: return "param-record";
    }
    return "?";
}

ParamSpace ParamSpace::random_forest() {
    return ParamSpace{{
        {"P", ParamType::Integer, 20, 100},
        {"K", ParamType::Integer, 1, 6},
        {"V", ParamType::Real, 0.0001, 0.5},
        {"U", ParamType::Boolean, 0, 1},
        {"B", ParamType::Boolean, 0, 1},
        {"depth", ParamType::Integer, 1, 20},
        {"I", ParamType::Integer, 20, 30},
        {"batchsize", ParamType::Integer, 80, 120},
    }};
}

int ParamSpace::index(std::string_view name) const {
    for (std::size_t i = 0; i < entries.size(); ++i)
        if (entries[i].name == name) return static_cast<int>(i);
    return -1;
}

std::optional<std::string> validate_genome(const Genome& g, const GenomeSpec& spec) {
    if (encoding_of(g) != spec.encoding)
        return "encoding mismatch: expected " + std::string(to_string(spec.encoding)) + ", got " +
               std::string(to_string(encoding_of(g)));
    const auto n = static_cast<std::size_t>(spec.size);
    switch (spec.encoding) {
        case Encoding::Permutation: {
            const auto& order = std::get<Permutation>(g).order;
            if (order.size() != n)
                return "length " + std::to_string(order.size()) + " != " + std::to_string(n);
            std::vector<char> seen(n, 0);
            for (std::size_t i = 0; i < n; ++i) {
                int v = order[i];
                if (v < 0 || static_cast<std::size_t>(v) >= n)
                    return "position " + std::to_string(i) + " holds out-of-range index " + std::to_string(v);
                if (seen[v]) return "index " + std::to_string(v) + " duplicated";
                seen[v] = 1;
            }
            return std::nullopt;
        }
        case Encoding::RealVector: {
            const auto& x = std::get<RealVector>(g).values;
            if (spec.bounds.size() != n) return "spec bounds length does not match dimension";
            if (x.size() != n) return "dimension " + std::to_string(x.size()) + " != " + std::to_string(n);
            for (std::size_t i = 0; i < n; ++i) {
                if (!std::isfinite(x[i])) return "dimension " + std::to_string(i) + " not finite";
                if (x[i] < spec.bounds[i].lo || x[i] > spec.bounds[i].hi)
                    return "dimension " + std::to_string(i) + " out of bounds";
            }
            return std::nullopt;
        }
        case Encoding::VertexSet: {
            const auto& m = std::get<VertexSet>(g).members;
            for (std::size_t i = 0; i < m.size(); ++i) {
                if (m[i] < 0 || static_cast<std::size_t>(m[i]) >= n)
                    return "vertex " + std::to_string(m[i]) + " outside universe of size " + std::to_string(n);
                if (i > 0 && m[i] <= m[i - 1]) return "members not sorted/unique at position " + std::to_string(i);
            }
            return std::nullopt;
        }
        case Encoding::ParamRecord: {
            const auto& v = std::get<ParamRecord>(g).values;
            const auto& entries = spec.params.entries;
            if (v.size() != entries.size())
                return "entry count " + std::to_string(v.size()) + " != " + std::to_string(entries.size());
            for (std::size_t i = 0; i < v.size(); ++i) {
                const auto& e = entries[i];
                if (!std::isfinite(v[i]) || v[i] < e.lo || v[i] > e.hi) return "entry " + e.name + " out of range";
                if (e.type != ParamType::Real && v[i] != std::floor(v[i])) return "entry " + e.name + " not integral";
            }
            return std::nullopt;
        }
    }
    return "unknown encoding";
}

void require_valid(const Genome& g, const GenomeSpec& spec) {
    if (auto err = validate_genome(g, spec)) throw ContractViolation("invalid genome: " + *err);
}

std::string format_real(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

std::string format_genome(const Genome& g, const GenomeSpec& spec) {
    std::string out;
    auto sep = [&out] {
        if (!out.empty()) out += ' ';
    };
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Permutation>) {
                for (int i : v.order) sep(), out += std::to_string(i);
            } else if constexpr (std::is_same_v<T, RealVector>) {
                for (double x : v.values) sep(), out += format_real(x);
            } else if constexpr (std::is_same_v<T, VertexSet>) {
                for (int i : v.members) sep(), out += std::to_string(i);
            } else {
                const auto& entries = spec.params.entries;
                if (entries.size() != v.values.size()) throw ContractViolation("record does not match param space");
                for (std::size_t i = 0; i < entries.size(); ++i) {
                    sep();
                    out += entries[i].name + "=";
                    if (entries[i].type == ParamType::Real)
                        out += format_real(v.values[i]);
                    else
                        out += std::to_string(static_cast<long long>(v.values[i]));
                }
            }
        },
        g);
    return out;
}

Genome parse_genome(std::string_view text, const GenomeSpec& spec) {
    auto toks = split_ws(text);
    Genome g;
    switch (spec.encoding) {
        case Encoding::Permutation: {
            Permutation p;
            for (auto t : toks) p.order.push_back(static_cast<int>(parse_long(t)));
            g = std::move(p);
            break;
        }
        case Encoding::RealVector: {
            RealVector r;
            for (auto t : toks) r.values.push_back(parse_double(t));
            g = std::move(r);
            break;
        }
        case Encoding::VertexSet: {
            VertexSet s;
            for (auto t : toks) s.members.push_back(static_cast<int>(parse_long(t)));
            g = std::move(s);
            break;
        }
        case Encoding::ParamRecord: {
            const auto& entries = spec.params.entries;
            ParamRecord r;
            r.values.assign(entries.size(), std::nan(""));
            for (auto t : toks) {
                auto eq = t.find('=');
                if (eq == std::string_view::npos) throw ParseError("expected key=value, got '" + std::string(t) + "'");
                int idx = spec.params.index(t.substr(0, eq));
                if (idx < 0) throw ParseError("unknown parameter '" + std::string(t.substr(0, eq)) + "'");
                r.values[idx] = parse_double(t.substr(eq + 1));
            }
            for (std::size_t i = 0; i < entries.size(); ++i)
                if (std::isnan(r.values[i])) throw ParseError("missing parameter '" + entries[i].name + "'");
            g = std::move(r);
            break;
        }
    }
    if (auto err = validate_genome(g, spec)) throw ParseError("invalid genome: " + *err);
    return g;
}

std::uint64_t genome_digest(const Genome& g) {
    Fnv f;
    f.value(static_cast<std::uint8_t>(g.index()));
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Permutation>) {
                for (int i : v.order) f.value(static_cast<std::int32_t>(i));
            } else if constexpr (std::is_same_v<T, VertexSet>) {
                for (int i : v.members) f.value(static_cast<std::int32_t>(i));
            } else {
                for (double x : v.values) {
                    std::uint64_t bits;
                    std::memcpy(&bits, &x, sizeof bits);
                    f.value(bits);
                }
            }
        },
        g);
    return f.h;
}

void Lineage::append(MethodInstanceId id, std::int64_t times) {
    if (times <= 0) return;
    if (!runs_.empty() && runs_.back().id == id)
        runs_.back().count += times;
    else
        runs_.push_back({id, times});
    size_ += times;
}

std::vector<MethodInstanceId> Lineage::expanded() const {
    std::vector<MethodInstanceId> out;
    out.reserve(static_cast<std::size_t>(size_));
    for (const auto& r : runs_) out.insert(out.end(), static_cast<std::size_t>(r.count), r.id);
    return out;
}

std::int64_t Lineage::occurrences(MethodInstanceId id) const {
    std::int64_t n = 0;
    for (const auto& r : runs_)
        if (r.id == id) n += r.count;
    return n;
}

EvaluatedSolution append_lineage(EvaluatedSolution s, MethodInstanceId id) {
    s.lineage.append(id);
    return s;
}

void MethodConfig::validate() const {
    if (hc_neighbors < 1 || ea_pop < 1 || ts_tabu_size < 1 || de_pop < 1)
        throw ContractViolation("method counts must be >= 1");
    if (de_pop < 4) throw ContractViolation("de_pop must be >= 4 (three distinct partners per member)");
    auto rate = [](double r) { return r >= 0.0 && r <= 1.0; };
    if (!rate(ea_mutation_rate) || !rate(ea_crossover_rate)) throw ContractViolation("EA rates must lie in [0,1]");
    if (!(sa_temperature > 0.0)) throw ContractViolation("sa_temperature must be > 0");
    if (!(sa_cooling_rate > 0.0 && sa_cooling_rate < 1.0)) throw ContractViolation("sa_cooling_rate must lie in (0,1)");
    if (!(de_f > 0.0)) throw ContractViolation("de_f must be > 0");
}

void PlannerConfig::validate(std::size_t catalog_size) const {
    if (islands < 1) throw ContractViolation("islands must be >= 1");
    if (iterations < 1) throw ContractViolation("iterations must be >= 1");
    if (runs < 1) throw ContractViolation("runs must be >= 1");
    if (top_n < 1) throw ContractViolation("top_n must be >= 1");
    if (n_init < 0 || n_protect < 0 || n_patience < 1) throw ContractViolation("planner windows must be non-negative");
    if (catalog_size == 0) throw ContractViolation("portfolio catalog is empty");
    // m_min above the catalog size is allowed: the diversity floor is capped by the catalog.
    if (m_min < 1) throw ContractViolation("m_min must be >= 1");
}

std::map<MethodKind, MethodClass> default_classification() {
    std::map<MethodKind, MethodClass> m;
    for (auto k : kAllKinds) m[k] = MethodClass::Exploitation;
    m[MethodKind::RS] = MethodClass::Exploration;
    m[MethodKind::BF] = MethodClass::Exploration;
    return m;
}

}  // namespace hetero
