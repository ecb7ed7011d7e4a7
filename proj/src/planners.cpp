#include "hetero/planners.hpp"
#include "hetero/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <tuple>

namespace hetero {

Features& Features::operator+=(const Features& o) {
    qi += o.qi;
    af_sum += o.af_sum;
    af_count += o.af_count;
    qm += o.qm;
    qual += o.qual;
    helper += o.helper;
    return *this;
}

// ---------------------------------------------------------------------------
// Ledger
// ---------------------------------------------------------------------------

FeatureLedger::FeatureLedger(int top_n, int n_patience) : top_n_(top_n), n_patience_(n_patience) {
    if (top_n < 1) throw ContractViolation("top_n must be >= 1");
    if (n_patience < 1) throw ContractViolation("n_patience must be >= 1");
}

const InstanceRecord* FeatureLedger::instance(MethodInstanceId id) const {
    auto it = instances_.find(id);
    return it == instances_.end() ? nullptr : &it->second.record;
}

Features FeatureLedger::kind_cumulative(MethodKind kind) const {
    auto it = kinds_.find(kind);
    return it == kinds_.end() ? Features{} : it->second.cumulative;
}

Features FeatureLedger::kind_window(MethodKind kind) const {
    auto it = kinds_.find(kind);
    return it == kinds_.end() ? Features{} : it->second.window;
}

void FeatureLedger::apply(const RunEvent& e) {
    std::visit(
        [&](const auto& ev) {
            using T = std::decay_t<decltype(ev)>;
            if constexpr (std::is_same_v<T, event::Share>) {
                on_share(ev);
            } else if constexpr (std::is_same_v<T, event::Start>) {
                if (instances_.count(ev.instance)) throw ContractViolation("instance " + ev.instance.str() + " started twice");
                Live live;
                live.record.id = ev.instance;
                live.record.kind = ev.kind;
                live.record.started_iteration = ev.iteration;
                live.record.planner_started = !ev.initial;
                live.record.bc = best_lineage_.occurrences(ev.instance);
                instances_.emplace(ev.instance, std::move(live));
                auto& k = kinds_[ev.kind];
                k.ever_run = true;
                ++k.instances_alive;
            } else if constexpr (std::is_same_v<T, event::Kill>) {
                auto it = instances_.find(ev.instance);
                if (it == instances_.end() || !it->second.record.alive)
                    throw ContractViolation("kill of unknown instance " + ev.instance.str());
                it->second.record.alive = false;
                --kinds_[it->second.record.kind].instances_alive;
            } else if constexpr (std::is_same_v<T, event::Help>) {
                auto it = instances_.find(ev.helper);
                if (it == instances_.end()) return;
                ++it->second.open.helper;
                ++it->second.record.cumulative.helper;
                ++kinds_[it->second.record.kind].cumulative.helper;
            } else if constexpr (std::is_same_v<T, event::IterationBoundary>) {
                on_boundary(ev.iteration);
            }
            // Improve, EvaluationCount and Drop carry nothing the planners read.
        },
        e.body);
}

void FeatureLedger::on_share(const event::Share& s) {
    auto it = instances_.find(s.sender);
    if (it == instances_.end()) throw ContractViolation("share from unknown instance " + s.sender.str());
    Live& live = it->second;
    KindRecord& kind = kinds_[live.record.kind];

    Features delta;
    delta.af_sum = s.objective;
    delta.af_count = 1;
    if (live.shared_digests.insert(s.digest).second) delta.qm = 1;

    const bool in_archive =
        std::any_of(archive_.begin(), archive_.end(), [&](const ArchiveEntry& a) { return a.digest == s.digest; });
    if (!in_archive && (static_cast<int>(archive_.size()) < top_n_ || s.objective < archive_.back().objective)) {
        auto pos = std::upper_bound(archive_.begin(), archive_.end(), s.objective,
                                    [](double v, const ArchiveEntry& a) { return v < a.objective; });
        archive_.insert(pos, ArchiveEntry{s.objective, s.digest});
        if (static_cast<int>(archive_.size()) > top_n_) archive_.pop_back();
        delta.qual = 1;
    }

    if (!global_best_ || s.objective < *global_best_) {
        delta.qi = 1;
        global_best_ = s.objective;
        best_lineage_ = s.lineage;
        recompute_bc();
    }

    live.open += delta;
    live.record.cumulative += delta;
    live.record.last_share_objective = s.objective;
    kind.cumulative += delta;
}

void FeatureLedger::recompute_bc() {
    for (auto& [id, k] : kinds_) k.bc = 0;
    for (auto& [id, live] : instances_) {
        live.record.bc = best_lineage_.occurrences(id);
        kinds_[live.record.kind].bc += live.record.bc;
    }
}

void FeatureLedger::on_boundary(int t) {
    if (t != iteration_ + 1) throw ContractViolation("iteration boundary out of order");
    iteration_ = t;
    for (auto& [id, k] : kinds_) k.window = Features{};
    for (auto& [id, live] : instances_) {
        InstanceRecord& r = live.record;
        r.window = live.open;
        live.open = Features{};
        kinds_[r.kind].window += r.window;
        if (!r.alive) continue;
        r.qi_history.push_back(r.window.qi);
        while (static_cast<int>(r.qi_history.size()) > n_patience_) r.qi_history.pop_front();
        kinds_[r.kind].last_running_iteration = t;
    }
}

LedgerSnapshot FeatureLedger::snapshot() const {
    LedgerSnapshot s;
    s.iteration = iteration_;
    s.global_best = global_best_;
    s.archive = archive_;
    for (const auto& [id, live] : instances_)
        if (live.record.alive) s.alive.push_back(live.record);
    s.kinds = kinds_;
    return s;
}

namespace {

nlohmann::ordered_json features_json(const Features& f) {
    nlohmann::ordered_json j;
    j["qi"] = f.qi;
    j["af_sum"] = f.af_sum;
    j["af_count"] = f.af_count;
    j["qm"] = f.qm;
    j["qual"] = f.qual;
    j["helper"] = f.helper;
    return j;
}

}  // namespace

std::string LedgerSnapshot::to_json() const {
    nlohmann::ordered_json j;
    j["iteration"] = iteration;
    j["global_best"] = global_best ? nlohmann::ordered_json(*global_best) : nlohmann::ordered_json(nullptr);
    auto& arch = j["archive"] = nlohmann::ordered_json::array();
    for (const auto& a : archive) arch.push_back({a.objective, a.digest});
    auto& inst = j["instances"] = nlohmann::ordered_json::array();
    for (const auto& r : alive) {
        nlohmann::ordered_json o;
        o["id"] = r.id.str();
        o["kind"] = to_string(r.kind);
        o["started"] = r.started_iteration;
        o["planner_started"] = r.planner_started;
        o["window"] = features_json(r.window);
        o["cumulative"] = features_json(r.cumulative);
        o["bc"] = r.bc;
        o["qi_history"] = std::vector<std::int64_t>(r.qi_history.begin(), r.qi_history.end());
        o["last_share"] = r.last_share_objective ? nlohmann::ordered_json(*r.last_share_objective)
                                                 : nlohmann::ordered_json(nullptr);
        inst.push_back(std::move(o));
    }
    auto& kinds_json = j["kinds"] = nlohmann::ordered_json::object();
    for (const auto& [kind, k] : kinds) {
        nlohmann::ordered_json o;
        o["window"] = features_json(k.window);
        o["cumulative"] = features_json(k.cumulative);
        o["bc"] = k.bc;
        o["alive"] = k.instances_alive;
        o["last_running"] = k.last_running_iteration ? nlohmann::ordered_json(*k.last_running_iteration)
                                                     : nlohmann::ordered_json(nullptr);
        kinds_json[std::string(to_string(kind))] = std::move(o);
    }
    return j.dump();
}

std::uint64_t LedgerSnapshot::digest() const {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : to_json()) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// ---------------------------------------------------------------------------
// Policies
// ---------------------------------------------------------------------------

namespace {

constexpr std::pair<PlannerKind, std::string_view> kPlannerNames[] = {
    {PlannerKind::Static, "Static"}, {PlannerKind::R, "P-R"},   {PlannerKind::RG, "P-RG"}, {PlannerKind::MD, "P-MD"},
    {PlannerKind::BH, "P-BH"},       {PlannerKind::AF, "P-AF"}, {PlannerKind::QI, "P-QI"}, {PlannerKind::QM, "P-QM"},
    {PlannerKind::BM, "P-BM"},       {PlannerKind::BC, "P-BC"}, {PlannerKind::LQI, "P-LQI"},
};

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

std::string_view to_string(PlannerKind p) {
    for (const auto& [k, name] : kPlannerNames)
        if (k == p) return name;
    return "?";
}

PlannerKind parse_planner(std::string_view text) {
    for (const auto& [k, name] : kPlannerNames) {
        if (text == name) return k;
        // Accept the bare suffix too ("QI", "static").
        std::string_view bare = name.substr(0, 2) == "P-" ? name.substr(2) : name;
        if (text.size() == bare.size() &&
            std::equal(text.begin(), text.end(), bare.begin(),
                       [](char a, char b) { return std::tolower(static_cast<unsigned char>(a)) == std::tolower(static_cast<unsigned char>(b)); }))
            return k;
    }
    throw ContractViolation("unknown planner '" + std::string(text) + "'");
}

bool uses_protection(PlannerKind p) {
    switch (p) {
        case PlannerKind::MD:
        case PlannerKind::AF:
        case PlannerKind::QI:
        case PlannerKind::QM:
        case PlannerKind::LQI: return true;
        default: return false;
    }
}

bool is_protected(const PlannerSettings& settings, const InstanceRecord& inst, int t) {
    return uses_protection(settings.kind) && inst.planner_started &&
           t - inst.started_iteration < settings.config.n_protect;
}

std::vector<MethodKind> initial_assignment(const PlannerSettings& settings, Rng& rng) {
    const int islands = settings.config.islands;
    if (islands < 1) throw ContractViolation("islands must be >= 1");
    if (settings.catalog.empty()) throw ContractViolation("catalog is empty");
    std::vector<MethodKind> pool = settings.catalog;
    if (settings.kind == PlannerKind::MD) {
        std::vector<MethodKind> explore;
        for (auto k : settings.catalog) {
            auto it = settings.classification.find(k);
            if (it != settings.classification.end() && it->second == MethodClass::Exploration) explore.push_back(k);
        }
        if (!explore.empty()) pool = std::move(explore);
    }
    std::vector<MethodKind> out(islands);
    for (int i = 0; i < islands; ++i)
        out[i] = settings.kind == PlannerKind::R ? settings.catalog[uniform_index(rng, settings.catalog.size())]
                                                 : pool[i % pool.size()];
    return out;
}

namespace {

struct View {
    const PlannerSettings& settings;
    const LedgerSnapshot& snap;
    int t;

    Features kind_window(MethodKind k) const {
        auto it = snap.kinds.find(k);
        return it == snap.kinds.end() ? Features{} : it->second.window;
    }
    const KindRecord* kind(MethodKind k) const {
        auto it = snap.kinds.find(k);
        return it == snap.kinds.end() ? nullptr : &it->second;
    }
    bool ever_run(MethodKind k) const {
        auto r = kind(k);
        return r && r->ever_run;
    }
    std::map<MethodKind, int> running() const {
        std::map<MethodKind, int> c;
        for (const auto& r : snap.alive) ++c[r.kind];
        return c;
    }
    std::vector<const InstanceRecord*> killable() const {
        std::vector<const InstanceRecord*> out;
        for (const auto& r : snap.alive)
            if (!is_protected(settings, r, t)) out.push_back(&r);
        return out;
    }
    MethodClass klass(MethodKind k) const {
        auto it = settings.classification.find(k);
        return it == settings.classification.end() ? MethodClass::Exploitation : it->second;
    }
};

/// Instance minimising (kind_value, instance_value, island).
template <class KindValue, class InstValue>
const InstanceRecord* argmin_instance(const std::vector<const InstanceRecord*>& cands, KindValue kv, InstValue iv) {
    const InstanceRecord* best = nullptr;
    std::tuple<double, double, int> key{};
    for (const auto* r : cands) {
        std::tuple<double, double, int> k{kv(r->kind), iv(*r), r->id.island};
        if (!best || k < key) {
            best = r;
            key = k;
        }
    }
    return best;
}

/// Catalog kind with the largest value; ties go to the earlier catalog entry.
template <class Value>
std::optional<MethodKind> argmax_kind(const std::vector<MethodKind>& kinds, Value v) {
    std::optional<MethodKind> best;
    double best_v = -kInf;
    for (auto k : kinds) {
        double x = v(k);
        if (std::isnan(x)) continue;
        if (!best || x > best_v) {
            best = k;
            best_v = x;
        }
    }
    return best;
}

double instance_af(const InstanceRecord& r) {
    if (r.window.af_count > 0) return r.window.average_fitness();
    return r.last_share_objective.value_or(kInf);
}

const InstanceRecord* random_of(const std::vector<const InstanceRecord*>& v, Rng& rng) {
    return v.empty() ? nullptr : v[uniform_index(rng, v.size())];
}

/// The policy's own notion of the least useful killable instance.
const InstanceRecord* least_useful(const View& view, const std::vector<const InstanceRecord*>& cands, Rng& rng) {
    auto none = [](MethodKind) { return 0.0; };
    auto window = [&](auto field) { return [field](const InstanceRecord& r) { return static_cast<double>(r.window.*field); }; };
    switch (view.settings.kind) {
        case PlannerKind::R:
        case PlannerKind::RG: return random_of(cands, rng);
        case PlannerKind::BH:
            return argmin_instance(cands, [&](MethodKind k) { return static_cast<double>(view.kind_window(k).helper); },
                                   window(&Features::helper));
        case PlannerKind::AF:
            return argmin_instance(cands, none, [](const InstanceRecord& r) { return -instance_af(r); });
        case PlannerKind::QM: return argmin_instance(cands, none, window(&Features::qm));
        case PlannerKind::BM: return argmin_instance(cands, none, window(&Features::qual));
        case PlannerKind::BC:
            return argmin_instance(
                cands,
                [&](MethodKind k) {
                    auto r = view.kind(k);
                    return r ? static_cast<double>(r->bc) : 0.0;
                },
                [](const InstanceRecord& r) { return static_cast<double>(r.bc); });
        default: return argmin_instance(cands, none, window(&Features::qi));
    }
}

PlanDecision replace(const InstanceRecord* victim, std::optional<MethodKind> start, std::string rule) {
    PlanDecision d;
    if (!victim || !start) {
        d.rule = std::move(rule);
        d.warning = !victim ? "no killable instance" : "no kind to start";
        return d;
    }
    d.kill = victim->id;
    d.start = start;
    d.rule = std::move(rule);
    return d;
}

PlanDecision noop(std::string rule, std::string warning = {}) {
    PlanDecision d;
    d.rule = std::move(rule);
    d.warning = std::move(warning);
    return d;
}

/// Least-recently-run kind among `kinds` (never run counts as oldest).
std::optional<MethodKind> least_recently_run(const View& view, const std::vector<MethodKind>& kinds) {
    std::optional<MethodKind> best;
    long best_t = 0;
    for (auto k : kinds) {
        auto r = view.kind(k);
        long when = (r && r->last_running_iteration) ? *r->last_running_iteration : -1000000;
        if (!r || !r->ever_run) when = -2000000;
        if (!best || when < best_t) {
            best = k;
            best_t = when;
        }
    }
    return best;
}

PlanDecision plan_random_guarded(const View& view, const std::vector<const InstanceRecord*>& cands, Rng& rng) {
    const auto& catalog = view.settings.catalog;
    const int floor = std::min<int>({view.settings.config.m_min, static_cast<int>(catalog.size()),
                                     static_cast<int>(view.snap.alive.size())});
    auto counts = view.running();
    const int distinct = static_cast<int>(counts.size());

    auto not_running_after = [&](const InstanceRecord* victim) {
        std::vector<MethodKind> out;
        for (auto k : catalog) {
            int c = counts.count(k) ? counts.at(k) : 0;
            if (victim && victim->kind == k) --c;
            if (c <= 0) out.push_back(k);
        }
        return out;
    };

    if (distinct < floor) {
        std::vector<const InstanceRecord*> dup;
        for (const auto* r : cands)
            if (counts[r->kind] >= 2) dup.push_back(r);
        const auto* victim = random_of(dup, rng);
        return replace(victim, least_recently_run(view, not_running_after(victim)), "diversity-floor");
    }
    const auto* victim = random_of(cands, rng);
    if (!victim) return noop("random", "no killable instance");
    MethodKind start = catalog[uniform_index(rng, catalog.size())];
    int after = distinct;
    if (counts[victim->kind] == 1 && start != victim->kind) --after;
    if (!counts.count(start)) ++after;
    if (after < floor) return replace(victim, least_recently_run(view, not_running_after(victim)), "diversity-floor");
    return replace(victim, start, "random");
}

}  // namespace

PlanDecision plan_step(const PlannerSettings& settings, const LedgerSnapshot& snap, Rng& rng) {
    const View view{settings, snap, snap.iteration};
    const int t = snap.iteration;
    const int T = settings.iterations();
    const auto& catalog = settings.catalog;
    if (catalog.empty()) throw ContractViolation("catalog is empty");

    switch (settings.kind) {
        case PlannerKind::Static: return noop("static");
        case PlannerKind::R: {
            const auto cands = view.killable();
            const auto* victim = random_of(cands, rng);
            if (!victim) return noop("random", "no instance to kill");
            return replace(victim, catalog[uniform_index(rng, catalog.size())], "random");
        }
        case PlannerKind::MD: {
            int e = 0;
            const int a = static_cast<int>(snap.alive.size());
            for (const auto& r : snap.alive)
                if (view.klass(r.kind) == MethodClass::Exploration) ++e;
            if (a == 0 || !(1.0 - static_cast<double>(t) / T < static_cast<double>(e) / a)) return noop("schedule");
            std::vector<const InstanceRecord*> cands;
            for (const auto* r : view.killable())
                if (view.klass(r->kind) == MethodClass::Exploration) cands.push_back(r);
            if (cands.empty()) return noop("schedule", "every exploration instance is protected");
            const auto* victim = argmin_instance(cands, [](MethodKind) { return 0.0; },
                                                 [](const InstanceRecord& r) { return static_cast<double>(r.window.qi); });
            std::vector<MethodKind> exploit;
            for (auto k : catalog)
                if (view.klass(k) == MethodClass::Exploitation) exploit.push_back(k);
            for (auto k : exploit)
                if (!view.ever_run(k)) return replace(victim, k, "schedule-not-run");
            auto start = argmax_kind(exploit, [&](MethodKind k) {
                auto r = view.kind(k);
                if (!r || r->cumulative.af_count == 0) return -kInf;
                return -r->cumulative.average_fitness();
            });
            return replace(victim, start, "schedule");
        }
        default: break;
    }

    if ((settings.kind == PlannerKind::BH || settings.kind == PlannerKind::BC) && t < settings.config.n_init)
        return noop("warm-up");

    auto cands = view.killable();
    if (settings.kind == PlannerKind::LQI) {
        const int patience = settings.config.n_patience;
        std::vector<const InstanceRecord*> idle;
        for (const auto* r : cands) {
            if (static_cast<int>(r->qi_history.size()) < patience) continue;
            if (std::all_of(r->qi_history.end() - patience, r->qi_history.end(), [](auto q) { return q == 0; }))
                idle.push_back(r);
        }
        if (idle.empty()) return noop("patience");
        cands = std::move(idle);
    }
    if (cands.empty()) return noop("policy", "every instance is protected");

    // A catalog kind that has never run takes precedence over the policy's own start choice.
    for (auto k : catalog) {
        if (view.ever_run(k)) continue;
        if (settings.kind == PlannerKind::RG) {
            auto counts = view.running();
            std::vector<const InstanceRecord*> dup;
            for (const auto* r : cands)
                if (counts[r->kind] >= 2) dup.push_back(r);
            return replace(random_of(dup.empty() ? cands : dup, rng), k, "not-run");
        }
        return replace(least_useful(view, cands, rng), k, "not-run");
    }

    if (settings.kind == PlannerKind::RG) return plan_random_guarded(view, cands, rng);

    const auto* victim = least_useful(view, cands, rng);
    if (settings.kind == PlannerKind::AF) {
        std::map<MethodKind, std::pair<double, int>> acc;
        for (const auto& r : snap.alive) {
            auto& [sum, n] = acc[r.kind];
            sum += instance_af(r);
            ++n;
        }
        std::vector<MethodKind> running;
        for (auto k : catalog)
            if (acc.count(k)) running.push_back(k);
        return replace(victim, argmax_kind(running, [&](MethodKind k) { return -(acc[k].first / acc[k].second); }),
                       "policy");
    }

    std::function<double(MethodKind)> value;
    switch (settings.kind) {
        case PlannerKind::BH: value = [&](MethodKind k) { return static_cast<double>(view.kind_window(k).helper); }; break;
        case PlannerKind::QM: value = [&](MethodKind k) { return static_cast<double>(view.kind_window(k).qm); }; break;
        case PlannerKind::BM: value = [&](MethodKind k) { return static_cast<double>(view.kind_window(k).qual); }; break;
        case PlannerKind::BC:
            value = [&](MethodKind k) {
                auto r = view.kind(k);
                return r ? static_cast<double>(r->bc) : 0.0;
            };
            break;
        default: value = [&](MethodKind k) { return static_cast<double>(view.kind_window(k).qi); }; break;
    }
    const auto start = argmax_kind(catalog, value);
    // Every kind scored zero: there is no "best" kind to duplicate, only a catalog-order tie.
    if (start && value(*start) <= 0.0) return noop("no-signal");
    return replace(victim, start, "policy");
}

}  // namespace hetero
