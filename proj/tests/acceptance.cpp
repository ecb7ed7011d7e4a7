// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include "hetero/experiment.hpp"
#include "hetero/methods.hpp"
#include "hetero/random.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

using namespace hetero;
namespace fs = std::filesystem;

namespace {

const fs::path kData = HETERO_TEST_DATA;

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& why) {
        if (!ok && pass) detail = why;
        pass = pass && ok;
    }
};

int g_failures = 0;

void criterion(const std::string& name, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++g_failures;
    std::ostringstream line;
    line << (o.pass ? "PASS " : "FAIL ") << name << " (" << std::fixed;
    line.precision(1);
    line << secs << " s)";
    if (!o.detail.empty()) line << ": " << o.detail;
    std::cout << line.str() << std::endl;
}

std::vector<std::pair<double, double>> read_coords(const fs::path& path) {
    std::ifstream in(path);
    std::string line;
    std::vector<std::pair<double, double>> pts;
    bool on = false;
    while (std::getline(in, line)) {
        if (line == "NODE_COORD_SECTION") {
            on = true;
            continue;
        }
        if (line == "EOF") break;
        if (!on) continue;
        std::istringstream ss(line);
        int id;
        double x, y;
        ss >> id >> x >> y;
        pts.emplace_back(x, y);
    }
    return pts;
}

std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(6);
    ss << v;
    return ss.str();
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------------------

Outcome operator_closure() {
    constexpr int kApplications = 10000;
    Outcome o;
    Rng g(2024);
    VcInstance graph{50, {}};
    for (int u = 0; u < 50; ++u)
        for (int v = u + 1; v < 50; ++v)
            if (coin(g, 0.08)) graph.edges.emplace_back(u, v);

    std::vector<std::shared_ptr<const Problem>> problems{
        std::make_shared<TspProblem>(load_tsplib(kData / "euclid50.tsp")),
        std::make_shared<BppProblem>(generate_bpp(200, 3)),
        std::make_shared<CoProblem>(CoFunction::shifted(CoKind::F04BucheRastrigin, 10, 4)),
        std::make_shared<VcProblem>(graph),
        std::make_shared<ParamProblem>(ParamSpace::random_forest(), std::make_shared<SurrogateEvaluator>()),
    };
    long checked = 0;
    for (const auto& p : problems) {
        const auto& spec = p->genome_spec();
        Rng rng(7);
        OperatorState st;
        auto check = [&](const Genome& x, const char* op) {
            ++checked;
            if (auto err = validate_genome(x, spec)) o.require(false, p->name() + " " + op + ": " + *err);
        };
        std::vector<Genome> pool;
        for (int i = 0; i < 8; ++i) pool.push_back(p->random_solution(rng));
        auto pick = [&]() -> Genome& { return pool[uniform_index(rng, pool.size())]; };
        for (int i = 0; i < kApplications; ++i) check(p->random_solution(rng), "random");
        Cursor cur;
        for (int i = 0; i < kApplications; ++i) {
            auto x = p->next_solution(cur, rng);
            if (!x) break;
            check(*x, "next");
        }
        for (int i = 0; i < kApplications; ++i) {
            auto& x = pick();
            x = p->unary(x, rng, st);
            p->note_outcome(st, coin(rng, 0.1));
            check(x, "unary");
        }
        for (int i = 0; i < kApplications; ++i) {
            auto& x = pick();
            x = p->mutation(x, rng, st);
            check(x, "mutation");
        }
        for (int i = 0; i < kApplications; ++i) {
            auto child = p->binary(pick(), pick(), rng);
            check(child, "binary");
            pick() = child;
        }
        for (int i = 0; i < kApplications; ++i) {
            auto child = p->ternary(pick(), pick(), pick(), 1.0, rng);
            check(child, "ternary");
            pick() = child;
        }
        if (!o.pass) return o;
    }
    o.detail = std::to_string(checked) + " genomes valid across 5 families, 4 encodings";
    return o;
}

Outcome oracle_equivalence() {
    Outcome o;
    MethodConfig cfg;
    for (const char* f : {"tsp7_a", "tsp7_b", "tsp7_c"}) {
        const auto path = kData / (std::string(f) + ".tsp");
        TspProblem tsp(load_tsplib(path));
        Rng rng(1);
        BruteForce bf(cfg, tsp, {0, 0}, rng);
        while (!bf.finished()) bf.step(rng);
        const double opt = oracle::tsp_optimum(read_coords(path));
        o.require(bf.best().objective == opt,
                  std::string(f) + ": brute force " + fmt(bf.best().objective) + " vs oracle " + fmt(opt));
    }
    for (const char* f : {"bpp5_a.txt", "bpp6_b.txt", "bpp7_c.txt", "bpp7_d.txt"}) {
        const auto inst = load_volume_list(kData / f);
        ExperimentConfig x;
        x.problem = std::make_shared<BppProblem>(inst);
        x.catalog = {MethodKind::EA};
        x.planning.islands = 1;
        x.planning.iterations = 1;
        x.clock.steps_per_iteration = 100000;
        x.clock.steps_per_migration = 1000;
        x.seed = 11;
        auto r = run_experiment(x);
        o.require(!r.aborted && r.best, std::string(f) + ": run aborted");
        if (!o.pass) return o;
        const int bins = first_fit_bins(inst, std::get<Permutation>(r.best->genome).order);
        const int opt = oracle::bpp_optimum(inst.volumes);
        o.require(bins == opt, std::string(f) + ": EA " + std::to_string(bins) + " bins vs oracle " + std::to_string(opt));
    }
    if (o.pass) o.detail = "3 TSP and 4 BPP fixtures match the exhaustive oracles";
    return o;
}

Outcome ternary_reference() {
    Outcome o;
    Rng rng(31337);
    for (int i = 0; i < 1000; ++i) {
        const int n = uniform_int(rng, 1, 60);
        auto a = perm::random(n, rng), b = perm::random(n, rng), c = perm::random(n, rng);
        o.require(perm::ternary(a, b, c).order == oracle::perm_ternary(a.order, b.order, c.order),
                  "mismatch on triple " + std::to_string(i));
        if (!o.pass) return o;
    }
    o.detail = "1000 random triples identical";
    return o;
}

Outcome determinism() {
    Outcome o;
    const auto dir = fs::temp_directory_path() / "hetero_acceptance_determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    for (auto planner : {PlannerKind::Static, PlannerKind::R, PlannerKind::QI, PlannerKind::BM}) {
        ExperimentConfig x;
        x.problem = std::make_shared<TspProblem>(load_tsplib(kData / "euclid50.tsp"));
        x.planner = planner;
        x.planning.iterations = 20;
        x.clock.steps_per_iteration = 200;
        x.clock.steps_per_migration = 20;
        x.seed = 99;
        const std::string name(to_string(planner));
        write_events(dir / (name + "-1.jsonl"), run_experiment(x).events);
        write_events(dir / (name + "-2.jsonl"), run_experiment(x).events);
        const auto a = slurp(dir / (name + "-1.jsonl")), b = slurp(dir / (name + "-2.jsonl"));
        o.require(!a.empty() && a == b, name + ": event logs differ");
    }
    fs::remove_all(dir);
    if (o.pass) o.detail = "Static, P-R, P-QI, P-BM logs byte-identical";
    return o;
}

/// Checks the planner contract from nothing but the event log.
Outcome planner_invariants() {
    Outcome o;
    const PlannerConfig defaults;
    int runs = 0, kills = 0;
    const std::vector<MethodKind> catalog(std::begin(kAllKinds), std::end(kAllKinds));
    for (auto planner : {PlannerKind::Static, PlannerKind::R, PlannerKind::RG, PlannerKind::MD, PlannerKind::BH,
                         PlannerKind::AF, PlannerKind::QI, PlannerKind::QM, PlannerKind::BM, PlannerKind::BC,
                         PlannerKind::LQI}) {
        for (std::uint64_t seed : {1, 2}) {
            ExperimentConfig x;
            x.problem = std::make_shared<TspProblem>(load_tsplib(kData / "euclid50.tsp"));
            x.planner = planner;
            x.planning.iterations = 50;
            x.clock.steps_per_iteration = 40;
            x.clock.steps_per_migration = 10;
            x.methods.de_pop = 8;
            x.seed = seed;
            const auto r = run_experiment(x);
            const std::string tag = std::string(to_string(planner)) + " seed " + std::to_string(seed);
            o.require(!r.aborted, tag + ": aborted: " + r.abort_reason);
            ++runs;

            int window = 0;                              // window currently being filled
            std::map<MethodInstanceId, MethodKind> alive;
            std::map<MethodInstanceId, int> started;     // planner iteration that started it, -1 initial
            std::map<MethodInstanceId, std::map<int, int>> improvements;   // instance -> window -> count
            std::optional<double> best;
            int last_boundary = -1;
            std::map<int, int> kills_after;
            for (const auto& e : r.events) {
                if (auto* s = std::get_if<event::Start>(&e.body)) {
                    alive[s->instance] = s->kind;
                    started[s->instance] = s->initial ? -1 : s->iteration;
                } else if (auto* sh = std::get_if<event::Share>(&e.body)) {
                    if (!best || sh->objective < *best) {
                        best = sh->objective;
                        ++improvements[sh->sender][window];
                    }
                } else if (auto* b = std::get_if<event::IterationBoundary>(&e.body)) {
                    last_boundary = b->iteration;
                    window = b->iteration + 1;
                    if (planner == PlannerKind::RG && b->iteration >= 1) {
                        std::set<MethodKind> distinct;
                        for (const auto& [id, k] : alive) distinct.insert(k);
                        const int floor = std::min<int>({defaults.m_min, static_cast<int>(catalog.size()),
                                                         static_cast<int>(alive.size())});
                        o.require(static_cast<int>(distinct.size()) >= floor,
                                  tag + ": diversity " + std::to_string(distinct.size()) + " at iteration " +
                                      std::to_string(b->iteration));
                    }
                    o.require(static_cast<int>(alive.size()) == defaults.islands, tag + ": island count changed");
                } else if (auto* k = std::get_if<event::Kill>(&e.body)) {
                    const int t = last_boundary;
                    ++kills;
                    o.require(++kills_after[t] <= 1, tag + ": two replacements at iteration " + std::to_string(t));
                    if (uses_protection(planner) && started[k->instance] >= 0)
                        o.require(t - started[k->instance] >= defaults.n_protect,
                                  tag + ": protected instance " + k->instance.str() + " killed at " + std::to_string(t));
                    if (planner == PlannerKind::LQI) {
                        // Alive for the whole patience span and no improvement in any of its windows.
                        o.require(started[k->instance] <= t - defaults.n_patience,
                                  tag + ": " + k->instance.str() + " killed before a full patience span");
                        for (int w = t - defaults.n_patience + 1; w <= t; ++w)
                            o.require(improvements[k->instance][w] == 0,
                                      tag + ": " + k->instance.str() + " improved in window " + std::to_string(w) +
                                          " but was killed at " + std::to_string(t));
                    }
                    alive.erase(k->instance);
                }
            }
            if (planner == PlannerKind::Static) o.require(kills_after.empty(), tag + ": static planner replaced");
            if (planner == PlannerKind::R) o.require(kills_after.size() == 50, tag + ": P-R did not replace every iteration");
            if (!o.pass) return o;
        }
    }
    o.detail = std::to_string(runs) + " runs of T=50, " + std::to_string(kills) + " replacements checked";
    return o;
}

struct BudgetResult {
    double heterogeneous = 0.0;
    std::map<MethodKind, double> homogeneous;
};

/// Median finals over seeds for Static heterogeneous and every single-kind portfolio.
BudgetResult portfolio_medians(std::shared_ptr<const Problem> problem, const std::vector<MethodKind>& kinds,
                               bool with_heterogeneous) {
    const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    auto finals = [&](std::vector<MethodKind> catalog) {
        std::vector<double> v;
        for (auto seed : seeds) {
            ExperimentConfig x;
            x.problem = problem;
            x.catalog = catalog;
            x.planner = PlannerKind::Static;
            x.planning.islands = 16;
            x.planning.iterations = 25;
            x.clock.steps_per_iteration = 2000;
            x.clock.steps_per_migration = 200;
            x.seed = seed;
            auto r = run_experiment(x);
            if (r.aborted || !r.best) throw std::runtime_error("run aborted: " + r.abort_reason);
            v.push_back(r.best->objective);
        }
        return median(v);
    };
    BudgetResult out;
    if (with_heterogeneous) out.heterogeneous = finals({std::begin(kAllKinds), std::end(kAllKinds)});
    for (auto k : kinds) out.homogeneous[k] = finals({k});
    return out;
}

Outcome heterogeneity_closeness() {
    Outcome o;
    const std::vector<MethodKind> all(std::begin(kAllKinds), std::end(kAllKinds));
    auto tsp = portfolio_medians(std::make_shared<TspProblem>(load_tsplib(kData / "euclid50.tsp")), all, true);
    double best_h = 1e300;
    MethodKind best_k = MethodKind::RS;
    for (auto [k, v] : tsp.homogeneous)
        if (v < best_h) {
            best_h = v;
            best_k = k;
        }
    const double gap = (tsp.heterogeneous - best_h) / best_h;
    o.require(gap <= 0.15, "TSP heterogeneous median " + fmt(tsp.heterogeneous) + " is " + fmt(100 * gap) +
                               "% above best homogeneous " + std::string(to_string(best_k)) + " " + fmt(best_h));

    auto f14 = portfolio_medians(std::make_shared<CoProblem>(CoFunction::shifted(CoKind::F14DifferentPowers, 10, 1)), {},
                                 true);
    o.require(f14.heterogeneous <= 1e-3, "COf14 heterogeneous median " + fmt(f14.heterogeneous) + " > 1e-3");
    if (o.pass)
        o.detail = "TSP median " + fmt(tsp.heterogeneous) + " vs best homogeneous " + std::string(to_string(best_k)) +
                   " " + fmt(best_h) + " (" + fmt(100 * gap) + "%); COf14 median " + fmt(f14.heterogeneous);
    return o;
}

Outcome rosenbrock_desk_check() {
    Outcome o;
    auto r = portfolio_medians(std::make_shared<CoProblem>(CoFunction::shifted(CoKind::F08Rosenbrock, 10, 1)),
                               {MethodKind::HC, MethodKind::TS, MethodKind::EA}, false);
    double best = 1e300;
    std::string detail;
    for (auto [k, v] : r.homogeneous) {
        best = std::min(best, v);
        detail += std::string(detail.empty() ? "" : ", ") + std::string(to_string(k)) + " " + fmt(v);
    }
    o.require(best <= 0.1, "best median " + fmt(best) + " > 0.1 (" + detail + ")");
    if (o.pass) o.detail = "medians " + detail;
    return o;
}

Outcome report_correctness() {
    Outcome o;
    const auto R = kData / "reports";
    auto three = report_table({R / "three"});
    o.require(three.size() == 1 && three[0].runs == 3 && three[0].mean == 2.0 && three[0].min == 1.0 &&
                  three[0].max == 3.0,
              "finals {3,1,2} do not give mean 2, min 1, max 3");
    auto single = report_table({R / "single"});
    o.require(single[0].mean == 4.25 && single[0].min == 4.25 && single[0].max == 4.25, "single run stats wrong");
    auto nine = report_table({R / "nine"});
    o.require(render_table_csv(nine) == "configuration,benchmark,runs,mean,min,max\nB,tsp-euclid50,9,9.777778,6.000000,13.250000\n",
              "nine-run table differs from the hand computation");
    auto pool = report_quartiles({R / "pool"});
    o.require(pool.threshold == 2.0 && pool.counts == std::vector<std::pair<std::string, int>>{{"X", 1}, {"Y", 1}},
              "pool 1..8 does not give threshold 2 with one run each");
    auto worst = report_quartiles({R / "worst"});
    o.require(worst.counts == std::vector<std::pair<std::string, int>>{{"L", 2}, {"H", 0}},
              "all-worst configuration is not counted 0");
    auto cap = report_quartiles({R / "top9_t", R / "top9_u"});
    o.require(cap.threshold == 9.0 && cap.counts == std::vector<std::pair<std::string, int>>{{"T", 9}, {"U", 0}},
              "nine-run cap fixture wrong");
    bool mismatch = false;
    try {
        report_table({R / "three", R / "other"});
    } catch (const ContractViolation&) {
        mismatch = true;
    }
    o.require(mismatch, "mismatched benchmarks accepted");
    if (o.pass) o.detail = "table and quartile fixtures match hand-computed values";
    return o;
}

}  // namespace

int main() {
    criterion("operator closure", operator_closure);
    criterion("oracle equivalence", oracle_equivalence);
    criterion("ternary permutation reference", ternary_reference);
    criterion("virtual-time determinism", determinism);
    criterion("planner invariants", planner_invariants);
    criterion("heterogeneity closeness", heterogeneity_closeness);
    criterion("rosenbrock desk check", rosenbrock_desk_check);
    criterion("report correctness", report_correctness);
    std::cout << (g_failures == 0 ? "all criteria passed" : std::to_string(g_failures) + " criteria failed") << std::endl;
    return g_failures == 0 ? 0 : 1;
}
