#include "hetero/experiment.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <iomanip>
#include <mutex>
#include <set>
#include <sstream>

namespace hetero {

namespace pt = boost::property_tree;
namespace fs = std::filesystem;

std::string ProblemSpec::benchmark() const {
    if (family == "co") return "co-" + function + "-" + std::to_string(dimension) + "d";
    if (family == "ml") return "ml-" + evaluator;
    if (family == "bpp" && instance.empty())
        return "bpp-gen" + std::to_string(generate_items) + "-s" + std::to_string(generate_seed);
    return family + "-" + instance.stem().string();
}

namespace {

const std::map<std::string, std::set<std::string>> kKnownKeys = {
    {"problem",
     {"family", "instance", "generate_items", "generate_seed", "function", "dimension", "shift_seed", "evaluator",
      "command", "timeout_ms"}},
    {"portfolio", {"catalog", "exploration"}},
    {"planner", {"name", "iterations", "islands", "runs", "n_init", "n_protect", "n_patience", "m_min", "top_n"}},
    {"clock", {"mode", "steps_per_iteration", "steps_per_migration", "iteration_ms", "migration_ms"}},
    {"methods",
     {"hc_neighbors", "ea_pop", "ea_mutation_rate", "ea_crossover_rate", "ts_tabu_size", "sa_temperature",
      "sa_cooling_rate", "de_pop", "de_f"}},
    {"run", {"seed", "seeds", "output", "name", "jobs"}},
};

template <class T>
T get(const pt::ptree& tree, const std::string& key, T fallback) {
    auto v = tree.get_optional<std::string>(key);
    if (!v) return fallback;
    std::istringstream ss(*v);
    T out;
    if (!(ss >> out) || !(ss >> std::ws).eof()) throw ContractViolation("bad value for " + key + ": '" + *v + "'");
    return out;
}

std::string get_str(const pt::ptree& tree, const std::string& key, std::string fallback) {
    auto v = tree.get_optional<std::string>(key);
    return v ? *v : fallback;
}

std::vector<std::uint64_t> parse_seeds(std::string text) {
    std::replace(text.begin(), text.end(), ',', ' ');
    std::istringstream ss(text);
    std::vector<std::uint64_t> out;
    std::string tok;
    while (ss >> tok) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoull(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ContractViolation("bad seed '" + tok + "'");
        }
    }
    return out;
}

}  // namespace

FileConfig parse_config(std::istream& in, const fs::path& base_dir, const std::optional<std::string>& output_root_env) {
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ParseError(e.message(), static_cast<int>(e.line()));
    }
    for (const auto& [section, body] : tree) {
        auto known = kKnownKeys.find(section);
        if (known == kKnownKeys.end()) throw ContractViolation("unknown section [" + section + "]");
        for (const auto& [key, value] : body)
            if (!known->second.count(key)) throw ContractViolation("unknown key '" + key + "' in [" + section + "]");
    }
    const pt::ptree empty;
    auto section = [&](const char* name) -> const pt::ptree& {
        auto child = tree.get_child_optional(name);
        return child ? *child : empty;
    };

    FileConfig cfg;
    const auto& prob = section("problem");
    auto& p = cfg.problem;
    p.family = get_str(prob, "family", "");
    if (p.family.empty()) throw ContractViolation("[problem] family is required");
    if (auto inst = prob.get_optional<std::string>("instance")) {
        fs::path path(*inst);
        p.instance = path.is_absolute() ? path : base_dir / path;
    }
    p.generate_items = get<int>(prob, "generate_items", 0);
    p.generate_seed = get<std::uint64_t>(prob, "generate_seed", 1);
    p.function = get_str(prob, "function", p.function);
    p.dimension = get<int>(prob, "dimension", p.dimension);
    if (prob.get_optional<std::string>("shift_seed")) p.shift_seed = get<std::uint64_t>(prob, "shift_seed", 0);
    p.evaluator = get_str(prob, "evaluator", p.evaluator);
    p.command = get_str(prob, "command", "");
    p.timeout_ms = get<int>(prob, "timeout_ms", p.timeout_ms);

    auto& x = cfg.experiment;
    const auto& port = section("portfolio");
    if (auto cat = port.get_optional<std::string>("catalog")) x.catalog = parse_kind_list(*cat);
    if (auto ex = port.get_optional<std::string>("exploration")) {
        for (auto& [k, c] : x.classification) c = MethodClass::Exploitation;
        for (auto k : parse_kind_list(*ex)) x.classification[k] = MethodClass::Exploration;
    }

    const auto& plan = section("planner");
    x.planner = parse_planner(get_str(plan, "name", "Static"));
    auto& pc = x.planning;
    pc.iterations = get(plan, "iterations", pc.iterations);
    pc.islands = get(plan, "islands", pc.islands);
    pc.runs = get(plan, "runs", pc.runs);
    pc.n_init = get(plan, "n_init", pc.n_init);
    pc.n_protect = get(plan, "n_protect", pc.n_protect);
    pc.n_patience = get(plan, "n_patience", pc.n_patience);
    pc.m_min = get(plan, "m_min", pc.m_min);
    pc.top_n = get(plan, "top_n", pc.top_n);

    const auto& clk = section("clock");
    const auto mode = get_str(clk, "mode", "virtual");
    if (mode == "virtual") {
        x.clock.mode = ClockMode::Virtual;
    } else if (mode == "wall") {
        x.clock.mode = ClockMode::Wall;
    } else {
        throw ContractViolation("[clock] mode must be virtual or wall");
    }
    x.clock.steps_per_iteration = get(clk, "steps_per_iteration", x.clock.steps_per_iteration);
    x.clock.steps_per_migration = get(clk, "steps_per_migration", x.clock.steps_per_migration);
    x.clock.iteration_length = std::chrono::milliseconds(get<long>(clk, "iteration_ms", x.clock.iteration_length.count()));
    x.clock.migration_interval = std::chrono::milliseconds(get<long>(clk, "migration_ms", x.clock.migration_interval.count()));

    const auto& m = section("methods");
    auto& mc = x.methods;
    mc.hc_neighbors = get(m, "hc_neighbors", mc.hc_neighbors);
    mc.ea_pop = get(m, "ea_pop", mc.ea_pop);
    mc.ea_mutation_rate = get(m, "ea_mutation_rate", mc.ea_mutation_rate);
    mc.ea_crossover_rate = get(m, "ea_crossover_rate", mc.ea_crossover_rate);
    mc.ts_tabu_size = get(m, "ts_tabu_size", mc.ts_tabu_size);
    mc.sa_temperature = get(m, "sa_temperature", mc.sa_temperature);
    mc.sa_cooling_rate = get(m, "sa_cooling_rate", mc.sa_cooling_rate);
    mc.de_pop = get(m, "de_pop", mc.de_pop);
    mc.de_f = get(m, "de_f", mc.de_f);

    const auto& run = section("run");
    if (auto s = run.get_optional<std::string>("seeds")) {
        cfg.seeds = parse_seeds(*s);
        if (static_cast<int>(cfg.seeds.size()) != pc.runs)
            throw ContractViolation("seeds lists " + std::to_string(cfg.seeds.size()) + " values but runs = " +
                                    std::to_string(pc.runs));
    } else {
        const auto base = get<std::uint64_t>(run, "seed", 1);
        for (int i = 0; i < pc.runs; ++i) cfg.seeds.push_back(base + static_cast<std::uint64_t>(i));
    }
    if (std::set<std::uint64_t>(cfg.seeds.begin(), cfg.seeds.end()).size() != cfg.seeds.size())
        throw ContractViolation("seeds must be distinct");

    fs::path root = output_root_env && !output_root_env->empty() ? fs::path(*output_root_env) : fs::path("runs");
    if (auto out = run.get_optional<std::string>("output")) {
        fs::path o(*out);
        root = o.is_absolute() ? o : root / o;
    }
    cfg.output_root = root;
    cfg.name = get_str(run, "name", p.benchmark() + "-" + std::string(to_string(x.planner)));
    if (cfg.name.empty() || cfg.name.find_first_of(",/\n") != std::string::npos)
        throw ContractViolation("[run] name must be non-empty and free of ',' and '/'");
    cfg.jobs = get(run, "jobs", 1);
    if (cfg.jobs < 1) throw ContractViolation("[run] jobs must be >= 1");

    x.methods.validate();
    x.planning.validate(x.catalog.size());
    x.clock.validate();
    return cfg;
}

FileConfig load_config(const fs::path& path, const std::optional<std::string>& output_root_env) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    try {
        return parse_config(in, path.parent_path(), output_root_env);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

std::shared_ptr<const Problem> build_problem(const ProblemSpec& spec) {
    auto need_instance = [&] {
        if (spec.instance.empty()) throw ContractViolation("[problem] instance is required for " + spec.family);
        if (!fs::exists(spec.instance)) throw ContractViolation("instance file not found: " + spec.instance.string());
    };
    const std::string label = spec.benchmark();
    if (spec.family == "tsp") {
        need_instance();
        return std::make_shared<TspProblem>(load_tsplib(spec.instance), label);
    }
    if (spec.family == "bpp") {
        if (spec.generate_items > 0) return std::make_shared<BppProblem>(generate_bpp(spec.generate_items, spec.generate_seed), label);
        need_instance();
        return std::make_shared<BppProblem>(load_volume_list(spec.instance), label);
    }
    if (spec.family == "vc") {
        need_instance();
        return std::make_shared<VcProblem>(load_dimacs(spec.instance), label);
    }
    if (spec.family == "co") {
        const auto kind = parse_co_kind(spec.function);
        if (spec.dimension < 2) throw ContractViolation("[problem] dimension must be >= 2");
        CoFunction fn;
        if (spec.shift_seed) {
            fn = CoFunction::shifted(kind, spec.dimension, *spec.shift_seed);
        } else {
            fn.kind = kind;
            fn.dimension = spec.dimension;
        }
        return std::make_shared<CoProblem>(fn);
    }
    if (spec.family == "ml") {
        std::shared_ptr<ParamEvaluator> eval;
        if (spec.evaluator == "surrogate") {
            eval = std::make_shared<SurrogateEvaluator>();
        } else if (spec.evaluator == "external") {
            if (spec.command.empty()) throw ContractViolation("[problem] command is required for the external evaluator");
            if (spec.timeout_ms < 1) throw ContractViolation("[problem] timeout_ms must be >= 1");
            eval = std::make_shared<ExternalEvaluator>(spec.command, std::chrono::milliseconds(spec.timeout_ms));
        } else {
            throw ContractViolation("[problem] evaluator must be surrogate or external");
        }
        return std::make_shared<ParamProblem>(ParamSpace::random_forest(), eval, label);
    }
    throw ContractViolation("unknown problem family '" + spec.family + "'");
}

void validate_config(const FileConfig& cfg) {
    auto x = cfg.experiment;
    x.problem = build_problem(cfg.problem);
    x.validate();
}

// ---------------------------------------------------------------------------
// Batch runs
// ---------------------------------------------------------------------------

namespace {

void write_result(const fs::path& path, const RunResult& r, const Problem& problem, std::uint64_t seed) {
    nlohmann::ordered_json j;
    j["seed"] = seed;
    j["final_best"] = r.best ? nlohmann::ordered_json(r.best->objective) : nlohmann::ordered_json(nullptr);
    j["genome"] = r.best ? nlohmann::ordered_json(format_genome(r.best->genome, problem.genome_spec()))
                         : nlohmann::ordered_json(nullptr);
    j["evaluations"] = r.total_evaluations;
    j["aborted"] = r.aborted;
    if (r.aborted) j["abort_reason"] = r.abort_reason;
    std::ofstream out(path);
    out << j.dump(2) << '\n';
}

}  // namespace

fs::path run_batch(FileConfig cfg, std::ostream& progress) {
    cfg.experiment.problem = build_problem(cfg.problem);
    cfg.experiment.validate();
    const fs::path dir = cfg.output_root / cfg.name;
    fs::create_directories(dir);

    const int runs = static_cast<int>(cfg.seeds.size());
    std::vector<SummaryRow> rows(runs);
    std::mutex progress_mu;
    auto one = [&](int k) {
        auto x = cfg.experiment;
        x.seed = cfg.seeds[k];
        RunResult r = run_experiment(x);
        const std::string sub = "run-" + std::to_string(k + 1);
        fs::create_directories(dir / sub);
        write_events(dir / sub / "events.jsonl", r.events);
        write_planner_log(dir / sub / "planner.jsonl", r.planner);
        write_trace(dir / sub / "trace.csv", r.trace, x.catalog);
        write_result(dir / sub / "result.json", r, *x.problem, x.seed);
        SummaryRow& row = rows[k];
        row.run = k + 1;
        row.seed = x.seed;
        row.configuration = cfg.name;
        row.planner = std::string(to_string(x.planner));
        row.benchmark = cfg.problem.benchmark();
        row.final_best = r.best ? r.best->objective : std::numeric_limits<double>::infinity();
        row.evaluations = r.total_evaluations;
        row.aborted = r.aborted || !r.best;
        row.events = sub + "/events.jsonl";
        std::lock_guard lock(progress_mu);
        progress << "run " << row.run << "/" << runs << " seed " << row.seed << ": best " << format_real(row.final_best)
                 << (row.aborted ? " (aborted: " + r.abort_reason + ")" : "") << '\n';
    };

    std::vector<std::future<void>> pending;
    for (int k = 0; k < runs; ++k) {
        if (static_cast<int>(pending.size()) >= cfg.jobs) {
            pending.front().get();
            pending.erase(pending.begin());
        }
        pending.push_back(std::async(std::launch::async, one, k));
    }
    for (auto& f : pending) f.get();
    write_summary(dir / "summary.csv", rows);
    return dir;
}

void write_summary(const fs::path& path, const std::vector<SummaryRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "run,seed,configuration,planner,benchmark,final_best,evaluations,aborted,events\n";
    for (const auto& r : rows)
        out << r.run << ',' << r.seed << ',' << r.configuration << ',' << r.planner << ',' << r.benchmark << ','
            << format_real(r.final_best) << ',' << r.evaluations << ',' << (r.aborted ? 1 : 0) << ',' << r.events
            << '\n';
}

std::vector<SummaryRow> read_summary(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    std::string line;
    std::getline(in, line);
    if (line.rfind("run,seed,configuration,planner,benchmark,final_best", 0) != 0)
        throw ParseError(path.string() + ": unexpected header", 1);
    std::vector<SummaryRow> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 9) throw ParseError(path.string() + ": expected 9 fields", lineno);
        try {
            SummaryRow r;
            r.run = std::stoi(f[0]);
            r.seed = std::stoull(f[1]);
            r.configuration = f[2];
            r.planner = f[3];
            r.benchmark = f[4];
            r.final_best = std::stod(f[5]);
            r.evaluations = std::stoull(f[6]);
            r.aborted = f[7] == "1";
            r.events = f[8];
            rows.push_back(std::move(r));
        } catch (const std::exception&) {
            throw ParseError(path.string() + ": malformed number", lineno);
        }
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

namespace {

/// Completed rows of every directory, checked to share one benchmark.
std::vector<SummaryRow> collect(const std::vector<fs::path>& dirs, std::string& benchmark) {
    if (dirs.empty()) throw ContractViolation("no run directories given");
    std::vector<SummaryRow> all;
    for (const auto& d : dirs) {
        for (auto& r : read_summary(d / "summary.csv")) {
            if (benchmark.empty()) benchmark = r.benchmark;
            if (r.benchmark != benchmark)
                throw ContractViolation("mismatched benchmarks: " + benchmark + " vs " + r.benchmark + " in " + d.string());
            if (!r.aborted) all.push_back(std::move(r));
        }
    }
    return all;
}

std::string fixed(double v) {
    std::ostringstream ss;
    ss << std::setprecision(6) << std::fixed << v;
    return ss.str();
}

}  // namespace

std::vector<TableRow> report_table(const std::vector<fs::path>& run_dirs) {
    std::string benchmark;
    const auto rows = collect(run_dirs, benchmark);
    std::vector<TableRow> out;
    std::map<std::string, std::size_t> slot;
    std::vector<std::vector<double>> finals;
    for (const auto& r : rows) {
        auto [it, fresh] = slot.emplace(r.configuration, out.size());
        if (fresh) {
            out.push_back(TableRow{r.configuration, r.benchmark, 0, 0, 0, 0});
            finals.emplace_back();
        }
        finals[it->second].push_back(r.final_best);
    }
    if (out.empty()) throw ContractViolation("no completed runs");
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto& v = finals[i];
        double sum = 0.0;
        for (double x : v) sum += x;
        out[i].runs = static_cast<int>(v.size());
        out[i].mean = sum / static_cast<double>(v.size());
        out[i].min = *std::min_element(v.begin(), v.end());
        out[i].max = *std::max_element(v.begin(), v.end());
    }
    return out;
}

std::string render_table_text(const std::vector<TableRow>& rows) {
    std::ostringstream out;
    out << "# final objective over runs: mean [min, max]\n";
    std::size_t w = std::string("configuration").size();
    for (const auto& r : rows) w = std::max(w, r.configuration.size());
    out << std::left << std::setw(static_cast<int>(w)) << "configuration" << "  runs  mean  [min, max]\n";
    for (const auto& r : rows)
        out << std::left << std::setw(static_cast<int>(w)) << r.configuration << "  " << r.runs << "  " << fixed(r.mean)
            << "  [" << fixed(r.min) << ", " << fixed(r.max) << "]\n";
    return out.str();
}

std::string render_table_csv(const std::vector<TableRow>& rows) {
    std::ostringstream out;
    out << "configuration,benchmark,runs,mean,min,max\n";
    for (const auto& r : rows)
        out << r.configuration << ',' << r.benchmark << ',' << r.runs << ',' << fixed(r.mean) << ',' << fixed(r.min)
            << ',' << fixed(r.max) << '\n';
    return out.str();
}

double nearest_rank(std::vector<double> pool, double pct) {
    if (pool.empty()) throw ContractViolation("empty pool");
    if (!(pct > 0.0 && pct <= 100.0)) throw ContractViolation("percentile must lie in (0, 100]");
    std::sort(pool.begin(), pool.end());
    // Integer arithmetic on the rank keeps 25% of 8 at exactly 2.
    const auto n = static_cast<long double>(pool.size());
    auto rank = static_cast<std::size_t>(std::ceil(static_cast<long double>(pct) / 100.0L * n));
    rank = std::clamp<std::size_t>(rank, 1, pool.size());
    return pool[rank - 1];
}

QuartileReport report_quartiles(const std::vector<fs::path>& run_dirs, const std::vector<std::string>& only) {
    QuartileReport rep;
    const auto rows = collect(run_dirs, rep.benchmark);
    std::vector<double> pool;
    for (const auto& r : rows) pool.push_back(r.final_best);
    if (pool.empty()) throw ContractViolation("empty pool");
    rep.pool_size = pool.size();
    rep.threshold = nearest_rank(pool, 25.0);
    std::map<std::string, std::size_t> slot;
    for (const auto& r : rows) {
        if (!only.empty() && std::find(only.begin(), only.end(), r.configuration) == only.end()) continue;
        auto [it, fresh] = slot.emplace(r.configuration, rep.counts.size());
        if (fresh) rep.counts.emplace_back(r.configuration, 0);
        if (r.final_best <= rep.threshold) ++rep.counts[it->second].second;
    }
    for (const auto& name : only)
        if (!slot.count(name)) throw ContractViolation("no runs for configuration '" + name + "'");
    return rep;
}

std::string render_quartiles_text(const QuartileReport& r) {
    std::ostringstream out;
    out << "# top quartile: nearest-rank 25th percentile of " << r.pool_size << " pooled finals = "
        << format_real(r.threshold) << "\n";
    for (const auto& [name, n] : r.counts) out << name << "  " << n << '\n';
    return out.str();
}

std::string render_quartiles_csv(const QuartileReport& r) {
    std::ostringstream out;
    out << "configuration,benchmark,pool,threshold,top_quartile_runs\n";
    for (const auto& [name, n] : r.counts)
        out << name << ',' << r.benchmark << ',' << r.pool_size << ',' << format_real(r.threshold) << ',' << n << '\n';
    return out.str();
}

}  // namespace hetero
