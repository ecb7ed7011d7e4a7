#include "hetero/runtime.hpp"
#include "hetero/methods.hpp"
#include "hetero/random.hpp"

#include <json.hpp>

#include <atomic>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <future>
#include <limits>
#include <mutex>
#include <thread>

namespace hetero {

void ClockConfig::validate() const {
    if (mode == ClockMode::Virtual) {
        if (steps_per_iteration < 1 || steps_per_migration < 1)
            throw ContractViolation("step budgets must be >= 1");
        if (steps_per_iteration % steps_per_migration != 0)
            throw ContractViolation("steps per iteration must be a multiple of steps per migration");
    } else {
        if (iteration_length.count() < 1 || migration_interval.count() < 1)
            throw ContractViolation("wall-clock intervals must be positive");
    }
}

void ExperimentConfig::validate() const {
    if (!problem) throw ContractViolation("experiment has no problem");
    methods.validate();
    planning.validate(catalog.size());
    clock.validate();
    for (auto k : catalog)
        if (!classification.count(k))
            throw ContractViolation("kind " + std::string(to_string(k)) + " has no exploration/exploitation class");
}

PlannerSettings ExperimentConfig::planner_settings() const {
    PlannerSettings s;
    s.kind = planner;
    s.catalog = catalog;
    s.classification = classification;
    s.config = planning;
    return s;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::unique_ptr<Method> spawn(const ExperimentConfig& cfg, MethodKind kind, MethodInstanceId id, Rng& rng,
                              const std::optional<EvaluatedSolution>& seed) {
    auto m = make_method(kind, cfg.methods, *cfg.problem, id, rng);
    if (seed) m->receive(Migrant{seed->origin, kind, *seed}, /*count_help=*/false);
    return m;
}

std::map<MethodKind, int> kind_counts(const LedgerSnapshot& snap) {
    std::map<MethodKind, int> c;
    for (const auto& r : snap.alive) ++c[r.kind];
    return c;
}

// ---------------------------------------------------------------------------
// Virtual time: one thread, islands advance in lockstep.
// ---------------------------------------------------------------------------

class VirtualRun {
public:
    VirtualRun(const ExperimentConfig& cfg, RunResult& out)
        : cfg_(cfg), settings_(cfg.planner_settings()), out_(out), ledger_(cfg.planning.top_n, cfg.planning.n_patience) {}

    void run() {
        Rng master(cfg_.seed);
        planner_rng_ = fork(master);
        const auto kinds = initial_assignment(settings_, planner_rng_);
        islands_.resize(kinds.size());
        for (std::size_t i = 0; i < kinds.size(); ++i) islands_[i].rng = fork(master);
        for (std::size_t i = 0; i < kinds.size(); ++i) {
            auto& isl = islands_[i];
            MethodInstanceId id{static_cast<int>(i), 0};
            isl.method = spawn(cfg_, kinds[i], id, isl.rng, std::nullopt);
            log(event::Start{id, kinds[i], -1, true});
        }

        const int S = cfg_.clock.steps_per_iteration;
        const int G = cfg_.clock.steps_per_migration;
        for (int t = 0; t < cfg_.planning.iterations; ++t) {
            for (int s = 1; s <= S; ++s) {
                ++now_;
                for (auto& isl : islands_) isl.method->step(isl.rng);
                if (s % G == 0) migrate();
            }
            plan(t);
        }
        for (auto& isl : islands_) count_evaluations(isl);
    }

private:
    struct Island {
        std::unique_ptr<Method> method;
        Rng rng;
        std::vector<Migrant> inbox;
        double reported = kInf;
    };

    void log(EventBody body) {
        RunEvent e{now_, std::move(body)};
        ledger_.apply(e);
        out_.events.push_back(std::move(e));
    }

    void count_evaluations(const Island& isl) {
        const auto n = isl.method->evaluations();
        out_.total_evaluations += n;
        log(event::EvaluationCount{isl.method->id(), n});
    }

    // Improve, share, then deliver, all in island order.
    void migrate() {
        for (auto& isl : islands_) {
            const auto& best = isl.method->best();
            if (best.objective < isl.reported) {
                isl.reported = best.objective;
                log(event::Improve{isl.method->id(), best.objective});
                if (!out_.best || best.objective < out_.best->objective) out_.best = best;
            }
        }
        const int n = static_cast<int>(islands_.size());
        for (int i = 0; i < n; ++i) {
            auto shared = islands_[i].method->share_best();
            if (!shared) continue;
            Migrant m{islands_[i].method->id(), islands_[i].method->kind(), *shared};
            for (int j = 0; j < n; ++j)
                if (j != i) islands_[j].inbox.push_back(m);
            log(event::Share{m.sender, m.sender_kind, shared->objective, genome_digest(shared->genome),
                             shared->lineage, n - 1});
        }
        for (auto& isl : islands_) {
            for (const auto& m : isl.inbox)
                if (isl.method->receive(m).improved_best) log(event::Help{m.sender, isl.method->id()});
            isl.inbox.clear();
        }
    }

    void plan(int t) {
        log(event::IterationBoundary{t});
        auto snap = ledger_.snapshot();
        PlannerRecord rec;
        rec.iteration = t;
        rec.snapshot_digest = snap.digest();
        rec.decision = plan_step(settings_, snap, planner_rng_);
        out_.trace.push_back(TraceRow{t, out_.best ? out_.best->objective : kInf, kind_counts(snap)});
        if (rec.decision.replaces()) {
            auto& isl = islands_.at(rec.decision.kill->island);
            if (isl.method->id() != *rec.decision.kill) throw ContractViolation("planner killed a stale instance");
            count_evaluations(isl);
            log(event::Kill{isl.method->id()});
            MethodInstanceId id{isl.method->id().island, isl.method->id().epoch + 1};
            isl.method.reset();
            isl.method = spawn(cfg_, *rec.decision.start, id, isl.rng, out_.best);
            isl.reported = kInf;
            log(event::Start{id, *rec.decision.start, t, false});
            rec.started = id;
        }
        rec.acknowledged = true;
        out_.planner.push_back(std::move(rec));
        out_.ledger_history.push_back(std::move(snap));
    }

    const ExperimentConfig& cfg_;
    PlannerSettings settings_;
    RunResult& out_;
    FeatureLedger ledger_;
    Rng planner_rng_;
    std::vector<Island> islands_;
    std::uint64_t now_ = 0;
};

// ---------------------------------------------------------------------------
// Wall clock: one worker thread per island, the planner on the calling thread.
// ---------------------------------------------------------------------------

using Clock = std::chrono::steady_clock;

struct Envelope {
    RunEvent event;
    std::optional<EvaluatedSolution> solution;   // Improve only: the solution behind it
    std::string error;                           // a worker failed
};

class EventQueue {
public:
    void push(Envelope e) {
        {
            std::lock_guard lock(mu_);
            items_.push_back(std::move(e));
        }
        cv_.notify_one();
    }
    std::deque<Envelope> wait_and_take(Clock::time_point until) {
        std::unique_lock lock(mu_);
        cv_.wait_until(lock, until, [&] { return !items_.empty(); });
        std::deque<Envelope> out;
        out.swap(items_);
        return out;
    }

private:
    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<Envelope> items_;
};

struct ReplaceCommand {
    MethodKind kind;
    MethodInstanceId id;
    int iteration = 0;
    std::optional<EvaluatedSolution> seed;
    std::promise<void> ack;
};

struct Mailbox {
    std::mutex mu;
    std::vector<Migrant> inbox;
    bool replacing = false;
    std::optional<ReplaceCommand> command;
};

class WallRun {
public:
    WallRun(const ExperimentConfig& cfg, RunResult& out)
        : cfg_(cfg), settings_(cfg.planner_settings()), out_(out), ledger_(cfg.planning.top_n, cfg.planning.n_patience) {}

    void run() {
        Rng master(cfg_.seed);
        planner_rng_ = fork(master);
        const auto kinds = initial_assignment(settings_, planner_rng_);
        const int n = static_cast<int>(kinds.size());
        std::vector<Rng> rngs;
        for (int i = 0; i < n; ++i) rngs.push_back(fork(master));
        std::vector<std::unique_ptr<Method>> methods;
        for (int i = 0; i < n; ++i) {
            MethodInstanceId id{i, 0};
            methods.push_back(spawn(cfg_, kinds[i], id, rngs[i], std::nullopt));
            record(Envelope{RunEvent{0, event::Start{id, kinds[i], -1, true}}, {}, {}});
        }
        boxes_ = std::vector<Mailbox>(n);
        start_ = Clock::now();
        std::vector<std::thread> workers;
        for (int i = 0; i < n; ++i)
            workers.emplace_back([this, i, m = std::move(methods[i]), r = rngs[i]]() mutable { worker(i, std::move(m), r); });

        try {
            for (int t = 0; t < cfg_.planning.iterations && out_.abort_reason.empty(); ++t) {
                const auto deadline = start_ + (t + 1) * cfg_.clock.iteration_length;
                while (Clock::now() < deadline && out_.abort_reason.empty()) consume(queue_.wait_and_take(deadline));
                if (!out_.abort_reason.empty()) break;
                plan(t);
            }
        } catch (const std::exception& e) {
            if (out_.abort_reason.empty()) out_.abort_reason = e.what();
        }
        stop_ = true;
        for (auto& w : workers) w.join();
        consume(queue_.wait_and_take(Clock::now()));
        out_.aborted = !out_.abort_reason.empty();
    }

private:
    std::uint64_t elapsed_ms() const {
        return static_cast<std::uint64_t>(
            std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start_).count());
    }

    void emit(EventBody body, std::optional<EvaluatedSolution> sol = std::nullopt) {
        queue_.push(Envelope{RunEvent{elapsed_ms(), std::move(body)}, std::move(sol), {}});
    }

    void record(Envelope e) {
        if (!e.error.empty()) {
            if (out_.abort_reason.empty()) out_.abort_reason = e.error;
            return;
        }
        if (auto* ec = std::get_if<event::EvaluationCount>(&e.event.body)) out_.total_evaluations += ec->evaluations;
        if (e.solution && (!out_.best || e.solution->objective < out_.best->objective)) out_.best = std::move(e.solution);
        ledger_.apply(e.event);
        out_.events.push_back(std::move(e.event));
    }

    void consume(std::deque<Envelope> batch) {
        for (auto& e : batch) record(std::move(e));
    }

    void plan(int t) {
        record(Envelope{RunEvent{elapsed_ms(), event::IterationBoundary{t}}, {}, {}});
        auto snap = ledger_.snapshot();
        PlannerRecord rec;
        rec.iteration = t;
        rec.snapshot_digest = snap.digest();
        rec.decision = plan_step(settings_, snap, planner_rng_);
        out_.trace.push_back(TraceRow{t, out_.best ? out_.best->objective : kInf, kind_counts(snap)});
        if (rec.decision.replaces()) {
            const auto victim = *rec.decision.kill;
            MethodInstanceId id{victim.island, victim.epoch + 1};
            std::future<void> done;
            {
                auto& box = boxes_.at(victim.island);
                std::lock_guard lock(box.mu);
                box.command.emplace(ReplaceCommand{*rec.decision.start, id, t, out_.best, {}});
                done = box.command->ack.get_future();
            }
            // Keep draining while the worker swaps instances so the event stream never stalls.
            while (done.wait_for(std::chrono::milliseconds(5)) != std::future_status::ready) {
                consume(queue_.wait_and_take(Clock::now()));
                if (!out_.abort_reason.empty()) break;
            }
            if (out_.abort_reason.empty()) {
                done.get();
                rec.acknowledged = true;
                rec.started = id;
            }
        } else {
            rec.acknowledged = true;
        }
        out_.planner.push_back(std::move(rec));
        out_.ledger_history.push_back(std::move(snap));
    }

    void worker(int island, std::unique_ptr<Method> method, Rng rng) {
        try {
            double reported = kInf;
            auto next_tick = start_ + cfg_.clock.migration_interval;
            while (!stop_) {
                std::optional<ReplaceCommand> cmd;
                {
                    auto& box = boxes_[island];
                    std::lock_guard lock(box.mu);
                    if (box.command) {
                        cmd = std::move(box.command);
                        box.command.reset();
                        box.replacing = true;
                    }
                }
                if (cmd) {
                    emit(event::EvaluationCount{method->id(), method->evaluations()});
                    emit(event::Kill{method->id()});
                    method.reset();
                    method = spawn(cfg_, cmd->kind, cmd->id, rng, cmd->seed);
                    reported = kInf;
                    emit(event::Start{cmd->id, cmd->kind, cmd->iteration, false});
                    {
                        std::lock_guard lock(boxes_[island].mu);
                        boxes_[island].replacing = false;
                    }
                    cmd->ack.set_value();
                }
                method->step(rng);
                if (Clock::now() >= next_tick) {
                    tick(island, *method, reported);
                    next_tick += cfg_.clock.migration_interval;
                    if (next_tick < Clock::now()) next_tick = Clock::now() + cfg_.clock.migration_interval;
                }
            }
            emit(event::EvaluationCount{method->id(), method->evaluations()});
        } catch (const std::exception& e) {
            queue_.push(Envelope{RunEvent{elapsed_ms(), event::Drop{island, {}}}, {},
                                 "island " + std::to_string(island) + ": " + e.what()});
            stop_ = true;
        }
    }

    void tick(int island, Method& method, double& reported) {
        std::vector<Migrant> inbox;
        {
            std::lock_guard lock(boxes_[island].mu);
            inbox.swap(boxes_[island].inbox);
        }
        for (const auto& m : inbox)
            if (method.receive(m).improved_best) emit(event::Help{m.sender, method.id()});
        const auto& best = method.best();
        if (best.objective < reported) {
            reported = best.objective;
            emit(event::Improve{method.id(), best.objective}, best);
        }
        auto shared = method.share_best();
        if (!shared) return;
        Migrant m{method.id(), method.kind(), *shared};
        int delivered = 0;
        for (int j = 0; j < static_cast<int>(boxes_.size()); ++j) {
            if (j == island) continue;
            bool dropped;
            {
                std::lock_guard lock(boxes_[j].mu);
                dropped = boxes_[j].replacing;
                if (!dropped) boxes_[j].inbox.push_back(m);
            }
            if (dropped)
                emit(event::Drop{j, m.sender});
            else
                ++delivered;
        }
        emit(event::Share{m.sender, m.sender_kind, shared->objective, genome_digest(shared->genome), shared->lineage,
                          delivered});
    }

    const ExperimentConfig& cfg_;
    PlannerSettings settings_;
    RunResult& out_;
    FeatureLedger ledger_;
    Rng planner_rng_;
    EventQueue queue_;
    std::vector<Mailbox> boxes_;
    std::atomic<bool> stop_{false};
    Clock::time_point start_;
};

}  // namespace

RunResult run_experiment(const ExperimentConfig& config) {
    config.validate();
    RunResult out;
    try {
        if (config.clock.mode == ClockMode::Virtual) {
            VirtualRun(config, out).run();
        } else {
            WallRun(config, out).run();
        }
    } catch (const std::exception& e) {
        out.aborted = true;
        out.abort_reason = e.what();
    }
    return out;
}

std::vector<LedgerSnapshot> replay_ledger(const std::vector<RunEvent>& events, int top_n, int n_patience) {
    FeatureLedger ledger(top_n, n_patience);
    std::vector<LedgerSnapshot> out;
    for (const auto& e : events) {
        ledger.apply(e);
        if (std::holds_alternative<event::IterationBoundary>(e.body)) out.push_back(ledger.snapshot());
    }
    return out;
}

void write_events(const std::filesystem::path& path, const std::vector<RunEvent>& events) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const auto& e : events) out << to_json_line(e) << '\n';
}

std::vector<RunEvent> read_events(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    std::vector<RunEvent> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            out.push_back(parse_event_line(line));
        } catch (const ParseError& e) {
            throw ParseError(path.string() + ": " + e.what(), lineno);
        }
    }
    return out;
}

void write_planner_log(const std::filesystem::path& path, const std::vector<PlannerRecord>& records) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const auto& r : records) {
        nlohmann::ordered_json j;
        j["iteration"] = r.iteration;
        j["snapshot_digest"] = r.snapshot_digest;
        j["kill"] = r.decision.kill ? nlohmann::ordered_json(r.decision.kill->str()) : nlohmann::ordered_json(nullptr);
        j["start"] = r.decision.start ? nlohmann::ordered_json(std::string(to_string(*r.decision.start)))
                                      : nlohmann::ordered_json(nullptr);
        j["rule"] = r.decision.rule;
        if (!r.decision.warning.empty()) j["warning"] = r.decision.warning;
        j["ack"] = r.acknowledged;
        j["started"] = r.started ? nlohmann::ordered_json(r.started->str()) : nlohmann::ordered_json(nullptr);
        out << j.dump() << '\n';
    }
}

void write_trace(const std::filesystem::path& path, const std::vector<TraceRow>& trace,
                 const std::vector<MethodKind>& catalog) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "iteration,best";
    for (auto k : catalog) out << ',' << to_string(k);
    out << '\n';
    for (const auto& row : trace) {
        out << row.iteration << ',' << format_real(row.best);
        for (auto k : catalog) {
            auto it = row.kind_counts.find(k);
            out << ',' << (it == row.kind_counts.end() ? 0 : it->second);
        }
        out << '\n';
    }
}

}  // namespace hetero
