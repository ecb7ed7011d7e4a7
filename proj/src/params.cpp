#include "hetero/problems.hpp"
#include "hetero/random.hpp"

#include <cerrno>
#include <cmath>
#include <csignal>
#include <cstring>

#include <poll.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

namespace hetero {

namespace {

const ParamRecord& as_rec(const Genome& g) {
    if (const auto* r = std::get_if<ParamRecord>(&g)) return *r;
    throw ContractViolation("expected a parameter-record genome");
}

double normalized(const ParamEntry& e, double v) { return e.hi > e.lo ? (v - e.lo) / (e.hi - e.lo) : 0.0; }

}  // namespace

// ---------------------------------------------------------------------------
// Surrogate
// ---------------------------------------------------------------------------

SurrogateEvaluator::SurrogateEvaluator()
    : SurrogateEvaluator(ParamRecord{{60, 3, 0.1, 1, 0, 12, 25, 100}}, {0.4, 0.3, 0.5, 0.1, 0.1, 0.3, 0.2, 0.2}) {}

SurrogateEvaluator::SurrogateEvaluator(ParamRecord minimiser, std::vector<double> weights)
    : minimiser_(std::move(minimiser)), weights_(std::move(weights)) {
    if (minimiser_.values.size() != weights_.size()) throw ContractViolation("surrogate weight count mismatch");
    for (double w : weights_)
        if (!(w > 0.0)) throw ContractViolation("surrogate weights must be positive");
}

std::optional<double> SurrogateEvaluator::evaluate(const ParamRecord& rec, const ParamSpace& space) {
    if (rec.values.size() != weights_.size() || space.entries.size() != weights_.size())
        throw ContractViolation("record does not match surrogate dimension");
    double f = kMinimum;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        const double d = normalized(space.entries[i], rec.values[i]) - normalized(space.entries[i], minimiser_.values[i]);
        f += weights_[i] * d * d;
    }
    return f;
}

// ---------------------------------------------------------------------------
// External evaluator
// ---------------------------------------------------------------------------

struct ExternalEvaluator::Session {
    pid_t pid = -1;
    int fd = -1;
    std::string buffer;

    ~Session() {
        if (fd >= 0) ::close(fd);
        if (pid > 0) {
            ::kill(pid, SIGKILL);
            ::waitpid(pid, nullptr, 0);
        }
    }
};

ExternalEvaluator::ExternalEvaluator(std::string command, std::chrono::milliseconds timeout, bool stochastic)
    : command_(std::move(command)), timeout_(timeout), stochastic_(stochastic) {
    if (command_.empty()) throw ContractViolation("external evaluator command is empty");
}

ExternalEvaluator::~ExternalEvaluator() = default;

std::unique_ptr<ExternalEvaluator::Session> ExternalEvaluator::checkout() {
    {
        std::lock_guard lock(mutex_);
        if (!idle_.empty()) {
            auto s = std::move(idle_.back());
            idle_.pop_back();
            return s;
        }
    }
    int sv[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0)
        throw std::runtime_error(std::string("socketpair: ") + std::strerror(errno));
    pid_t pid = ::fork();
    if (pid < 0) {
        ::close(sv[0]);
        ::close(sv[1]);
        throw std::runtime_error(std::string("fork: ") + std::strerror(errno));
    }
    if (pid == 0) {
        ::dup2(sv[1], STDIN_FILENO);
        ::dup2(sv[1], STDOUT_FILENO);
        ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::close(sv[1]);
    auto s = std::make_unique<Session>();
    s->pid = pid;
    s->fd = sv[0];
    return s;
}

void ExternalEvaluator::checkin(std::unique_ptr<Session> s) {
    std::lock_guard lock(mutex_);
    idle_.push_back(std::move(s));
}

std::optional<double> ExternalEvaluator::evaluate(const ParamRecord& rec, const ParamSpace& space) {
    GenomeSpec spec;
    spec.encoding = Encoding::ParamRecord;
    spec.size = static_cast<int>(space.entries.size());
    spec.params = space;
    const std::string request = "EVAL " + format_genome(rec, spec) + "\n";

    auto session = checkout();
    auto fail = [this](std::string msg) -> std::optional<double> {
        std::lock_guard lock(mutex_);
        last_error_ = std::move(msg);
        return std::nullopt;
    };

    std::size_t sent = 0;
    while (sent < request.size()) {
        ssize_t w = ::send(session->fd, request.data() + sent, request.size() - sent, MSG_NOSIGNAL);
        if (w < 0) {
            if (errno == EINTR) continue;
            return fail("evaluator write failed: " + std::string(std::strerror(errno)));
        }
        sent += static_cast<std::size_t>(w);
    }

    const auto deadline = std::chrono::steady_clock::now() + timeout_;
    std::string line;
    for (;;) {
        if (auto nl = session->buffer.find('\n'); nl != std::string::npos) {
            line = session->buffer.substr(0, nl);
            session->buffer.erase(0, nl + 1);
            break;
        }
        auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) return fail("evaluator timed out");
        pollfd pfd{session->fd, POLLIN, 0};
        int r = ::poll(&pfd, 1, static_cast<int>(left.count()));
        if (r < 0 && errno == EINTR) continue;
        if (r <= 0) return fail(r == 0 ? "evaluator timed out" : "poll failed");
        char buf[4096];
        ssize_t got = ::read(session->fd, buf, sizeof buf);
        if (got <= 0) return fail("evaluator closed its output");
        session->buffer.append(buf, static_cast<std::size_t>(got));
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();

    if (line.rfind("OK ", 0) == 0) {
        char* end = nullptr;
        const std::string num = line.substr(3);
        double v = std::strtod(num.c_str(), &end);
        if (end == num.c_str() || !std::isfinite(v)) return fail("malformed OK response: " + line);
        checkin(std::move(session));
        return v;
    }
    if (line.rfind("ERR", 0) == 0) {
        checkin(std::move(session));
        return fail("evaluator error:" + line.substr(3));
    }
    return fail("protocol error: " + line);
}

// ---------------------------------------------------------------------------
// Problem adapter
// ---------------------------------------------------------------------------

ParamProblem::ParamProblem(ParamSpace space, std::shared_ptr<ParamEvaluator> evaluator, std::string label)
    : evaluator_(std::move(evaluator)), label_(std::move(label)) {
    if (!evaluator_) throw ContractViolation("parameter problem needs an evaluator");
    if (space.entries.empty()) throw ContractViolation("parameter space is empty");
    for (const auto& e : space.entries) {
        if (!(e.lo <= e.hi)) throw ContractViolation("empty range for parameter " + e.name);
        if (e.type != ParamType::Real && (e.lo != std::floor(e.lo) || e.hi != std::floor(e.hi)))
            throw ContractViolation("integral parameter " + e.name + " needs integral bounds");
    }
    spec_.encoding = Encoding::ParamRecord;
    spec_.size = static_cast<int>(space.entries.size());
    spec_.params = std::move(space);
}

double ParamProblem::snap(std::size_t i, double v) const {
    const auto& e = spec_.params.entries[i];
    if (e.type != ParamType::Real) v = std::round(v);
    return std::min(std::max(v, e.lo), e.hi);
}

std::optional<double> ParamProblem::evaluate(const Genome& g) const {
    require_valid(g, spec_);
    return evaluator_->evaluate(std::get<ParamRecord>(g), spec_.params);
}

Genome ParamProblem::random_solution(Rng& rng) const {
    ParamRecord r;
    for (const auto& e : spec_.params.entries) {
        switch (e.type) {
            case ParamType::Integer:
                r.values.push_back(uniform_int(rng, static_cast<int>(e.lo), static_cast<int>(e.hi)));
                break;
            case ParamType::Real: r.values.push_back(uniform_real(rng, e.lo, e.hi)); break;
            case ParamType::Boolean: r.values.push_back(coin(rng, 0.5) ? 1.0 : 0.0); break;
        }
    }
    return r;
}

std::optional<Genome> ParamProblem::next_solution(Cursor& cursor, Rng&) const {
    if (cursor.exhausted) return std::nullopt;
    const auto& entries = spec_.params.entries;
    if (!cursor.position) {
        ParamRecord r;
        for (const auto& e : entries) r.values.push_back(e.lo);
        cursor.position = r;
    } else {
        auto& v = std::get<ParamRecord>(*cursor.position).values;
        std::size_t i = 0;
        for (; i < entries.size(); ++i) {
            const auto& e = entries[i];
            double next;
            if (e.type == ParamType::Real) {
                const double step = kRealStep * (e.hi - e.lo);
                next = step > 0.0 ? e.lo + (std::round((v[i] - e.lo) / step) + 1.0) * step : e.hi + 1.0;
            } else {
                next = v[i] + 1.0;
            }
            if (next <= e.hi + 1e-12) {
                v[i] = std::min(next, e.hi);
                break;
            }
            v[i] = e.lo;
        }
        if (i == entries.size()) {
            cursor.exhausted = true;
            return std::nullopt;
        }
    }
    ++cursor.produced;
    return *cursor.position;
}

Genome ParamProblem::unary(const Genome& g, Rng& rng, OperatorState&) const {
    ParamRecord r = as_rec(g);
    const auto& entries = spec_.params.entries;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        switch (entries[i].type) {
            case ParamType::Integer: r.values[i] += coin(rng, 0.5) ? 1.0 : -1.0; break;
            case ParamType::Real: r.values[i] += uniform_real(rng, -kRealStep, kRealStep); break;
            case ParamType::Boolean:
                if (coin(rng, 0.5)) r.values[i] = 1.0 - r.values[i];
                break;
        }
        r.values[i] = snap(i, r.values[i]);
    }
    return r;
}

Genome ParamProblem::binary(const Genome& a, const Genome& b, Rng& rng) const {
    const auto& x = as_rec(a).values;
    const auto& y = as_rec(b).values;
    const int m = static_cast<int>(x.size());
    const int k = m > 1 ? uniform_int(rng, 1, m - 1) : 0;
    ParamRecord r;
    r.values.assign(x.begin(), x.begin() + k);
    r.values.insert(r.values.end(), y.begin() + k, y.end());
    return r;
}

Genome ParamProblem::ternary(const Genome& a, const Genome& b, const Genome& c, double scale, Rng&) const {
    const auto& x = as_rec(a).values;
    const auto& y = as_rec(b).values;
    const auto& base = as_rec(c).values;
    ParamRecord r;
    r.values.resize(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) r.values[i] = snap(i, base[i] + scale * (x[i] - y[i]));
    return r;
}

}  // namespace hetero
