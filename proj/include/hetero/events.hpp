#pragma once

#include "hetero/core.hpp"

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace hetero {

namespace event {

/// An island published its best solution. Only the digest of the genome is kept.
struct Share {
    MethodInstanceId sender;
    MethodKind kind = MethodKind::RS;
    double objective = 0.0;
    std::uint64_t digest = 0;
    Lineage lineage;
    int deliveries = 0;
};
/// An instance's best_own improved since the previous migration tick.
struct Improve {
    MethodInstanceId instance;
    double objective = 0.0;
};
struct Kill {
    MethodInstanceId instance;
};
struct Start {
    MethodInstanceId instance;
    MethodKind kind = MethodKind::RS;
    int iteration = -1;      // planning iteration whose decision started it; -1 for the initial assignment
    bool initial = true;
};
struct IterationBoundary {
    int iteration = 0;
};
struct EvaluationCount {
    MethodInstanceId instance;
    std::uint64_t evaluations = 0;
};
/// A migrant from `helper` strictly improved the best_own of `receiver`.
struct Help {
    MethodInstanceId helper;
    MethodInstanceId receiver;
};
/// A delivery discarded because the receiving island was being replaced.
struct Drop {
    int island = 0;
    MethodInstanceId sender;
};

}  // namespace event

using EventBody = std::variant<event::Share, event::Improve, event::Kill, event::Start, event::IterationBoundary,
                               event::EvaluationCount, event::Help, event::Drop>;

struct RunEvent {
    std::uint64_t timestamp = 0;   // virtual step, or milliseconds since start in wall-clock mode
    EventBody body;
};

/// Canonical single-line JSON form (sorted keys, shortest round-trip doubles).
std::string to_json_line(const RunEvent& e);
RunEvent parse_event_line(const std::string& line);

}  // namespace hetero
