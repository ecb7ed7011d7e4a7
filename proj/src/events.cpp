#include "hetero/events.hpp"

#include <json.hpp>

namespace hetero {

namespace {

using json = nlohmann::json;   // std::map backed, so keys come out sorted

std::string id_text(MethodInstanceId id) { return id.str(); }

MethodInstanceId parse_id(const json& j) {
    const auto s = j.get<std::string>();
    auto dot = s.find('.');
    if (dot == std::string::npos) throw ParseError("bad instance id '" + s + "'");
    try {
        return MethodInstanceId{std::stoi(s.substr(0, dot)), std::stoi(s.substr(dot + 1))};
    } catch (const std::exception&) {
        throw ParseError("bad instance id '" + s + "'");
    }
}

json lineage_json(const Lineage& l) {
    json a = json::array();
    for (const auto& r : l.runs()) a.push_back({r.id.island, r.id.epoch, r.count});
    return a;
}

Lineage parse_lineage(const json& a) {
    Lineage l;
    for (const auto& r : a) l.append(MethodInstanceId{r.at(0).get<int>(), r.at(1).get<int>()}, r.at(2).get<std::int64_t>());
    return l;
}

}  // namespace

std::string to_json_line(const RunEvent& e) {
    json j;
    j["ts"] = e.timestamp;
    std::visit(
        [&](const auto& ev) {
            using T = std::decay_t<decltype(ev)>;
            if constexpr (std::is_same_v<T, event::Share>) {
                j["type"] = "share";
                j["sender"] = id_text(ev.sender);
                j["kind"] = to_string(ev.kind);
                j["objective"] = ev.objective;
                j["digest"] = ev.digest;
                j["lineage"] = lineage_json(ev.lineage);
                j["deliveries"] = ev.deliveries;
            } else if constexpr (std::is_same_v<T, event::Improve>) {
                j["type"] = "improve";
                j["instance"] = id_text(ev.instance);
                j["objective"] = ev.objective;
            } else if constexpr (std::is_same_v<T, event::Kill>) {
                j["type"] = "kill";
                j["instance"] = id_text(ev.instance);
            } else if constexpr (std::is_same_v<T, event::Start>) {
                j["type"] = "start";
                j["instance"] = id_text(ev.instance);
                j["kind"] = to_string(ev.kind);
                j["iteration"] = ev.iteration;
                j["initial"] = ev.initial;
            } else if constexpr (std::is_same_v<T, event::IterationBoundary>) {
                j["type"] = "iteration";
                j["t"] = ev.iteration;
            } else if constexpr (std::is_same_v<T, event::EvaluationCount>) {
                j["type"] = "evaluations";
                j["instance"] = id_text(ev.instance);
                j["n"] = ev.evaluations;
            } else if constexpr (std::is_same_v<T, event::Help>) {
                j["type"] = "help";
                j["helper"] = id_text(ev.helper);
                j["receiver"] = id_text(ev.receiver);
            } else if constexpr (std::is_same_v<T, event::Drop>) {
                j["type"] = "drop";
                j["island"] = ev.island;
                j["sender"] = id_text(ev.sender);
            }
        },
        e.body);
    return j.dump();
}

RunEvent parse_event_line(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& ex) {
        throw ParseError(std::string("malformed event: ") + ex.what());
    }
    try {
        RunEvent e;
        e.timestamp = j.at("ts").get<std::uint64_t>();
        const auto type = j.at("type").get<std::string>();
        if (type == "share") {
            event::Share s;
            s.sender = parse_id(j.at("sender"));
            s.kind = parse_method_kind(j.at("kind").get<std::string>());
            s.objective = j.at("objective").get<double>();
            s.digest = j.at("digest").get<std::uint64_t>();
            s.lineage = parse_lineage(j.at("lineage"));
            s.deliveries = j.at("deliveries").get<int>();
            e.body = std::move(s);
        } else if (type == "improve") {
            e.body = event::Improve{parse_id(j.at("instance")), j.at("objective").get<double>()};
        } else if (type == "kill") {
            e.body = event::Kill{parse_id(j.at("instance"))};
        } else if (type == "start") {
            e.body = event::Start{parse_id(j.at("instance")), parse_method_kind(j.at("kind").get<std::string>()),
                                  j.at("iteration").get<int>(), j.at("initial").get<bool>()};
        } else if (type == "iteration") {
            e.body = event::IterationBoundary{j.at("t").get<int>()};
        } else if (type == "evaluations") {
            e.body = event::EvaluationCount{parse_id(j.at("instance")), j.at("n").get<std::uint64_t>()};
        } else if (type == "help") {
            e.body = event::Help{parse_id(j.at("helper")), parse_id(j.at("receiver"))};
        } else if (type == "drop") {
            e.body = event::Drop{j.at("island").get<int>(), parse_id(j.at("sender"))};
        } else {
            throw ParseError("unknown event type '" + type + "'");
        }
        return e;
    } catch (const json::exception& ex) {
        throw ParseError(std::string("malformed event: ") + ex.what());
    }
}

}  // namespace hetero
