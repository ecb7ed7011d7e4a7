#include "hetero/problems.hpp"
#include "hetero/random.hpp"

#include <fstream>
#include <sstream>

namespace hetero {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::ifstream open(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    return in;
}

template <class F>
auto with_file_context(const std::filesystem::path& path, F&& f) {
    try {
        return f();
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    } catch (const ContractViolation& e) {
        throw ContractViolation(path.string() + ": " + e.what());
    }
}

}  // namespace

TspInstance parse_tsplib(std::istream& in) {
    std::string line;
    int lineno = 0;
    int dimension = -1;
    bool in_coords = false;
    std::vector<std::pair<double, double>> coords;
    std::vector<char> seen;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty()) continue;
        if (t == "EOF") break;
        if (in_coords) {
            std::istringstream ss(t);
            long id;
            double x, y;
            if (!(ss >> id >> x >> y)) throw ParseError("malformed coordinate line", lineno);
            if (id < 1 || id > dimension) throw ParseError("node id out of range", lineno);
            if (seen[id - 1]) throw ParseError("node " + std::to_string(id) + " listed twice", lineno);
            seen[id - 1] = 1;
            coords[id - 1] = {x, y};
            continue;
        }
        if (t == "NODE_COORD_SECTION") {
            if (dimension < 0) throw ParseError("NODE_COORD_SECTION before DIMENSION", lineno);
            in_coords = true;
            coords.assign(dimension, {0.0, 0.0});
            seen.assign(dimension, 0);
            continue;
        }
        auto colon = t.find(':');
        if (colon == std::string::npos) throw ParseError("expected 'KEY : value'", lineno);
        std::string key = trim(t.substr(0, colon));
        std::string value = trim(t.substr(colon + 1));
        if (key == "DIMENSION") {
            try {
                dimension = std::stoi(value);
            } catch (const std::exception&) {
                throw ParseError("bad DIMENSION", lineno);
            }
            if (dimension < 1) throw ParseError("bad DIMENSION", lineno);
        } else if (key == "EDGE_WEIGHT_TYPE") {
            if (value != "EUC_2D") throw ParseError("unsupported EDGE_WEIGHT_TYPE " + value, lineno);
        } else if (key == "TYPE") {
            if (value != "TSP") throw ParseError("unsupported TYPE " + value, lineno);
        }
    }
    if (!in_coords) throw ParseError("missing NODE_COORD_SECTION");
    for (int i = 0; i < dimension; ++i)
        if (!seen[i]) throw ParseError("node " + std::to_string(i + 1) + " has no coordinates");
    return TspInstance::from_coordinates(coords, DistanceRule::TsplibEuc2d);
}

BppInstance parse_volume_list(std::istream& in) {
    BppInstance inst;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        char* end = nullptr;
        double v = std::strtod(t.c_str(), &end);
        if (end != t.c_str() + t.size()) throw ParseError("expected one volume per line", lineno);
        if (v > inst.capacity) throw ContractViolation("line " + std::to_string(lineno) + ": volume exceeds capacity");
        inst.volumes.push_back(v);
    }
    inst.validate();
    return inst;
}

VcInstance parse_dimacs(std::istream& in) {
    VcInstance inst;
    inst.n = -1;
    std::size_t declared_edges = 0;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == 'c') continue;
        std::istringstream ss(t);
        std::string tag;
        ss >> tag;
        if (tag == "p") {
            std::string fmt;
            long n, m;
            if (!(ss >> fmt >> n >> m) || n < 0 || m < 0) throw ParseError("malformed problem line", lineno);
            if (fmt != "edge" && fmt != "col") throw ParseError("unsupported DIMACS format " + fmt, lineno);
            inst.n = static_cast<int>(n);
            declared_edges = static_cast<std::size_t>(m);
            inst.edges.reserve(declared_edges);
        } else if (tag == "e") {
            if (inst.n < 0) throw ParseError("edge before problem line", lineno);
            long u, v;
            if (!(ss >> u >> v)) throw ParseError("malformed edge line", lineno);
            if (u < 1 || v < 1 || u > inst.n || v > inst.n) throw ParseError("edge endpoint out of range", lineno);
            if (u == v) throw ParseError("self-loop", lineno);
            inst.edges.emplace_back(static_cast<int>(u - 1), static_cast<int>(v - 1));
        } else {
            throw ParseError("unexpected line tag '" + tag + "'", lineno);
        }
    }
    if (inst.n < 0) throw ParseError("missing problem line");
    inst.validate();
    return inst;
}

TspInstance load_tsplib(const std::filesystem::path& path) {
    return with_file_context(path, [&] {
        auto in = open(path);
        return parse_tsplib(in);
    });
}

BppInstance load_volume_list(const std::filesystem::path& path) {
    return with_file_context(path, [&] {
        auto in = open(path);
        return parse_volume_list(in);
    });
}

VcInstance load_dimacs(const std::filesystem::path& path) {
    return with_file_context(path, [&] {
        auto in = open(path);
        return parse_dimacs(in);
    });
}

BppInstance generate_bpp(int n, std::uint64_t seed) {
    if (n < 1) throw ContractViolation("item count must be >= 1");
    Rng rng(seed);
    BppInstance inst;
    inst.volumes.reserve(n);
    while (static_cast<int>(inst.volumes.size()) < n) {
        double v = uniform_real(rng, 0.0, 1.0);
        if (v > 0.0) inst.volumes.push_back(v);
    }
    return inst;
}

void write_volume_list(const BppInstance& inst, std::ostream& out) {
    for (double v : inst.volumes) out << format_real(v) << '\n';
}

}  // namespace hetero
