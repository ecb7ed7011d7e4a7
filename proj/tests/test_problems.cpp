#include "hetero/problems.hpp"
#include "hetero/random.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

using namespace hetero;

namespace {

const std::string kData = HETERO_TEST_DATA;

TspProblem unit_square() {
    return TspProblem(TspInstance::from_coordinates({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, DistanceRule::Euclidean));
}

std::vector<std::pair<double, double>> read_coords(const std::string& path) {
    std::ifstream in(path);
    std::string line;
    std::vector<std::pair<double, double>> pts;
    bool coords = false;
    while (std::getline(in, line)) {
        if (line == "NODE_COORD_SECTION") {
            coords = true;
            continue;
        }
        if (line == "EOF") break;
        if (!coords) continue;
        std::istringstream ss(line);
        int id;
        double x, y;
        ss >> id >> x >> y;
        pts.emplace_back(x, y);
    }
    return pts;
}

Permutation P(std::vector<int> v) { return Permutation{std::move(v)}; }

}  // namespace

// --- TSP ------------------------------------------------------------------

TEST_CASE("tour length on the unit square") {
    auto tsp = unit_square();
    CHECK(*tsp.evaluate(P({0, 1, 2, 3})) == doctest::Approx(4.0));
    CHECK(*tsp.evaluate(P({0, 2, 1, 3})) == doctest::Approx(2.0 + 2.0 * std::sqrt(2.0)));
}

TEST_CASE("tour length is invariant under rotation and reversal") {
    TspProblem tsp(load_tsplib(kData + "/euclid50.tsp"));
    Rng rng(3);
    for (int rep = 0; rep < 50; ++rep) {
        auto p = perm::random(50, rng);
        const double len = tsp.tour_length(p);
        auto rot = p;
        std::rotate(rot.order.begin(), rot.order.begin() + uniform_int(rng, 0, 49), rot.order.end());
        CHECK(tsp.tour_length(rot) == doctest::Approx(len).epsilon(1e-12));
        auto rev = p;
        std::reverse(rev.order.begin(), rev.order.end());
        CHECK(tsp.tour_length(rev) == doctest::Approx(len).epsilon(1e-12));
    }
}

TEST_CASE("invalid permutations are contract violations") {
    auto tsp = unit_square();
    CHECK_THROWS_AS(tsp.evaluate(P({0, 0, 1, 2})), ContractViolation);
    CHECK_THROWS_AS(tsp.evaluate(P({0, 1, 2})), ContractViolation);
}

TEST_CASE("2-opt segment reversal") {
    CHECK(perm::reverse_segment(P({0, 1, 2, 3, 4}), 1, 3) == P({0, 3, 2, 1, 4}));
    auto tsp = unit_square();
    auto full = perm::reverse_segment(P({0, 1, 2, 3}), 0, 3);
    CHECK(full == P({3, 2, 1, 0}));
    CHECK(tsp.tour_length(full) == doctest::Approx(tsp.tour_length(P({0, 1, 2, 3}))));
}

TEST_CASE("2-opt keeps 10000 outputs valid on n=100") {
    Rng rng(1);
    const GenomeSpec spec{Encoding::Permutation, 100, {}, {}};
    auto p = perm::random(100, rng);
    for (int i = 0; i < 10000; ++i) {
        p = perm::two_opt(p, rng);
        REQUIRE_FALSE(validate_genome(p, spec).has_value());
    }
}

TEST_CASE("single-point crossover") {
    const auto p1 = P({0, 1, 2, 3}), p2 = P({3, 2, 1, 0});
    CHECK(perm::single_point_crossover(p1, p2, 2) == P({3, 2, 0, 1}));
    CHECK(perm::single_point_crossover(p1, p2, 0) == p1);
    CHECK(perm::single_point_crossover(p1, p2, 4) == p2);
}

TEST_CASE("permutation ternary examples") {
    CHECK(perm::ternary(P({2, 0, 1}), P({0, 1, 2}), P({1, 2, 0})) == P({2, 1, 0}));
    // p1 = p2: stable argsort of p3.
    const auto p3 = P({2, 0, 3, 1});
    CHECK(perm::ternary(P({1, 3, 0, 2}), P({1, 3, 0, 2}), p3) == P({1, 3, 0, 2}));
    CHECK(perm::ternary(P({1, 0, 2}), P({1, 0, 2}), P({0, 1, 2})) == P({0, 1, 2}));
}

TEST_CASE("permutation ternary agrees with the reference on random triples") {
    Rng rng(99);
    for (int rep = 0; rep < 1000; ++rep) {
        const int n = uniform_int(rng, 1, 30);
        auto a = perm::random(n, rng), b = perm::random(n, rng), c = perm::random(n, rng);
        REQUIRE(perm::ternary(a, b, c).order == oracle::perm_ternary(a.order, b.order, c.order));
    }
}

TEST_CASE("brute force on 7-city fixtures reaches the exhaustive optimum") {
    for (const char* f : {"tsp7_a", "tsp7_b", "tsp7_c"}) {
        const std::string path = kData + "/" + f + ".tsp";
        TspProblem tsp(load_tsplib(path));
        Cursor cur;
        Rng rng(0);
        double best = std::numeric_limits<double>::infinity();
        std::uint64_t count = 0;
        while (auto g = tsp.next_solution(cur, rng)) {
            best = std::min(best, *tsp.evaluate(*g));
            ++count;
        }
        CAPTURE(f);
        CHECK(count == 5040);
        CHECK(best == oracle::tsp_optimum(read_coords(path)));
    }
}

// --- BPP ------------------------------------------------------------------

TEST_CASE("first-fit decoding") {
    BppInstance a{{0.5, 0.5, 0.6, 0.4}};
    CHECK(first_fit_bins(a, {0, 1, 2, 3}) == 2);
    BppInstance b{{0.6, 0.6, 0.6}};
    std::vector<int> order = {0, 1, 2};
    do {
        CHECK(first_fit_bins(b, order) == 3);
    } while (std::next_permutation(order.begin(), order.end()));
}

TEST_CASE("first-fit over all orders matches the exhaustive packing on every small fixture") {
    for (const char* f : {"bpp5_a.txt", "bpp6_b.txt", "bpp7_c.txt", "bpp7_d.txt"}) {
        auto inst = load_volume_list(kData + "/" + f);
        const int opt = oracle::bpp_optimum(inst.volumes);
        std::vector<int> order(inst.volumes.size());
        std::iota(order.begin(), order.end(), 0);
        int best = 1 << 30;
        do {
            const int bins = first_fit_bins(inst, order);
            CHECK(bins >= opt);
            CHECK(bins <= 2 * opt);
            best = std::min(best, bins);
        } while (std::next_permutation(order.begin(), order.end()));
        CAPTURE(f);
        CHECK(best == opt);
    }
}

TEST_CASE("displacement block and shift mutation") {
    CHECK(perm::move_block_to_end(P({0, 1, 2, 3, 4}), 1, 2) == P({0, 3, 4, 1, 2}));
    CHECK(perm::move_block_to_end(P({0, 1, 2, 3, 4}), 3, 2) == P({0, 1, 2, 3, 4}));
    CHECK(perm::shift_to_end(P({0, 1, 2, 3}), 1) == P({0, 2, 3, 1}));
    CHECK(max_displacement_block(1000) == 5);
    CHECK(max_displacement_block(10) == 1);
    CHECK(max_displacement_block(1001) == 6);
}

TEST_CASE("displacement on 1000 items never moves more than 5") {
    BppProblem bpp(generate_bpp(1000, 4));
    Rng rng(4);
    OperatorState st;
    Genome g = bpp.random_solution(rng);
    for (int i = 0; i < 2000; ++i) {
        Genome h = bpp.unary(g, rng, st);
        const auto& a = std::get<Permutation>(g).order;
        const auto& b = std::get<Permutation>(h).order;
        // The moved block is the tail of b that is out of place relative to a's order.
        std::size_t prefix = 0;
        while (prefix < a.size() && a[prefix] == b[prefix]) ++prefix;
        if (prefix < a.size()) {
            // Elements a[prefix..prefix+k) are now at the end of b.
            std::size_t k = 0;
            while (k < a.size() - prefix && b[a.size() - 1 - k] != a[prefix]) ++k;
            CHECK(k + 1 <= 5);
        }
        CHECK(st.block >= 1);
        CHECK(st.block <= 5);
        bpp.note_outcome(st, coin(rng, 0.05));
        g = h;
    }
}

TEST_CASE("adaptive block halves after 10 misses and resets on success") {
    BppProblem bpp(generate_bpp(1000, 5));
    OperatorState st;
    Rng rng(1);
    bpp.unary(bpp.random_solution(rng), rng, st);
    CHECK(st.block == 5);
    for (int i = 0; i < 10; ++i) bpp.note_outcome(st, false);
    CHECK(st.block == 2);
    for (int i = 0; i < 10; ++i) bpp.note_outcome(st, false);
    CHECK(st.block == 1);
    for (int i = 0; i < 30; ++i) bpp.note_outcome(st, false);
    CHECK(st.block == 1);
    bpp.note_outcome(st, true);
    CHECK(st.block == 5);
}

TEST_CASE("order crossover") {
    CHECK(perm::order_crossover(P({1, 2, 3, 4, 5}), P({5, 4, 3, 2, 1}), 1, 3) == P({5, 2, 3, 4, 1}));
    Rng rng(2);
    for (int i = 0; i < 100; ++i) {
        auto p = perm::random(9, rng);
        CHECK(perm::order_crossover(p, p, rng) == p);
    }
}

TEST_CASE("bin-packing objective is the first-fit bin count") {
    BppProblem bpp(BppInstance{{0.5, 0.5, 0.6, 0.4}});
    CHECK(*bpp.evaluate(P({0, 1, 2, 3})) == 2.0);
    BppProblem one(generate_bpp(1, 9));
    Rng rng(0);
    CHECK(*one.evaluate(one.random_solution(rng)) == 1.0);
}

// --- CO -------------------------------------------------------------------

TEST_CASE("continuous functions at their minimisers") {
    CoFunction f08;
    f08.kind = CoKind::F08Rosenbrock;
    f08.normalize();
    CHECK(co_evaluate(f08, std::vector<double>(10, 1.0)) == 0.0);
    CoFunction f14;
    f14.kind = CoKind::F14DifferentPowers;
    f14.normalize();
    CHECK(co_evaluate(f14, std::vector<double>(10, 0.0)) == 0.0);
    for (auto kind : {CoKind::F04BucheRastrigin, CoKind::F08Rosenbrock, CoKind::F14DifferentPowers, CoKind::F17Schaffers}) {
        for (std::uint64_t s = 1; s <= 20; ++s) {
            const double fopt = static_cast<double>(s) * 0.5 - 3.0;
            auto fn = CoFunction::shifted(kind, 10, s, fopt);
            CAPTURE(to_string(kind));
            CHECK(co_evaluate(fn, fn.x_opt) == fopt);
        }
    }
}

TEST_CASE("f08 and f14 are non-negative and minimal at the optimum") {
    Rng rng(6);
    for (auto kind : {CoKind::F08Rosenbrock, CoKind::F14DifferentPowers}) {
        auto fn = CoFunction::shifted(kind, 10, 17);
        CoProblem co(fn);
        for (int i = 0; i < 500; ++i) CHECK(*co.evaluate(co.random_solution(rng)) >= 0.0);
    }
}

TEST_CASE("out-of-bounds points are rejected") {
    CoProblem co(CoFunction::shifted(CoKind::F04BucheRastrigin, 2, 1));
    CHECK_THROWS_AS(co.evaluate(RealVector{{5.5, 0.0}}), ContractViolation);
}

TEST_CASE("continuous operators") {
    CoProblem co(CoFunction::shifted(CoKind::F17Schaffers, 2, 3));
    Rng rng(10);
    OperatorState st;
    for (int i = 0; i < 1000; ++i) {
        auto g = co.unary(RealVector{{-5.0, 5.0}}, rng, st);
        CHECK_FALSE(validate_genome(g, co.genome_spec()).has_value());
        const auto& v = std::get<RealVector>(g).values;
        CHECK(std::abs(v[0] + 5.0) <= CoProblem::kUnaryRadius);
        CHECK(std::abs(v[1] - 5.0) <= CoProblem::kUnaryRadius);
    }
    for (int i = 0; i < 200; ++i) {
        auto x = co.random_solution(rng);
        CHECK(co.binary(x, x, rng) == x);
    }
    Cursor cur;
    auto first = co.next_solution(cur, rng);
    REQUIRE(first);
    CHECK(std::get<RealVector>(*first).values == std::vector<double>{-5.0, -5.0});
    auto second = std::get<RealVector>(*co.next_solution(cur, rng)).values;
    CHECK(second[0] == doctest::Approx(-4.995));
    CHECK(second[1] == -5.0);
}

TEST_CASE("grid walk wraps row-major and exhausts") {
    CoFunction fn;
    fn.kind = CoKind::F14DifferentPowers;
    fn.dimension = 2;
    fn.bounds = {Bounds{0.0, 0.01}, Bounds{0.0, 0.01}};
    CoProblem co(fn);
    Cursor cur;
    Rng rng(0);
    std::vector<std::vector<double>> seen;
    while (auto g = co.next_solution(cur, rng)) seen.push_back(std::get<RealVector>(*g).values);
    REQUIRE(seen.size() == 9);
    CHECK(seen[3][0] == 0.0);
    CHECK(seen[3][1] == doctest::Approx(0.005));
    CHECK(seen.back()[0] == doctest::Approx(0.01));
    CHECK(seen.back()[1] == doctest::Approx(0.01));
    CHECK(cur.exhausted);
}

TEST_CASE("continuous ternary is the clamped difference step") {
    CoProblem co(CoFunction::shifted(CoKind::F08Rosenbrock, 3, 1));
    Rng rng(0);
    auto out = std::get<RealVector>(co.ternary(RealVector{{1, 2, 3}}, RealVector{{0, 0, 0}}, RealVector{{0.5, 4, -4}}, 1.0, rng));
    CHECK(out.values == std::vector<double>{1.5, 5.0, -1.0});
}

// --- VC -------------------------------------------------------------------

TEST_CASE("vertex cover objective and coverage") {
    VcProblem tri(load_dimacs(kData + "/triangle.col"));
    CHECK(tri.is_cover(VertexSet{{0, 1}}));
    CHECK(*tri.evaluate(VertexSet{{0, 1}}) == 2.0);
    CHECK(*tri.evaluate(VertexSet{{0, 1, 2}}) == 3.0);
    CHECK_FALSE(tri.is_cover(VertexSet{{0}}));
    CHECK_THROWS_AS(tri.evaluate(VertexSet{{0}}), ContractViolation);
    VcProblem empty(VcInstance{4, {}});
    CHECK(*empty.evaluate(VertexSet{}) == 0.0);
}

TEST_CASE("vertex cover operators keep covers") {
    // Star: centre 0 joined to 1..9.
    VcInstance star{10, {}};
    for (int i = 1; i < 10; ++i) star.edges.emplace_back(0, i);
    VcProblem vc(star);
    Rng rng(12);
    OperatorState st;
    VertexSet all;
    for (int i = 0; i < 10; ++i) all.members.push_back(i);
    for (int i = 0; i < 200; ++i) CHECK(vc.is_cover(std::get<VertexSet>(vc.unary(all, rng, st))));
    auto s = vc.random_solution(rng);
    CHECK(vc.ternary(s, s, s, 1.0, rng) == s);
}

TEST_CASE("1000 random operator applications on a 50-vertex graph stay covers") {
    Rng g(77);
    VcInstance inst{50, {}};
    for (int u = 0; u < 50; ++u)
        for (int v = u + 1; v < 50; ++v)
            if (coin(g, 0.1)) inst.edges.emplace_back(u, v);
    VcProblem vc(inst);
    Rng rng(78);
    OperatorState st;
    auto a = vc.random_solution(rng), b = vc.random_solution(rng), c = vc.random_solution(rng);
    for (int i = 0; i < 1000; ++i) {
        switch (i % 4) {
            case 0: a = vc.unary(a, rng, st); break;
            case 1: b = vc.mutation(b, rng, st); break;
            case 2: c = vc.binary(a, b, rng); break;
            default: a = vc.ternary(a, b, c, 1.0, rng); break;
        }
        REQUIRE(vc.is_cover(std::get<VertexSet>(a)));
        REQUIRE(vc.is_cover(std::get<VertexSet>(b)));
        REQUIRE(vc.is_cover(std::get<VertexSet>(c)));
    }
}

TEST_CASE("vertex-cover enumeration on the triangle") {
    VcProblem tri(load_dimacs(kData + "/triangle.col"));
    Cursor cur;
    Rng rng(0);
    double best = 1e9;
    int count = 0;
    while (auto g = tri.next_solution(cur, rng)) {
        REQUIRE(tri.is_cover(std::get<VertexSet>(*g)));
        best = std::min(best, *tri.evaluate(*g));
        ++count;
    }
    CHECK(count == 8);
    CHECK(best == 2.0);
}

// --- ML parameters ----------------------------------------------------------

TEST_CASE("surrogate minimum and grid-search check") {
    auto space = ParamSpace::random_forest();
    SurrogateEvaluator s;
    const ParamRecord argmin{{60, 3, 0.1, 1, 0, 12, 25, 100}};
    CHECK(s.minimiser() == argmin);
    CHECK(*s.evaluate(argmin, space) == doctest::Approx(SurrogateEvaluator::kMinimum).epsilon(1e-15));
    // Scan a grid that contains the minimiser; nothing may beat it.
    double best = 1e9;
    ParamRecord best_rec;
    for (int P = 20; P <= 100; P += 10)
        for (int K = 1; K <= 6; ++K)
            for (double V : {0.0001, 0.05, 0.1, 0.2, 0.35, 0.5})
                for (int U = 0; U <= 1; ++U)
                    for (int B = 0; B <= 1; ++B)
                        for (int depth : {1, 6, 12, 16, 20})
                            for (int I : {20, 25, 30})
                                for (int bs : {80, 100, 120}) {
                                    ParamRecord r{{double(P), double(K), V, double(U), double(B), double(depth),
                                                   double(I), double(bs)}};
                                    const double v = *s.evaluate(r, space);
                                    if (v < best) {
                                        best = v;
                                        best_rec = r;
                                    }
                                }
    CHECK(best_rec == argmin);
    CHECK(best == doctest::Approx(0.05));
}

TEST_CASE("parameter operators respect ranges") {
    ParamProblem ml(ParamSpace::random_forest(), std::make_shared<SurrogateEvaluator>());
    Rng rng(21);
    OperatorState st;
    ParamRecord top{{100, 6, 0.5, 1, 1, 20, 30, 120}};
    for (int i = 0; i < 500; ++i) {
        auto g = ml.unary(top, rng, st);
        REQUIRE_FALSE(validate_genome(g, ml.genome_spec()).has_value());
        CHECK(std::get<ParamRecord>(g).values[0] <= 100);
        CHECK(std::get<ParamRecord>(g).values[0] >= 99);
    }
}

TEST_CASE("external evaluator protocol") {
    ParamRecord rec{{60, 3, 0.1, 1, 0, 12, 25, 100}};
    auto space = ParamSpace::random_forest();
    SUBCASE("OK replies become objectives, one child serves many requests") {
        ExternalEvaluator ev("while read cmd rest; do echo \"OK 0.25\"; done", std::chrono::seconds(5), false);
        for (int i = 0; i < 5; ++i) CHECK(*ev.evaluate(rec, space) == 0.25);
    }
    SUBCASE("request carries the canonical record") {
        ExternalEvaluator ev("while read cmd rest; do if [ \"$rest\" = \"P=60 K=3 V=0.10000000000000001 U=1 B=0 depth=12 I=25 batchsize=100\" ]; then echo OK 1; else echo ERR bad; fi; done",
                             std::chrono::seconds(5));
        CHECK(*ev.evaluate(rec, space) == 1.0);
    }
    SUBCASE("ERR, garbage and timeouts are failed evaluations") {
        ExternalEvaluator err("while read l; do echo 'ERR no model'; done", std::chrono::seconds(5));
        CHECK_FALSE(err.evaluate(rec, space).has_value());
        ExternalEvaluator junk("while read l; do echo 'hello'; done", std::chrono::seconds(5));
        CHECK_FALSE(junk.evaluate(rec, space).has_value());
        ExternalEvaluator slow("sleep 5", std::chrono::milliseconds(100));
        CHECK_FALSE(slow.evaluate(rec, space).has_value());
        ExternalEvaluator dead("exit 0", std::chrono::seconds(2));
        CHECK_FALSE(dead.evaluate(rec, space).has_value());
    }
}

// --- Loaders ---------------------------------------------------------------

TEST_CASE("instance loaders") {
    auto sq = load_tsplib(kData + "/square4.tsp");
    CHECK(sq.n == 4);
    CHECK(sq.at(0, 2) == 14.0);   // nint(10 sqrt 2)
    auto tri = load_dimacs(kData + "/triangle.col");
    CHECK(tri.n == 3);
    CHECK(tri.edges.size() == 3);
    try {
        load_volume_list(kData + "/bad_volume.txt");
        FAIL("expected a load error");
    } catch (const ContractViolation& e) {
        CHECK(std::string(e.what()).find("volume exceeds capacity") != std::string::npos);
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("malformed files report line numbers") {
    std::istringstream bad_tsp("NAME : x\nDIMENSION : 3\nEDGE_WEIGHT_TYPE : EUC_2D\nNODE_COORD_SECTION\n1 0 0\n2 zero 1\n");
    try {
        parse_tsplib(bad_tsp);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 6);
    }
    std::istringstream bad_col("p edge 3 1\ne 1 4\n");
    CHECK_THROWS_AS(parse_dimacs(bad_col), ParseError);
    std::istringstream bad_vol("0.5\nabc\n");
    CHECK_THROWS_AS(parse_volume_list(bad_vol), ParseError);
    CHECK_THROWS_AS(load_tsplib(kData + "/missing.tsp"), ParseError);
}

TEST_CASE("generated bin-packing instances") {
    auto a = generate_bpp(1000, 42), b = generate_bpp(1000, 42);
    CHECK(a.volumes == b.volumes);
    CHECK(a.volumes.size() == 1000);
    for (double v : a.volumes) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
    std::ostringstream out;
    write_volume_list(a, out);
    std::istringstream back(out.str());
    CHECK(parse_volume_list(back).volumes == a.volumes);
}
