#include <catch2/catch_amalgamated.hpp>

#include <numbers>
#include <random>
#include <set>

#include "tfim/lattice.hpp"

using namespace tfim;
using Catch::Approx;

namespace {

// brute-force adjacency straight from the congruence definition
bool adjacent_bruteforce(const TorusSpec& s, int x, int y) {
    int diff = 0;
    for (int j = 0; j < s.dim; ++j) {
        int a = s.coord(x, j), b = s.coord(y, j);
        if (a == b) continue;
        ++diff;
        int d = ((a - b) % s.side + s.side) % s.side;
        if (d != 1 && d != s.side - 1) return false;
    }
    return diff == 1;
}

}  // namespace

TEST_CASE("ring adjacency", "[lattice]") {
    TorusSpec s(1, 4);
    CHECK(s.n_sites == 4);
    CHECK(s.neighbors(0) == std::vector<int>{1, 3});
    CHECK_THROWS_AS(s.neighbors(4), std::domain_error);
    CHECK_THROWS_AS(s.neighbors(-1), std::domain_error);
}

TEST_CASE("2d neighbors", "[lattice]") {
    TorusSpec s(2, 4);
    // (0,0) packed as 0; neighbours (1,0), (3,0), (0,1), (0,3)
    std::set<int> got;
    for (int y : s.neighbors(0)) got.insert(y);
    std::set<int> want{4, 12, 1, 3};
    CHECK(got == want);
}

TEST_CASE("side-2 torus has single bonds", "[lattice]") {
    TorusSpec s(1, 2);
    CHECK(s.neighbors(0) == std::vector<int>{1});
    CHECK(s.edges().size() == 1);
}

TEST_CASE("edge list enumerates each unordered adjacent pair once", "[lattice]") {
    for (auto [d, side] : {std::pair{1, 4}, {1, 6}, {2, 4}, {3, 4}}) {
        TorusSpec s(d, side);
        auto edges = s.edges();
        std::set<std::pair<int, int>> seen;
        for (auto [x, y] : edges) {
            auto e = std::minmax(x, y);
            CHECK(adjacent_bruteforce(s, x, y));
            CHECK(!seen.count({e.first, e.second}));
            seen.insert({e.first, e.second});
        }
        // count from the adjacency predicate
        int pairs = 0;
        for (int x = 0; x < s.n_sites; ++x)
            for (int y = x + 1; y < s.n_sites; ++y)
                if (adjacent_bruteforce(s, x, y)) ++pairs;
        CHECK(static_cast<int>(edges.size()) == pairs);
        CHECK(static_cast<int>(edges.size()) == s.n_sites * d);
    }
}

TEST_CASE("laplacian entries", "[lattice]") {
    TorusSpec s1(1, 4);
    CHECK(laplacian_entry(s1, 0, 0) == 1.0);
    CHECK(laplacian_entry(s1, 0, 1) == -0.5);
    CHECK(laplacian_entry(s1, 0, 2) == 0.0);
    TorusSpec s3(3, 4);
    CHECK(laplacian_entry(s3, 5, 5) == 3.0);
}

TEST_CASE("laplacian row sums vanish for side >= 4", "[lattice]") {
    for (auto [d, side] : {std::pair{1, 4}, {2, 4}, {1, 6}}) {
        TorusSpec s(d, side);
        for (int x = 0; x < s.n_sites; ++x) {
            double row = 0.0;
            for (int y = 0; y < s.n_sites; ++y) row += laplacian_entry(s, x, y);
            CHECK(row == Approx(0.0).margin(1e-14));
        }
    }
}

TEST_CASE("quadratic form equals matrix form on random vectors", "[lattice]") {
    std::mt19937_64 rng(42);
    std::normal_distribution<double> gauss;
    for (auto [d, side] : {std::pair{1, 4}, {2, 4}}) {
        TorusSpec s(d, side);
        for (int rep = 0; rep < 100; ++rep) {
            std::vector<double> u(s.n_sites);
            for (auto& v : u) v = gauss(rng);
            double direct = laplacian_quadratic_form(s, u);
            double matrix = 0.0;
            for (int x = 0; x < s.n_sites; ++x)
                for (int y = 0; y < s.n_sites; ++y)
                    matrix += laplacian_entry(s, x, y) * u[x] * u[y];
            CHECK(direct == Approx(matrix).epsilon(1e-10).margin(1e-12));
            CHECK(direct >= 0.0);
        }
    }
}

TEST_CASE("quadratic form examples", "[lattice]") {
    TorusSpec s(1, 4);
    CHECK(laplacian_quadratic_form(s, {1, 1, 1, 1}) == 0.0);
    CHECK(laplacian_quadratic_form(s, {1, 0, 0, 0}) == Approx(1.0));
    CHECK_THROWS_AS(laplacian_quadratic_form(s, {1, 0}), std::domain_error);
}

TEST_CASE("momentum grid", "[lattice]") {
    TorusSpec s2(1, 2);
    auto g2 = momentum_grid(s2);
    REQUIRE(g2.size() == 2);
    CHECK(g2[0].components[0] == Approx(0.0));
    CHECK(g2[1].components[0] == Approx(std::numbers::pi));

    TorusSpec s4(1, 4);
    auto g4 = momentum_grid(s4);
    REQUIRE(g4.size() == 4);
    CHECK(g4[1].components[0] == Approx(std::numbers::pi / 2));
    CHECK(g4[2].components[0] == Approx(std::numbers::pi));
    CHECK(g4[3].components[0] == Approx(-std::numbers::pi / 2));

    CHECK(momentum_grid(TorusSpec(2, 4)).size() == 16);

    // components are exact multiples of 2*pi/side, folded into (-pi, pi]
    for (const auto& k : g4)
        for (double c : k.components) {
            CHECK(c > -std::numbers::pi - 1e-12);
            CHECK(c <= std::numbers::pi + 1e-12);
            double m = c * 4 / (2 * std::numbers::pi);
            CHECK(std::abs(m - std::round(m)) < 1e-12);
        }
}

TEST_CASE("momentum negation stays on grid", "[lattice]") {
    TorusSpec s(2, 4);
    for (int m = 0; m < s.n_sites; ++m) {
        int neg = negate_momentum_index(s, m);
        auto k = momentum_at(s, m), nk = momentum_at(s, neg);
        for (int a = 0; a < s.dim; ++a) {
            double sum = k.components[a] + nk.components[a];
            double folded = std::remainder(sum, 2 * std::numbers::pi);
            CHECK(folded == Approx(0.0).margin(1e-12));
        }
        CHECK(negate_momentum_index(s, neg) == m);
    }
}

TEST_CASE("lhat values and positivity", "[lattice]") {
    Momentum zero{{0.0}};
    CHECK(lhat(zero) == 0.0);
    Momentum pi1{{std::numbers::pi}};
    CHECK(lhat(pi1) == Approx(2.0));
    Momentum k2{{std::numbers::pi / 2, std::numbers::pi}};
    CHECK(lhat(k2) == Approx(3.0));

    TorusSpec s(2, 6);
    for (int m = 0; m < s.n_sites; ++m) {
        double v = lhat(s, m);
        if (m == 0)
            CHECK(v == 0.0);
        else
            CHECK(v > 0.0);
        CHECK(v <= 2.0 * s.dim + 1e-12);
    }
}

TEST_CASE("spec validation", "[lattice]") {
    CHECK_THROWS_AS(TorusSpec(1, 3), std::invalid_argument);
    CHECK_THROWS_AS(TorusSpec(1, 0), std::invalid_argument);
    CHECK_THROWS_AS(TorusSpec(0, 4), std::invalid_argument);
}
