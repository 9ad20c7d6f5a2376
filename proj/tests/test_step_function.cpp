#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "tfim/sampler.hpp"
#include "tfim/step_function.hpp"

using namespace tfim;
using Catch::Approx;

namespace {

StepFunction random_zero_mean_step(std::mt19937_64& rng, double beta, int pieces) {
    std::uniform_real_distribution<double> ub(0.0, beta), uv(-2.0, 2.0);
    std::vector<double> b{0.0};
    while (static_cast<int>(b.size()) < pieces) {
        double t = ub(rng);
        bool dup = false;
        for (double x : b)
            if (std::abs(x - t) < 1e-6) dup = true;
        if (!dup) b.push_back(t);
    }
    std::sort(b.begin(), b.end());
    std::vector<double> v(b.size());
    for (auto& x : v) x = uv(rng);
    StepFunction raw(beta, b, v);
    // subtract the mean to make it a valid weak derivative
    double mean = raw.integral() / beta;
    for (auto& x : v) x -= mean;
    return StepFunction(beta, b, v);
}

}  // namespace

TEST_CASE("evaluation, wrapping and antiderivative", "[stepfn]") {
    StepFunction f(2.0, {0.0, 0.5, 1.0}, {1.0, -1.0, 0.5});
    CHECK(f(0.25) == 1.0);
    CHECK(f(0.5) == -1.0);   // right-continuous
    CHECK(f(1.7) == 0.5);
    CHECK(f(2.25) == 1.0);   // periodic
    CHECK(f(-0.3) == 0.5);
    CHECK(f.integral() == Approx(1.0 * 0.5 - 1.0 * 0.5 + 0.5 * 1.0));
    CHECK(f.antiderivative(0.0) == 0.0);
    CHECK(f.antiderivative(0.75) == Approx(0.5 - 0.25));
    CHECK(f.antiderivative(2.0 - 1e-12) == Approx(f.integral()).margin(1e-9));
}

TEST_CASE("wrapped first piece", "[stepfn]") {
    // single breakpoint not at zero: piece covers the whole circle
    StepFunction f(1.0, {0.25, 0.75}, {2.0, -2.0});
    CHECK(f(0.1) == -2.0);  // tail of the last piece
    CHECK(f(0.3) == 2.0);
    CHECK(f.integral() == Approx(0.0).margin(1e-15));
}

TEST_CASE("triangle wave derivative", "[stepfn]") {
    double beta = 2.0;
    SECTION("level 1 is +r then -r") {
        auto w = triangle_wave_derivative(0.7, 1, beta);
        CHECK(w(0.3) == 0.7);
        CHECK(w(1.5) == -0.7);
        CHECK(w.integral() == Approx(0.0).margin(1e-15));
    }
    SECTION("alternation at dyadic midpoints and sup norm") {
        for (int n : {1, 2, 3, 5}) {
            auto w = triangle_wave_derivative(1.3, n, beta);
            CHECK(w.inf_norm() == Approx(1.3));
            CHECK(w.integral() == Approx(0.0).margin(1e-12));
            int cells = 1 << n;
            for (int i = 0; i < cells; ++i) {
                double mid = beta * (i + 0.5) / cells;
                CHECK(w(mid) == (i % 2 == 0 ? 1.3 : -1.3));
            }
        }
    }
    SECTION("r = 0 collapses to the zero function") {
        auto w = triangle_wave_derivative(0.0, 3, beta);
        CHECK(w.inf_norm() == 0.0);
    }
    CHECK_THROWS_AS(triangle_wave_derivative(1.0, 0, beta), std::invalid_argument);
}

TEST_CASE("circle reflection", "[stepfn]") {
    double beta = 1.0;
    SECTION("constant maps to itself") {
        auto c = StepFunction::constant(beta, 3.0);
        CHECK(reflect_circle(c) == c);
    }
    SECTION("indicator of [0, 1/4) reflects to the right-continuous (3/4, 1] form") {
        StepFunction ind(beta, {0.0, 0.25}, {1.0, 0.0});
        auto r = reflect_circle(ind);
        // right-continuous representative: 1 on [3/4, 1), 0 elsewhere
        for (double t : {0.0, 0.05, 0.5, 0.74}) CHECK(r(t) == 0.0);
        for (double t : {0.75, 0.76, 0.99}) CHECK(r(t) == 1.0);
    }
    SECTION("involution on random step functions") {
        std::mt19937_64 rng(11);
        for (int rep = 0; rep < 100; ++rep) {
            auto f = random_zero_mean_step(rng, 2.0, 5);
            auto rr = reflect_circle(reflect_circle(f));
            for (int i = 0; i < 64; ++i) {
                double t = 2.0 * i / 64 + 1e-4;
                CHECK(rr(t) == Approx(f(t)).margin(1e-12));
            }
        }
    }
}

TEST_CASE("plus and minus parts", "[stepfn]") {
    double beta = 1.0;
    SECTION("rejects nonzero integral") {
        auto c = StepFunction::constant(beta, 1.0);
        CHECK_THROWS_AS(plus_part(c), std::domain_error);
    }
    SECTION("zero derivative stays zero") {
        auto z = StepFunction::constant(beta, 0.0);
        CHECK(plus_part(z).inf_norm() == 0.0);
        CHECK(minus_part(z).inf_norm() == 0.0);
    }
    SECTION("level-1 wave is already fold-symmetric") {
        auto w = triangle_wave_derivative(0.9, 1, beta);
        auto p = plus_part(w);
        for (int i = 0; i < 128; ++i) {
            double t = beta * (i + 0.5) / 128;
            CHECK(p(t) == Approx(w(t)));
        }
    }
    SECTION("induced h_+ and h_- carry the reflection symmetry") {
        std::mt19937_64 rng(13);
        for (int rep = 0; rep < 20; ++rep) {
            auto f = random_zero_mean_step(rng, 1.0, 6);
            auto p = plus_part(f), m = minus_part(f);
            CHECK(p.integral() == Approx(0.0).margin(1e-10));
            CHECK(m.integral() == Approx(0.0).margin(1e-10));
            for (int i = 1; i < 100; ++i) {
                double t = beta * i / 100.0;
                CHECK(p.antiderivative(t) ==
                      Approx(p.antiderivative(beta - t)).margin(1e-10));
                CHECK(m.antiderivative(t) ==
                      Approx(m.antiderivative(beta - t)).margin(1e-10));
            }
            // h_+ equals h on the first half, h_- on the second
            for (int i = 1; i < 50; ++i) {
                double t = 0.5 * beta * i / 50.0;
                CHECK(p.antiderivative(t) == Approx(f.antiderivative(t)).margin(1e-10));
                CHECK(m.antiderivative(beta - t) ==
                      Approx(f.antiderivative(beta - t)).margin(1e-10));
            }
        }
    }
}

TEST_CASE("symmetrization", "[stepfn]") {
    double beta = 1.0;
    std::mt19937_64 rng(17);
    SECTION("t0 = 0 with plus branch is plus_part") {
        auto f = random_zero_mean_step(rng, beta, 5);
        auto a = symmetrize_at(f, 0.0, FoldBranch::plus);
        auto b = plus_part(f);
        for (int i = 0; i < 200; ++i) {
            double t = beta * (i + 0.5) / 200;
            CHECK(a(t) == Approx(b(t)).margin(1e-12));
        }
    }
    SECTION("output symmetric about t0 and t0 + beta/2") {
        for (int rep = 0; rep < 20; ++rep) {
            auto f = random_zero_mean_step(rng, beta, 5);
            double t0 = 0.31;
            for (auto branch : {FoldBranch::plus, FoldBranch::minus}) {
                auto g = symmetrize_at(f, t0, branch);
                for (int i = 1; i < 100; ++i) {
                    double s = 0.49 * beta * i / 100.0;
                    double a1 = g.antiderivative(t0 + s) - g.antiderivative(t0);
                    double a2 = g.antiderivative(t0 - s) - g.antiderivative(t0);
                    CHECK(a1 == Approx(a2).margin(1e-10));
                }
            }
        }
    }
    SECTION("double symmetrization at the same point is idempotent") {
        auto f = random_zero_mean_step(rng, beta, 6);
        double t0 = 0.2;
        auto g1 = symmetrize_at(f, t0, FoldBranch::plus);
        auto g2 = symmetrize_at(g1, t0, FoldBranch::plus);
        for (int i = 0; i < 300; ++i) {
            double t = beta * (i + 0.5) / 300;
            CHECK(g2(t) == Approx(g1(t)).margin(1e-12));
        }
    }
    SECTION("selector picks the branch with larger estimate") {
        auto f = random_zero_mean_step(rng, beta, 5);
        auto pick_plus = symmetrize_at(f, 0.1, [&](const StepFunction& h) {
            return h == symmetrize_at(f, 0.1, FoldBranch::plus) ? 2.0 : 1.0;
        });
        CHECK(pick_plus == symmetrize_at(f, 0.1, FoldBranch::plus));
    }
    CHECK_THROWS_AS(symmetrize_at(StepFunction::constant(beta, 0.0), 0.7, FoldBranch::plus),
                    std::domain_error);
}

TEST_CASE("snippet predicate", "[stepfn]") {
    double beta = 1.0;
    std::mt19937_64 rng(19);
    auto f = random_zero_mean_step(rng, beta, 5);
    SECTION("f is a level-0 snippet of itself") {
        CHECK(is_level_snippet(f, f, 0));
    }
    SECTION("h_+ and h_- are level-1 snippets of h") {
        CHECK(is_level_snippet(plus_part(f), f, 1));
        CHECK(is_level_snippet(minus_part(f), f, 1));
    }
    SECTION("W_{r,n} is a level-n snippet of W_{r,1}") {
        for (int n : {2, 3, 4})
            CHECK(is_level_snippet(triangle_wave_derivative(0.8, n, beta),
                                   triangle_wave_derivative(0.8, 1, beta), n));
    }
    SECTION("negative case") {
        auto g = random_zero_mean_step(rng, beta, 4);
        CHECK_FALSE(is_level_snippet(g, f, 1));
    }
}

TEST_CASE("zratio weight", "[stepfn]") {
    double beta = 1.0, delta = 0.7;
    SECTION("zero derivative and flipless configurations give weight 1") {
        WorldlineConfig cfg(2, beta);
        cfg.sites[0].flips = {0.2, 0.5};
        CHECK(zratio_weight(cfg, StepFunction::constant(beta, 0.0), delta) == 1.0);
        WorldlineConfig empty(2, beta);
        auto w = triangle_wave_derivative(1.0, 2, beta);
        CHECK(zratio_weight(empty, w, delta) == 1.0);
    }
    SECTION("single site two flips expands to exp(-(1/delta)(-h'(t1)+h'(t2)))") {
        WorldlineConfig cfg(1, beta);
        cfg.sites[0].flips = {0.2, 0.6};
        StepFunction h(beta, {0.0, 0.5}, {0.4, -0.4});
        double expect = std::exp(-(1.0 / delta) * (-h(0.2) + h(0.6)));
        CHECK(zratio_weight(cfg, h, delta) == Approx(expect));
    }
    SECTION("xi flip inverts the weight exactly") {
        std::mt19937_64 rng(23);
        TorusSpec spec(1, 4);
        auto w = triangle_wave_derivative(0.9, 2, beta);
        for (int rep = 0; rep < 20; ++rep) {
            auto cfg = init_free(spec, beta, 1.3, rng);
            auto flipped = cfg;
            for (auto& s : flipped.sites) s.xi ^= 1;
            CHECK(zratio_weight(cfg, w, delta) * zratio_weight(flipped, w, delta) ==
                  Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("step function json round trip", "[stepfn]") {
    StepFunction f(1.5, {0.0, 0.4, 0.9}, {1.0, -2.0, 0.5});
    auto j = to_json(f);
    auto back = step_function_from_json(j);
    CHECK(back == f);
}
