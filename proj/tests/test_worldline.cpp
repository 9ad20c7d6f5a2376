#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "tfim/sampler.hpp"
#include "tfim/worldline.hpp"

using namespace tfim;
using Catch::Approx;

namespace {

WorldlineConfig single_site(double beta, int xi, std::vector<double> flips) {
    WorldlineConfig cfg(1, beta);
    cfg.sites[0].xi = static_cast<std::uint8_t>(xi);
    cfg.sites[0].flips = std::move(flips);
    cfg.check_valid();
    return cfg;
}

}  // namespace

TEST_CASE("spin_at basics", "[worldline]") {
    auto c0 = single_site(1.0, 0, {});
    for (double t : {0.0, 0.3, 0.999}) CHECK(spin_at(c0, 0, t) == 1);

    auto c1 = single_site(1.0, 0, {0.25, 0.75});
    CHECK(spin_at(c1, 0, 0.5) == -1);
    CHECK(spin_at(c1, 0, 0.0) == 1);

    auto c2 = single_site(1.0, 1, {0.25, 0.75});
    CHECK(spin_at(c2, 0, 0.9) == -1);  // (-1)^{1+2}

    CHECK_THROWS_AS(spin_at(c1, 0, 1.0), std::domain_error);
    CHECK_THROWS_AS(spin_at(c1, 0, -0.1), std::domain_error);
}

TEST_CASE("spin_at is right-continuous and flips exactly at flip times", "[worldline]") {
    auto cfg = single_site(2.0, 0, {0.5, 1.25});
    double eps = 1e-9;
    for (double tf : {0.5, 1.25}) {
        CHECK(spin_at(cfg, 0, tf) == spin_at(cfg, 0, tf + eps));
        CHECK(spin_at(cfg, 0, tf) == -spin_at(cfg, 0, tf - eps));
    }
    // periodicity: spin just before beta equals spin at 0 (even flip count)
    CHECK(spin_at(cfg, 0, 2.0 - eps) == spin_at(cfg, 0, 0.0));
}

TEST_CASE("validation rejects broken configurations", "[worldline]") {
    WorldlineConfig bad(1, 1.0);
    bad.sites[0].flips = {0.5};
    CHECK_THROWS_AS(bad.check_valid(), std::domain_error);
    bad.sites[0].flips = {0.5, 0.4};
    CHECK_THROWS_AS(bad.check_valid(), std::domain_error);
    bad.sites[0].flips = {0.5, 1.5};
    CHECK_THROWS_AS(bad.check_valid(), std::domain_error);
}

TEST_CASE("overlap integral", "[worldline]") {
    WorldlineConfig cfg(2, 1.0);
    SECTION("identical trajectories") {
        cfg.sites[0].flips = {0.2, 0.7};
        cfg.sites[1].flips = {0.2, 0.7};
        CHECK(overlap_integral(cfg, 0, 1) == Approx(1.0));
        CHECK(overlap_integral(cfg, 0, 0) == Approx(1.0));
    }
    SECTION("quarter-phase flips cancel") {
        cfg.sites[1].flips = {0.25, 0.75};
        CHECK(overlap_integral(cfg, 0, 1) == Approx(0.0).margin(1e-15));
    }
    SECTION("global flip negates") {
        cfg.sites[0].flips = {0.1, 0.6};
        cfg.sites[1].flips = {0.1, 0.6};
        cfg.sites[1].xi = 1;
        CHECK(overlap_integral(cfg, 0, 1) == Approx(-1.0));
    }
}

TEST_CASE("overlap symmetry and bound on random configurations", "[worldline]") {
    std::mt19937_64 rng(3);
    TorusSpec spec(1, 4);
    for (int rep = 0; rep < 50; ++rep) {
        auto cfg = init_free(spec, 2.0, 1.5, rng);
        double oxy = overlap_integral(cfg, 0, 1);
        double oyx = overlap_integral(cfg, 1, 0);
        CHECK(oxy == Approx(oyx).margin(1e-13));
        CHECK(std::abs(oxy) <= 2.0 + 1e-12);
    }
}

TEST_CASE("overlap window consistency", "[worldline]") {
    std::mt19937_64 rng(4);
    TorusSpec spec(1, 4);
    auto cfg = init_free(spec, 1.0, 2.0, rng);
    double full = overlap_integral(cfg, 0, 1);
    double split = overlap_window(cfg, 0, 1, 0.0, 0.37) + overlap_window(cfg, 0, 1, 0.37, 1.0);
    CHECK(full == Approx(split).margin(1e-13));
}

TEST_CASE("interaction action", "[worldline]") {
    TorusSpec spec(1, 4);
    WorldlineConfig cfg(4, 1.0);
    CHECK(interaction_action(cfg, spec, 1.0) == Approx(4.0));  // 4 edges, overlap 1
    CHECK(interaction_action(cfg, spec, 0.0) == 0.0);
    for (auto& s : cfg.sites) s.xi ^= 1;  // global flip leaves it unchanged
    CHECK(interaction_action(cfg, spec, 1.0) == Approx(4.0));
    WorldlineConfig wrong(3, 1.0);
    CHECK_THROWS_AS(interaction_action(wrong, spec, 1.0), std::domain_error);
}

TEST_CASE("total flip count", "[worldline]") {
    WorldlineConfig cfg(2, 1.0);
    CHECK(total_flip_count(cfg) == 0);
    cfg.sites[0].flips = {0.1, 0.2};
    cfg.sites[1].flips = {0.1, 0.2, 0.3, 0.4};
    CHECK(total_flip_count(cfg) == 6);
}

TEST_CASE("fourier transform of sigma", "[worldline]") {
    TorusSpec spec(1, 4);
    WorldlineConfig up(4, 1.5);
    SECTION("all-up configuration") {
        auto v00 = fourier_transform_sigma(up, spec, 0, 0);
        CHECK(v00.real() == Approx(1.5 * 4));
        CHECK(v00.imag() == Approx(0.0).margin(1e-12));
        auto v01 = fourier_transform_sigma(up, spec, 0, 1);
        CHECK(std::abs(v01) == Approx(0.0).margin(1e-12));
    }
    SECTION("signed lengths cancel") {
        WorldlineConfig cfg(4, 1.0);
        cfg.sites[0].flips = {0.25, 0.75};
        auto v = fourier_transform_sigma(cfg, spec, 0, 0);
        // site 0 contributes 0, the three others beta each
        CHECK(v.real() == Approx(3.0));
    }
    SECTION("conjugate symmetry under index negation") {
        std::mt19937_64 rng(5);
        auto cfg = init_free(spec, 1.0, 2.0, rng);
        for (int m = 0; m < 4; ++m)
            for (int j = 0; j <= 3; ++j) {
                auto a = fourier_transform_sigma(cfg, spec, m, j);
                auto b = fourier_transform_sigma(cfg, spec, negate_momentum_index(spec, m), -j);
                CHECK(a.real() == Approx(b.real()).margin(1e-12));
                CHECK(a.imag() == Approx(-b.imag()).margin(1e-12));
            }
    }
    SECTION("matches direct quadrature of the definition") {
        std::mt19937_64 rng(6);
        auto cfg = init_free(spec, 1.0, 3.0, rng);
        int m = 1, j = 2;
        auto fast = fourier_transform_sigma(cfg, spec, m, j);
        // Riemann sum over a fine grid
        int n = 200000;
        std::complex<double> slow = 0.0;
        Momentum k = momentum_at(spec, m);
        for (int x = 0; x < 4; ++x) {
            std::complex<double> ph = std::polar(1.0, k.components[0] * x);
            for (int i = 0; i < n; ++i) {
                double t = (i + 0.5) / n;
                double l = 2 * std::numbers::pi * j / 1.0;
                slow += ph * double(spin_at(cfg, x, t)) * std::polar(1.0 / n, l * t);
            }
        }
        CHECK(fast.real() == Approx(slow.real()).margin(5e-4));
        CHECK(fast.imag() == Approx(slow.imag()).margin(5e-4));
    }
}

TEST_CASE("parseval sanity of the truncated fourier mass", "[worldline]") {
    TorusSpec spec(1, 4);
    std::mt19937_64 rng(7);
    for (int rep = 0; rep < 10; ++rep) {
        auto cfg = init_free(spec, 2.0, 1.0, rng);
        double beta = cfg.beta;
        double mass = 0.0;
        for (int m = 0; m < spec.n_sites; ++m)
            for (int j = -16; j <= 16; ++j)
                mass += std::norm(fourier_transform_sigma(cfg, spec, m, j));
        mass /= beta * spec.n_sites;
        CHECK(mass <= beta * spec.n_sites + 1e-9);
    }
}

TEST_CASE("worldline json round trip is bit exact", "[worldline]") {
    std::mt19937_64 rng(8);
    TorusSpec spec(2, 4);
    auto cfg = init_free(spec, 1.37, 2.0, rng);
    auto j = to_json(cfg);
    auto text = j.dump();
    auto back = worldline_from_json(nlohmann::json::parse(text));
    REQUIRE(back.n_sites() == cfg.n_sites());
    CHECK(back.beta == cfg.beta);
    for (int x = 0; x < cfg.n_sites(); ++x) {
        CHECK(back.sites[x].xi == cfg.sites[x].xi);
        REQUIRE(back.sites[x].flips.size() == cfg.sites[x].flips.size());
        for (size_t i = 0; i < cfg.sites[x].flips.size(); ++i)
            CHECK(back.sites[x].flips[i] == cfg.sites[x].flips[i]);  // exact
    }
}
