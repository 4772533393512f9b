#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "bvpcert/cli.hpp"
#include "bvpcert/rng.hpp"
#include "bvpcert/sampling.hpp"
#include "helpers.hpp"

using namespace bvpcert;

TEST_CASE("grid endpoints are exact") {
    Grid g(11);
    CHECK(g.node(0) == 0.0);
    CHECK(g.node(10) == 1.0);
    CHECK(g.spacing() == Catch::Approx(0.1).margin(1e-17));
    CHECK_THROWS_AS(Grid(1), ShapeError);
}

TEST_CASE("eval reproduces stored nodes bitwise") {
    Grid g(37);
    Rng rng(11);
    Trajectory x = random_trajectory(g, 3, rng);
    for (int i = 0; i < g.size(); ++i)
        for (int j = 0; j < 3; ++j) CHECK(x.eval(g.node(i), j) == x.value(i, j));
}

TEST_CASE("Hermite interpolation is exact on cubics") {
    Grid g(11);
    Trajectory lin = fixtures::sample_trajectory(g, {[](double t) { return t; },
                                                     [](double) { return 1.0; }});
    CHECK(lin.eval(0.25) == Catch::Approx(0.25).margin(1e-15));

    Trajectory cub = fixtures::sample_trajectory(g, {[](double t) { return t * t * t; },
                                                     [](double t) { return 3 * t * t; }});
    CHECK(cub.eval(0.05) == Catch::Approx(1.25e-4).margin(1e-12));
}

TEST_CASE("eval argument validation") {
    Grid g(11);
    Trajectory x(g, 2);
    CHECK_THROWS_AS(x.eval(0.5, 2), ShapeError);
    CHECK_THROWS_AS(x.eval(-0.1, 0), ShapeError);
    CHECK_THROWS_AS(x.eval(1.1, 0), ShapeError);
}

TEST_CASE("sup norm") {
    Grid g(1001);
    CHECK(Trajectory(g, 1).sup_norm() == 0.0);
    Trajectory para = fixtures::sample_trajectory(g, {[](double t) { return t * (t - 1) / 2; }});
    CHECK(para.sup_norm() == Catch::Approx(0.125).margin(1e-9));
    Trajectory sine = fixtures::sample_trajectory(g, {[](double t) { return std::sin(M_PI * t); }});
    CHECK(sine.sup_norm() == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("sup norm is a norm on nodal data") {
    Grid g(101);
    Rng rng(5);
    for (int i = 0; i < 20; ++i) {
        Trajectory x = random_trajectory(g, 1, rng);
        Trajectory y = random_trajectory(g, 1, rng);
        double alpha = rng.uniform(-4.0, 4.0);
        CHECK(scaled(alpha, x).sup_norm() == std::fabs(alpha) * x.sup_norm());
        CHECK(axpy(1.0, x, y).sup_norm() <= (x.sup_norm() + y.sup_norm()) * (1.0 + 1e-14));
    }
}

TEST_CASE("quadrature on polynomials") {
    Grid g(11);
    std::vector<double> one(11, 1.0);
    CHECK(quad(one, g) == 1.0);
    std::vector<double> lin(11);
    for (int i = 0; i < 11; ++i) lin[i] = g.node(i);
    CHECK(quad(lin, g) == Catch::Approx(0.5).margin(1e-12));

    Grid ge(10); // even node count exercises the trapezoid tail panel
    std::vector<double> line(10);
    for (int i = 0; i < 10; ++i) line[i] = ge.node(i);
    CHECK(quad(line, ge) == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("quadrature of the exponential") {
    Grid g(101);
    std::vector<double> f(101);
    for (int i = 0; i < 101; ++i) f[i] = std::exp(g.node(i));
    CHECK(quad(f, g) == Catch::Approx(M_E - 1.0).margin(1e-8));
}

TEST_CASE("quadrature converges at fourth order") {
    std::vector<std::pair<double, double>> h_err;
    for (int m : {11, 21, 41, 81}) {
        Grid g(m);
        std::vector<double> f(m);
        for (int i = 0; i < m; ++i) f[i] = std::sin(2 * M_PI * g.node(i)) + 1.0;
        h_err.emplace_back(g.spacing(), std::fabs(quad(f, g) - 1.0));
    }
    CHECK(fit_order(h_err) >= 3.5);
}

TEST_CASE("cumulative quadrature matches closed forms") {
    Grid g(101);
    std::vector<double> f(101);
    for (int i = 0; i < 101; ++i) f[i] = std::cos(2 * g.node(i));
    std::vector<double> I = cumquad(f, g);
    CHECK(I[0] == 0.0);
    for (int i = 0; i < 101; i += 10)
        CHECK(I[i] == Catch::Approx(std::sin(2 * g.node(i)) / 2).margin(1e-9));
}

TEST_CASE("axpy") {
    Grid g(11);
    Trajectory x = fixtures::sample_trajectory(g, {[](double t) { return t; }});
    Trajectory y = fixtures::sample_trajectory(g, {[](double) { return 1.0; }});
    CHECK(fixtures::sup_diff(axpy(0.0, x, y), y) == 0.0);
    CHECK(fixtures::sup_diff(axpy(1.0, x, Trajectory(g, 1)), x) == 0.0);
    CHECK(axpy(2.0, x, y).eval(0.5) == Catch::Approx(2.0).margin(1e-14));
    Trajectory wrong(Grid(12), 1);
    CHECK_THROWS_AS(axpy(1.0, x, wrong), ShapeError);
}

TEST_CASE("csv round trip is bitwise") {
    Grid g(17);
    Rng rng(3);
    Trajectory x = random_trajectory(g, 2, rng);
    std::ostringstream os;
    write_csv(os, x);
    std::istringstream is(os.str());
    Trajectory back = read_csv(is);
    REQUIRE(back.nodes() == x.nodes());
    REQUIRE(back.order() == x.order());
    for (int i = 0; i < x.nodes(); ++i)
        for (int j = 0; j < x.order(); ++j) CHECK(back.value(i, j) == x.value(i, j));
}

TEST_CASE("csv validation") {
    std::istringstream empty("");
    CHECK_THROWS_AS(read_csv(empty), ShapeError);
    std::istringstream bad_header("a,b\n0,1\n1,2\n");
    CHECK_THROWS_AS(read_csv(bad_header), ShapeError);
    std::istringstream ragged("t,x\n0,1\n0.5,1,9\n1,2\n");
    CHECK_THROWS_AS(read_csv(ragged), ShapeError);
    std::istringstream bad_t("t,x\n0,1\n0.3,1\n1,2\n");
    CHECK_THROWS_AS(read_csv(bad_t), ShapeError);
}

TEST_CASE("derivative-column consistency check") {
    Grid g(101);
    Trajectory good = fixtures::sample_trajectory(
        g, {[](double t) { return std::sin(2 * M_PI * t); },
            [](double t) { return 2 * M_PI * std::cos(2 * M_PI * t); }});
    std::vector<double> defects = consistency_defects(good);
    REQUIRE(defects.size() == 1);
    CHECK(defects[0] < 1e-6);

    Trajectory bad = good;
    bad.at(50, 0) += 0.1;
    CHECK(consistency_defects(bad)[0] > 0.05);
}
