#include <catch2/catch_amalgamated.hpp>

#include "bvpcert/measure.hpp"
#include "bvpcert/sampling.hpp"
#include "helpers.hpp"

using namespace bvpcert;

TEST_CASE("step measure reproduces the point-evaluation law") {
    Grid g(1001);
    Trajectory lin = fixtures::sample_trajectory(g, {[](double t) { return t; },
                                                     [](double) { return 1.0; }});
    CHECK(stieltjes(lin, 0, BVMeasure::step(0.5, 2.0)) == Catch::Approx(1.0).margin(1e-12));
    CHECK(stieltjes(lin, 0, BVMeasure::zero()) == 0.0);
}

TEST_CASE("density part integrates against the trajectory") {
    Grid g(101);
    Trajectory lin = fixtures::sample_trajectory(g, {[](double t) { return t; }});
    BVMeasure density({}, parse_scalar("1"));
    CHECK(stieltjes(lin, 0, density) == Catch::Approx(0.5).margin(1e-12));
    BVMeasure ramp({}, parse_scalar("1 - t"));
    CHECK(stieltjes(lin, 0, ramp) == Catch::Approx(1.0 / 6.0).margin(1e-10));
}

TEST_CASE("callable form matches trajectory form") {
    Grid g(101);
    BVMeasure w({{0.25, 1.5}}, parse_scalar("t"));
    double a = stieltjes([](double t) { return std::cos(t); }, w, g);
    Trajectory c = fixtures::sample_trajectory(g, {[](double t) { return std::cos(t); },
                                                   [](double t) { return -std::sin(t); }});
    CHECK(a == Catch::Approx(stieltjes(c, 0, w)).margin(1e-9));
}

TEST_CASE("total variation") {
    Grid g(101);
    CHECK(total_variation(BVMeasure::step(0.3, 2.0), g) == 2.0);
    CHECK(total_variation(BVMeasure::zero(), g) == 0.0);
    BVMeasure w({{0.2, 1.0}, {0.8, -1.0}}, parse_scalar("1"));
    CHECK(total_variation(w, g) == Catch::Approx(3.0).margin(1e-12));
}

TEST_CASE("stieltjes is linear in the integrand") {
    Grid g(201);
    Rng rng(21);
    BVMeasure w({{0.1, 0.7}, {0.9, -0.3}}, parse_scalar("t*(1-t)"));
    for (int it = 0; it < 10; ++it) {
        Trajectory f = random_trajectory(g, 1, rng);
        Trajectory h = random_trajectory(g, 1, rng);
        double alpha = rng.uniform(-2.0, 2.0);
        double lhs = stieltjes(axpy(alpha, f, h), 0, w);
        double rhs = alpha * stieltjes(f, 0, w) + stieltjes(h, 0, w);
        CHECK(lhs == Catch::Approx(rhs).margin(1e-12));
    }
}

TEST_CASE("stieltjes is bounded by total variation times sup") {
    Grid g(201);
    Rng rng(22);
    BVMeasure w({{0.33, 1.2}, {0.66, -0.8}}, parse_scalar("sin(pi*t)"));
    double tv = total_variation(w, g);
    for (int it = 0; it < 25; ++it) {
        Trajectory f = random_trajectory(g, 1, rng);
        double bound = tv * f.sup_norm();
        // interpolation at off-node jumps can poke above the nodal sup by a sliver
        CHECK(std::fabs(stieltjes(f, 0, w)) <= bound * (1.0 + 1e-6) + 1e-12);
    }
}

TEST_CASE("multipoint identity matrix at zero") {
    auto omega = from_multipoint({0.0}, {{{1, 0}, {0, 1}}});
    BoundaryOperator B(2, omega);
    Grid g(101);
    Trajectory sq = fixtures::sample_trajectory(g, {[](double t) { return t * t; },
                                                    [](double t) { return 2 * t; }});
    std::vector<double> v = apply_B(B, sq);
    CHECK(v[0] == Catch::Approx(0.0).margin(1e-15));
    CHECK(v[1] == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("multipoint Dirichlet pair") {
    auto omega = from_multipoint({0.0, 1.0}, {{{1, 0}, {0, 0}}, {{0, 0}, {1, 0}}});
    BoundaryOperator B(2, omega);
    Grid g(101);
    Trajectory sq = fixtures::sample_trajectory(g, {[](double t) { return t * t; },
                                                    [](double t) { return 2 * t; }});
    std::vector<double> v = apply_B(B, sq);
    CHECK(v[0] == Catch::Approx(0.0).margin(1e-15));
    CHECK(v[1] == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("multipoint zero matrix gives the zero operator") {
    auto omega = from_multipoint({0.5}, {{{0, 0}, {0, 0}}});
    BoundaryOperator B(2, omega);
    Grid g(11);
    Trajectory any = fixtures::sample_trajectory(g, {[](double t) { return std::sin(t); },
                                                     [](double t) { return std::cos(t); }});
    std::vector<double> v = apply_B(B, any);
    CHECK(v[0] == 0.0);
    CHECK(v[1] == 0.0);
}

TEST_CASE("multipoint agrees with the direct sum on random configurations") {
    Rng rng(23);
    Grid g(201);
    for (int cfg = 0; cfg < 20; ++cfg) {
        const int n = 2 + static_cast<int>(rng.bits() % 2); // n in {2,3}
        const int q = 1 + static_cast<int>(rng.bits() % 3);
        std::vector<double> points;
        std::vector<std::vector<std::vector<double>>> mats;
        for (int p = 0; p < q; ++p) {
            points.push_back(rng.uniform(0.0, 1.0));
            std::vector<std::vector<double>> mat(n, std::vector<double>(n));
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < n; ++c) mat[r][c] = rng.uniform(-2.0, 2.0);
            mats.push_back(std::move(mat));
        }
        BoundaryOperator B(n, from_multipoint(points, mats));
        Trajectory x = random_trajectory(g, n, rng);
        std::vector<double> via_measures = apply_B(B, x);
        std::vector<double> direct(n, 0.0);
        for (int p = 0; p < q; ++p)
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < n; ++c)
                    direct[r] += mats[p][r][c] * x.eval(points[p], c);
        for (int r = 0; r < n; ++r)
            CHECK(via_measures[r] == Catch::Approx(direct[r]).margin(1e-10));
    }
}

TEST_CASE("measure validation") {
    CHECK_THROWS_AS(BVMeasure({{1.5, 1.0}}, std::nullopt), ShapeError);
    CHECK_THROWS_AS(from_multipoint({0.0, 1.0}, {{{1.0}}}), ShapeError);
    // coincident jumps merge
    BVMeasure w({{0.5, 1.0}, {0.5, 2.0}}, std::nullopt);
    CHECK(w.jumps().size() == 1);
    CHECK(w.jumps()[0].weight == 3.0);
}
