#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "bvpcert/certify.hpp"
#include "bvpcert/sampling.hpp"
#include "helpers.hpp"

using namespace bvpcert;
using fixtures::dirichlet2;
using fixtures::second_derivative;

TEST_CASE("A0 of the Dirichlet second-derivative problem") {
    // closed form: max_t integral |G(t,s)| ds = max_t t(1-t)/2 = 1/8
    Grid g(1001);
    FundamentalSystem F = fundamental_system(second_derivative(), g);
    BoundaryOperator B = dirichlet2();
    BoundaryMatrix BM = boundary_matrix(B, F.basis());
    double a0 = compute_A0(F, B, BM, 201);
    CHECK(a0 == Catch::Approx(0.125).margin(1e-3));
    CHECK(a0 >= 0.0);
}

TEST_CASE("A0 of the first-order initial value operator") {
    Grid g(1001);
    FundamentalSystem F = fundamental_system(fixtures::first_derivative(), g);
    BoundaryOperator B = BoundaryOperator::zero(1);
    B.omega(0, 0) = BVMeasure::step(0.0, 1.0);
    BoundaryMatrix BM = boundary_matrix(B, F.basis());
    CHECK(compute_A0(F, B, BM, 201) == Catch::Approx(1.0).margin(1e-3));
}

TEST_CASE("A0 is stable under probe refinement") {
    Grid g(1001);
    FundamentalSystem F = fundamental_system(second_derivative(), g);
    BoundaryOperator B = dirichlet2();
    BoundaryMatrix BM = boundary_matrix(B, F.basis());
    double prev_err = std::numeric_limits<double>::infinity();
    bool all_tiny = true;
    for (int probes : {51, 101, 201}) {
        double a0 = compute_A0(F, B, BM, probes);
        double err = std::fabs(a0 - 0.125);
        CHECK(err <= 1e-3);
        all_tiny = all_tiny && err <= 1e-9;
        if (!all_tiny) CHECK(err <= prev_err * (1.0 + 1e-6));
        prev_err = err;
    }
}

TEST_CASE("contraction certificate arithmetic") {
    auto [q1, p1] = contraction_certificate(0.125, 4.0, 1.0, 0.1);
    CHECK(q1 == Catch::Approx(0.525).margin(1e-15));
    CHECK(p1);
    auto [q2, p2] = contraction_certificate(0.125, 4.0, 0.0, 0.0);
    CHECK(q2 == 0.0);
    CHECK(p2);
    auto [q3, p3] = contraction_certificate(1.0, 1.0, 1.0, 1.0);
    CHECK(q3 == 2.0);
    CHECK(!p3);
    CHECK_THROWS_AS(contraction_certificate(-0.1, 1, 1, 1), ShapeError);
}

TEST_CASE("Lipschitz constant of the semilinear inverse") {
    CHECK(lipschitz_K(0.125, 4.0, 0.525) == Catch::Approx(4.0 / 0.475).margin(1e-12));
    CHECK(lipschitz_K(0.125, 4.0, 0.0) == 4.0);
    CHECK_THROWS_AS(lipschitz_K(0.125, 4.0, 1.0), CertificateError);
    CHECK_THROWS_AS(lipschitz_K(0.125, 4.0, 1.5), CertificateError);
}

TEST_CASE("sampled Lipschitz estimates") {
    Rng rng(51);
    double sine = estimate_lipschitz(parse_scalar("sin(x)"), -10.0, 10.0, 100000, rng);
    CHECK(sine >= 0.99);
    CHECK(sine <= 1.0 + 1e-9);
    CHECK(estimate_lipschitz(parse_scalar("3"), -10.0, 10.0, 1000, rng) == 0.0);
    double affine = estimate_lipschitz(parse_scalar("2*x"), -10.0, 10.0, 1000, rng);
    CHECK(affine == Catch::Approx(2.0).margin(1e-9));
}

TEST_CASE("zero-data anchor M0") {
    ProblemSpec spec = fixtures::semilinear_multipoint(501);
    CertifiedProblem cp = certify_problem(spec);
    REQUIRE(cp.cert.m0.has_value());
    CHECK(*cp.cert.m0 == 0.0); // psi(0) = 0 and eta(0) = 0 keep the zero fixed point

    // shifted nonlinearity: contraction a-priori envelope A0 * sup|psi| / (1-q)
    ProblemSpec shifted = fixtures::make_spec(second_derivative(), dirichlet2(),
                                              "0.1*sin(x) + 0.05", {"0", "0"}, {"0", "0"},
                                              GOperator{}, 0.1, 0.0, std::nullopt, 501);
    CertifiedProblem cs = certify_problem(shifted);
    REQUIRE(cs.cert.m0.has_value());
    CHECK(*cs.cert.m0 > 0.0);
    double envelope = cs.cert.a0 * 0.15 / (1.0 - cs.cert.q);
    CHECK(*cs.cert.m0 <= envelope + 1e-9);
}

TEST_CASE("ball certificate in user-bound mode") {
    ProblemSpec spec = fixtures::bounded_g(301);
    spec.bound_C = 2.0;
    Grid g(spec.num.m);
    FundamentalSystem F = fundamental_system(spec.L, g);
    Rng rng(52);
    const double k = 8.42105, m0 = 0.0;
    BallCertificate ball = ball_certificate(spec, F, k, m0, rng);
    CHECK(ball.mode == BallCertificate::Mode::UserBound);
    CHECK(ball.verdict == BallCertificate::Verdict::Pass);
    CHECK(!ball.empirical);
    CHECK(ball.radius == m0 + k * 2.0);
    CHECK(ball.radius == Catch::Approx(16.8421).margin(1e-4));
    // algebraic round trip: C = (M - m0)/k to one ulp
    CHECK((ball.radius - m0) / k == Catch::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("ball certificate for a vanishing forcing pair") {
    ProblemSpec spec = fixtures::semilinear_multipoint(301);
    Grid g(spec.num.m);
    FundamentalSystem F = fundamental_system(spec.L, g);
    Rng rng(53);
    BallCertificate ball = ball_certificate(spec, F, 5.0, 0.25, rng);
    CHECK(ball.verdict == BallCertificate::Verdict::Pass);
    CHECK(ball.radius == 0.25); // M = M0
    CHECK(!ball.empirical);
}

TEST_CASE("ball certificate sweep mode is labeled empirical") {
    ProblemSpec spec = fixtures::bounded_g(301);
    spec.bound_C.reset(); // force the sweep
    Grid g(spec.num.m);
    FundamentalSystem F = fundamental_system(spec.L, g);
    Rng rng(54);
    BallCertificate ball = ball_certificate(spec, F, 4.05, 0.0, rng);
    CHECK(ball.mode == BallCertificate::Mode::Sweep);
    CHECK(ball.empirical);
    CHECK(ball.verdict == BallCertificate::Verdict::Pass);
    // |G| <= 1, so any swept M >= k covers it; the schedule finds one
    CHECK(ball.radius >= 4.0);
}

TEST_CASE("sublinearity probe") {
    Grid g(301);
    Rng rng(55);

    ProblemSpec zero = fixtures::semilinear_multipoint(301);
    auto curve0 = sublinearity_probe(zero, g, rng);
    for (const auto& p : curve0) CHECK(p.ratio == 0.0);
    CHECK(sublinear_trend(curve0));

    ProblemSpec bounded = fixtures::bounded_g(301);
    auto curve1 = sublinearity_probe(bounded, g, rng);
    for (const auto& p : curve1) CHECK(p.ratio <= (1.0 + 1e-12) / p.norm);
    CHECK(sublinear_trend(curve1));

    GOperator ident;
    ident.kind = GOperator::Kind::Pointwise;
    ident.expr = parse_scalar("x");
    ProblemSpec linear = fixtures::make_spec(second_derivative(), dirichlet2(), "0", {"0", "0"},
                                             {"0", "0"}, std::move(ident), 0.0, 0.0, std::nullopt,
                                             301);
    auto curve2 = sublinearity_probe(linear, g, rng);
    for (const auto& p : curve2) CHECK(p.ratio == Catch::Approx(1.0).margin(1e-9));
    CHECK(!sublinear_trend(curve2));
}

TEST_CASE("certificate internal consistency on the standard fixture") {
    ProblemSpec spec = fixtures::semilinear_multipoint(1001);
    CertifiedProblem cp = certify_problem(spec);
    const Certificate& c = cp.cert;

    CHECK(c.a0 == Catch::Approx(0.125).margin(1e-3));
    CHECK(c.b0 == Catch::Approx(4.0).margin(1e-11));
    CHECK(c.q == Catch::Approx(0.2125).margin(5e-4));
    CHECK(c.theorem1 == (c.q < 1.0));
    REQUIRE(c.k.has_value());
    CHECK(*c.k == std::max(c.a0, c.b0) / (1.0 - c.q)); // recomputed identity, bitwise
    CHECK(*c.k >= std::max(c.a0, c.b0));
    CHECK(c.theorem2 == Certificate::T2::Pass);
    CHECK(c.k1_consistent());
    CHECK(c.k2_consistent());
    CHECK(c.min_abs_wronskian > 0.0);
    CHECK(c.normalization_s == Catch::Approx(2.0).margin(1e-9));
}

TEST_CASE("understated Lipschitz declarations are flagged") {
    ProblemSpec lying = fixtures::make_spec(second_derivative(), dirichlet2(), "2*x", {"0", "0"},
                                            {"0", "0"}, GOperator{}, 0.5, 0.0, std::nullopt, 301);
    CertifiedProblem cp = certify_problem(lying);
    CHECK(cp.cert.k1_estimate > 1.9);
    CHECK(!cp.cert.k1_consistent());
}

TEST_CASE("failed contraction yields a fail certificate, not an error") {
    ProblemSpec hot = fixtures::make_spec(second_derivative(), dirichlet2(), "sin(x)", {"0", "0"},
                                          {"0", "0"}, GOperator{}, 9.0, 0.0, std::nullopt, 301);
    CertifiedProblem cp = certify_problem(hot);
    CHECK(!cp.cert.theorem1);
    CHECK(cp.cert.q >= 1.0);
    CHECK(!cp.cert.k.has_value());
    CHECK(!cp.cert.m0.has_value());
    CHECK(cp.cert.theorem2 == Certificate::T2::Fail);
}

TEST_CASE("empirical Lipschitz bound of the semilinear inverse") {
    ProblemSpec spec = fixtures::semilinear_multipoint(501, 1e-9);
    CertifiedProblem cp = certify_problem(spec);
    const double K = *cp.cert.k;
    Grid g(spec.num.m);
    SemilinearOptions opt;
    opt.q = cp.cert.q;
    opt.tol = 1e-10;
    Rng rng(56);
    for (int it = 0; it < 20; ++it) {
        std::vector<double> h1 = random_samples(g, rng), h2 = random_samples(g, rng);
        std::vector<double> v1 = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
        std::vector<double> v2 = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
        SolveReport r1 = solve_semilinear(spec, cp.F, cp.BM, h1, v1, opt);
        SolveReport r2 = solve_semilinear(spec, cp.F, cp.BM, h2, v2, opt);
        REQUIRE(r1.converged());
        REQUIRE(r2.converged());
        double dh = 0.0;
        for (int i = 0; i < g.size(); ++i) dh = std::max(dh, std::fabs(h1[i] - h2[i]));
        double dv = std::max(std::fabs(v1[0] - v2[0]), std::fabs(v1[1] - v2[1]));
        double dx = fixtures::sup_diff(r1.solution, r2.solution);
        CHECK(dx <= K * (dh + dv) * (1.0 + 1e-6) + 1e-9);
    }
}

TEST_CASE("certificate document is printable and deterministic") {
    ProblemSpec spec = fixtures::semilinear_multipoint(301);
    std::string a = format_certificate(certify_problem(spec).cert, kVersion);
    std::string b = format_certificate(certify_problem(spec).cert, kVersion);
    CHECK(a == b);
    CHECK(a.find("theorem1 = pass") != std::string::npos);
    CHECK(a.find("a0_status = numerical") != std::string::npos);
}
