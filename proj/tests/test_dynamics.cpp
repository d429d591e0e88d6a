#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "groklab/dynamics.hpp"
#include "groklab/rng.hpp"
#include "test_util.hpp"

using namespace groklab;

TEST_CASE("fixed points have zero derivative") {
    for (const auto& s : {ReducedState{1, 1, 1}, ReducedState{0, 0, 0}}) {
        const ReducedDerivative d = derivative(s, 1);
        CHECK(d.dx == 0.0);
        CHECK(d.dw == 0.0);
        CHECK(d.du == 0.0);
    }
    // delta=0 fixes the whole xwu=0 set.
    const ReducedDerivative d0 = derivative({0.7, 0.0, 0.4}, 0);
    CHECK(d0.dx == 0.0);
    CHECK(d0.dw == 0.0);
    CHECK(d0.du == 0.0);
}

TEST_CASE("derivative at the symmetric interior point") {
    // x=w=u=0.5, delta=1: err = 1/8 - 1 = -7/8, each component -err*(1/4) = 7/32.
    const ReducedDerivative d = derivative({0.5, 0.5, 0.5}, 1);
    CHECK(d.dx == doctest::Approx(0.21875).epsilon(1e-15));
    CHECK(d.dw == doctest::Approx(0.21875).epsilon(1e-15));
    CHECK(d.du == doctest::Approx(0.21875).epsilon(1e-15));
}

TEST_CASE("derivative validates delta") {
    CHECK_THROWS(derivative({0.5, 0.5, 0.5}, 2));
    CHECK_THROWS(derivative({0.5, 0.5, 0.5}, -1));
}

TEST_CASE("derivative matches its defining products at random states") {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const ReducedState s{rng.uniform() * 2 - 0.5, rng.uniform() * 2 - 0.5,
                             rng.uniform() * 2 - 0.5};
        for (const int delta : {0, 1}) {
            const double err = s.x * s.w * s.u - delta;
            const ReducedDerivative d = derivative(s, delta);
            CHECK(d.dx == doctest::Approx(-err * s.w * s.u).epsilon(1e-15));
            CHECK(d.dw == doctest::Approx(-err * s.x * s.u).epsilon(1e-15));
            CHECK(d.du == doctest::Approx(-err * s.x * s.w).epsilon(1e-15));
        }
    }
}

TEST_CASE("trajectory from the attractor stays put") {
    const Trajectory t = integrate({1, 1, 1}, 1, 0.01, 1.0);
    REQUIRE(t.points.size() == 101);
    for (const auto& p : t.points) {
        CHECK(p.x == 1.0);
        CHECK(p.w == 1.0);
        CHECK(p.u == 1.0);
        CHECK(p.v == 0.0);
    }
    CHECK_FALSE(t.left_cube);
}

TEST_CASE("interior starts converge to the product-one surface") {
    const Trajectory t = integrate({0.5, 0.5, 0.5}, 1, 0.01, 100.0);
    const TrajectoryPoint& last = t.points.back();
    CHECK(last.t == doctest::Approx(100.0));
    CHECK(std::abs(last.x * last.w * last.u - 1.0) < 1e-3);
    CHECK_FALSE(t.left_cube);
    // The symmetric start stays symmetric, so it lands on (1,1,1) itself.
    CHECK(last.x == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("delta zero decays every coordinate monotonically") {
    const Trajectory t = integrate({0.9, 0.8, 0.7}, 0, 0.01, 50.0);
    for (size_t k = 1; k < t.points.size(); ++k) {
        CHECK(t.points[k].x <= t.points[k - 1].x + 1e-12);
        CHECK(t.points[k].w <= t.points[k - 1].w + 1e-12);
        CHECK(t.points[k].u <= t.points[k - 1].u + 1e-12);
        CHECK(t.points[k].x >= 0.0);
    }
    // xwu -> 0 under decay.
    const TrajectoryPoint& last = t.points.back();
    CHECK(last.x * last.w * last.u < 0.05);
}

TEST_CASE("lyapunov values at pinned states") {
    // V = sum (coord-1)^2; V_dot = 2(3xwu - wu - xu - xw)(1 - xwu).
    const LyapunovValues at_fixed = lyapunov({1, 1, 1});
    CHECK(at_fixed.v == 0.0);
    CHECK(at_fixed.v_dot == 0.0);

    const LyapunovValues at_half = lyapunov({0.5, 0.5, 0.5});
    CHECK(at_half.v == doctest::Approx(0.75).epsilon(1e-15));
    // 2*(3/8 - 3/4)*(1 - 1/8) = 2*(-3/8)*(7/8) = -21/32.
    CHECK(at_half.v_dot == doctest::Approx(-0.65625).epsilon(1e-15));

    const LyapunovValues at_origin = lyapunov({0, 0, 0});
    CHECK(at_origin.v == 3.0);
    CHECK(at_origin.v_dot == 0.0);
}

TEST_CASE("analytic V_dot equals the chain rule against the flow") {
    Rng rng(12);
    for (int trial = 0; trial < 1000; ++trial) {
        const ReducedState s{rng.uniform(), rng.uniform(), rng.uniform()};
        const ReducedDerivative d = derivative(s, 1);
        const double chain =
            2.0 * (s.x - 1.0) * d.dx + 2.0 * (s.w - 1.0) * d.dw + 2.0 * (s.u - 1.0) * d.du;
        CHECK(lyapunov(s).v_dot == doctest::Approx(chain).epsilon(1e-12));
    }
}

TEST_CASE("V never increases along delta-one trajectories") {
    Rng rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        const ReducedState start{0.05 + 0.9 * rng.uniform(), 0.05 + 0.9 * rng.uniform(),
                                 0.05 + 0.9 * rng.uniform()};
        const Trajectory t = integrate(start, 1, 0.01, 50.0);
        for (size_t k = 1; k < t.points.size(); ++k)
            CHECK(t.points[k].v <= t.points[k - 1].v + 1e-9);
    }
}

TEST_CASE("RK4 converges at fourth order") {
    const ReducedState start{0.3, 0.6, 0.9};
    // Compare mid-transient, where step error has not yet been contracted away.
    const Trajectory fine = integrate(start, 1, 0.0005, 2.0);
    const double ref = fine.points.back().x;
    double errors[3];
    const double steps[3] = {0.04, 0.02, 0.01};
    for (int i = 0; i < 3; ++i) {
        const Trajectory t = integrate(start, 1, steps[i], 2.0);
        errors[i] = std::abs(t.points.back().x - ref);
    }
    // Halving h should shrink the error by about 2^4; allow generous slack.
    CHECK(errors[0] / errors[1] > 10.0);
    CHECK(errors[1] / errors[2] > 10.0);
}

TEST_CASE("starts outside the unit cube are flagged") {
    const Trajectory t = integrate({1.2, 0.8, 0.8}, 1, 0.01, 10.0);
    CHECK(t.left_cube);
    // The flow conserves x^2 - w^2 and w^2 - u^2, so an asymmetric interior
    // start like (0.2, 0.8, 0.8) settles on xwu = 1 with w = u > 1 and is
    // correctly flagged. A diagonal start approaches (1,1,1) from inside.
    const Trajectory asym = integrate({0.2, 0.8, 0.8}, 1, 0.01, 100.0);
    CHECK(asym.left_cube);
    const Trajectory diag = integrate({0.2, 0.2, 0.2}, 1, 0.01, 100.0);
    CHECK_FALSE(diag.left_cube);
}

TEST_CASE("integrate validates its arguments") {
    CHECK_THROWS(integrate({0.5, 0.5, 0.5}, 1, 0.0, 1.0));
    CHECK_THROWS(integrate({0.5, 0.5, 0.5}, 1, -0.01, 1.0));
    CHECK_THROWS(integrate({0.5, 0.5, 0.5}, 1, 0.01, -1.0));
}

TEST_CASE("trajectory CSV has the documented shape") {
    const testutil::TempDir dir;
    const Trajectory t = integrate({0.5, 0.5, 0.5}, 1, 0.1, 1.0);
    const std::string path = dir.file("traj.csv");
    save_trajectory_csv(path, t);

    std::ifstream in(path);
    REQUIRE(in.good());
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "t,x,w,u,V");
    int rows = 0;
    double prev_v = 1e300;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        double tv, x, w, u, v;
        char c1, c2, c3, c4;
        REQUIRE((ls >> tv >> c1 >> x >> c2 >> w >> c3 >> u >> c4 >> v));
        CHECK(v <= prev_v + 1e-12);
        prev_v = v;
        ++rows;
    }
    CHECK(rows == 11);
}
