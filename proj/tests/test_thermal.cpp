#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>
#include <random>
#include <set>

#include <Eigen/Dense>

#include "ember/thermal.hpp"

using namespace ember;
using namespace ember::thermal;

namespace {

grid::GridDescriptor<2> centers(int n, double dx = 0.1) {
    return {Vec2::Zero(), dx, VecI<2>(n, n), grid::NodeSite::cell_center};
}

grid::SparseField<double, 2> full_field(const grid::GridDescriptor<2>& g,
                                        const std::function<double(const Vec2&)>& f) {
    grid::SparseField<double, 2> out(g, 0.0);
    VecI<2> i = VecI<2>::Zero();
    for (i[0] = 0; i[0] < g.node_count(0); ++i[0])
        for (i[1] = 0; i[1] < g.node_count(1); ++i[1]) out.set(i, f(g.node_position(i)));
    return out;
}

interp::FlatVector<2> uniform_velocity(const grid::GridDescriptor<2>& centers_grid,
                                       const Vec2& u0) {
    grid::GridDescriptor<2> corners{centers_grid.origin, centers_grid.dx, centers_grid.dims,
                                    grid::NodeSite::cell_corner};
    grid::SparseField<Vec2, 2> u(corners, u0);
    VecI<2> i = VecI<2>::Zero();
    for (i[0] = 0; i[0] < corners.node_count(0); ++i[0])
        for (i[1] = 0; i[1] < corners.node_count(1); ++i[1]) u.set(i, u0);
    return interp::FlatVector<2>::from(u);
}

Eigen::MatrixXd to_dense(const solver::SparseMatrix& A) {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(A.n, A.n);
    for (int r = 0; r < A.n; ++r)
        for (int k = A.row_ptr[r]; k < A.row_ptr[r + 1]; ++k)
            M(r, A.col[static_cast<std::size_t>(k)]) += A.val[static_cast<std::size_t>(k)];
    return M;
}

} // namespace

TEST_CASE("heaviside coefficients") {
    const auto g = centers(6);
    ThermalParams tp;
    tp.rho_air = 1.0;
    tp.rho_solid = 2.0;
    SECTION("positive level set everywhere gives air values") {
        grid::SparseField<double, 2> phi(g, 0.2); // background positive, nothing stored
        grid::SparseField<double, 2> K, rc;
        heaviside_coefficients<2>(phi, tp, K, rc);
        REQUIRE(K.at(VecI<2>(3, 3)) == 0.01);
        REQUIRE(rc.at(VecI<2>(3, 3)) == 1.0);
    }
    SECTION("negative level set gives solid values; zero counts as air") {
        grid::SparseField<double, 2> phi(g, 0.2);
        phi.set(VecI<2>(2, 2), -0.05);
        phi.set(VecI<2>(3, 3), 0.0);
        grid::SparseField<double, 2> K, rc;
        heaviside_coefficients<2>(phi, tp, K, rc);
        REQUIRE(K.at(VecI<2>(2, 2)) == 0.1);
        REQUIRE(rc.at(VecI<2>(2, 2)) == 2.0);
        REQUIRE(K.at(VecI<2>(3, 3)) == 0.01);
    }
    SECTION("mixed signs produce exactly two conductivities") {
        grid::SparseField<double, 2> phi(g, 0.2);
        phi.set(VecI<2>(1, 1), -0.1);
        phi.set(VecI<2>(1, 2), -0.2);
        grid::SparseField<double, 2> K, rc;
        heaviside_coefficients<2>(phi, tp, K, rc);
        std::set<double> values{K.background()};
        K.for_each_sorted([&](const VecI<2>&, const double& v) { values.insert(v); });
        REQUIRE(values == std::set<double>{0.01, 0.1});
    }
}

TEST_CASE("temperature transfer to the grid") {
    const auto g = centers(10);
    SECTION("one particle at a node with zero gradient") {
        std::vector<MpmParticle<2>> ps(1);
        ps[0].x = g.node_position(VecI<2>(4, 4));
        ps[0].T = 450.0;
        ps[0].m = 2.0;
        grid::SparseField<double, 2> T, m;
        temperature_p2g<2>(ps, {}, g, T, m);
        REQUIRE(T.at(VecI<2>(4, 4)) == Catch::Approx(450.0));
        REQUIRE(m.at(VecI<2>(4, 4)) == Catch::Approx(2.0));
    }
    SECTION("an affine field with exact gradients is reproduced") {
        const Vec2 b(120.0, -60.0);
        const double a = 300.0;
        std::mt19937 rng(2);
        std::uniform_real_distribution<double> u(0.25, 0.75);
        std::vector<MpmParticle<2>> ps(120);
        for (auto& p : ps) {
            p.x = Vec2(u(rng), u(rng));
            p.m = 0.4;
            p.T = a + b.dot(p.x);
            p.gradT = b;
        }
        grid::SparseField<double, 2> T, m;
        temperature_p2g<2>(ps, {}, g, T, m);
        m.for_each_sorted([&](const VecI<2>& i, const double& mass) {
            if (mass > 1e-12)
                REQUIRE(T.at(VecI<2>(i)) ==
                        Catch::Approx(a + b.dot(g.node_position(i))).margin(1e-10 * 300));
        });
    }
    SECTION("transfer sum matches the analytic split into mean and gradient parts") {
        std::mt19937 rng(4);
        std::uniform_real_distribution<double> u(0.3, 0.7);
        std::normal_distribution<double> n(0.0, 1.0);
        std::vector<MpmParticle<2>> ps(50);
        for (auto& p : ps) {
            p.x = Vec2(u(rng), u(rng));
            p.m = 0.8;
            p.T = 300.0 + 10.0 * n(rng);
            p.gradT = Vec2(n(rng), n(rng)) * 40.0;
        }
        grid::SparseField<double, 2> T, m;
        temperature_p2g<2>(ps, {}, g, T, m);
        double grid_sum = 0.0;
        m.for_each_sorted([&](const VecI<2>& i, const double& mass) {
            grid_sum += mass * T.at(i);
        });
        // oracle: sum_p m_p T_p plus the per-particle gradient imbalance
        double expect = 0.0;
        for (const auto& p : ps) {
            const auto stencil = grid::linear_weights<2>(p.x, g);
            Vec2 moment = Vec2::Zero();
            stencil.for_each_node([&](const VecI<2>& node, double w, const Vec2&) {
                moment += w * (g.node_position(node) - p.x);
            });
            expect += p.m * p.T + p.m * moment.dot(p.gradT);
        }
        REQUIRE(grid_sum == Catch::Approx(expect).epsilon(1e-12));
    }
    SECTION("smoke particles join the transfer") {
        std::vector<SmokeParticle<2>> smoke(1);
        smoke[0].x = g.node_position(VecI<2>(6, 6));
        smoke[0].T = 600.0;
        smoke[0].m = 1.0;
        grid::SparseField<double, 2> T, m;
        temperature_p2g<2>({}, smoke, g, T, m);
        REQUIRE(T.at(VecI<2>(6, 6)) == Catch::Approx(600.0));
    }
}

TEST_CASE("temperature advection") {
    const auto g = centers(12);
    SECTION("still fluid with no particles leaves the field unchanged") {
        const auto T0 = full_field(g, [](const Vec2& x) { return 300.0 + 50.0 * x[0]; });
        const auto u = uniform_velocity(g, Vec2::Zero());
        grid::SparseField<double, 2> T_part(g, 0.0), mass(g, 0.0);
        const auto T1 = advect_temperature<2>(T0, u, 0.02, T_part, mass, 298.0);
        T1.for_each_sorted([&](const VecI<2>& i, const double& v) {
            REQUIRE(v == Catch::Approx(T0.at(i)).margin(1e-12));
        });
    }
    SECTION("cells with particle mass keep the transferred value") {
        const auto T0 = full_field(g, [](const Vec2&) { return 300.0; });
        const auto u = uniform_velocity(g, Vec2(5.0, 0.0));
        grid::SparseField<double, 2> T_part(g, 0.0), mass(g, 0.0);
        T_part.set(VecI<2>(5, 5), 900.0);
        mass.set(VecI<2>(5, 5), 1.0);
        const auto T1 = advect_temperature<2>(T0, u, 0.01, T_part, mass, 298.0);
        REQUIRE(T1.at(VecI<2>(5, 5)) == 900.0);
    }
    SECTION("a uniform flow of one cell per step translates a bump exactly") {
        const int hot_x = 6;
        auto T0 = full_field(g, [&](const Vec2&) { return 300.0; });
        for (int y = 0; y < 12; ++y) T0.set(VecI<2>(hot_x, y), 400.0);
        const double dt = 0.02;
        const Vec2 u0(g.dx / dt, 0.0);
        const auto u = uniform_velocity(g, u0);
        grid::SparseField<double, 2> T_part(g, 0.0), mass(g, 0.0);
        const auto T1 = advect_temperature<2>(T0, u, dt, T_part, mass, 298.0);
        for (int y = 2; y < 10; ++y) {
            REQUIRE(T1.at(VecI<2>(hot_x + 1, y)) == Catch::Approx(400.0).margin(1e-12));
            REQUIRE(T1.at(VecI<2>(hot_x, y)) == Catch::Approx(300.0).margin(1e-12));
        }
        // no overshoot anywhere
        T1.for_each_sorted([&](const VecI<2>&, const double& v) {
            REQUIRE(v >= 298.0 - 1e-12);
            REQUIRE(v <= 400.0 + 1e-12);
        });
    }
    SECTION("backtraces leaving the domain pick up the ambient temperature") {
        const auto T0 = full_field(g, [](const Vec2&) { return 500.0; });
        const auto u = uniform_velocity(g, Vec2(0.0, 60.0)); // strong upward flow
        grid::SparseField<double, 2> T_part(g, 0.0), mass(g, 0.0);
        const auto T1 = advect_temperature<2>(T0, u, 0.02, T_part, mass, 298.0);
        REQUIRE(T1.at(VecI<2>(5, 5)) == 298.0); // upwind position is below the floor
    }
}

TEST_CASE("temperature merge") {
    const auto g = centers(8);
    auto T = full_field(g, [](const Vec2&) { return 300.0; });
    grid::SparseField<double, 2> T_mpm(g, 0.0);
    grid::SparseField<std::uint8_t, 2> mask(g, 0);
    SECTION("an empty mask changes nothing") {
        const auto before = T;
        merge_temperatures<2>(T, T_mpm, mask);
        T.for_each_sorted([&](const VecI<2>& i, const double& v) {
            REQUIRE(v == before.at(i));
        });
    }
    SECTION("masked cells take the particle field where defined") {
        T_mpm.set(VecI<2>(3, 3), 700.0);
        mask.set(VecI<2>(3, 3), 1);
        mask.set(VecI<2>(4, 4), 1); // masked but no transferred value: unchanged
        merge_temperatures<2>(T, T_mpm, mask);
        REQUIRE(T.at(VecI<2>(3, 3)) == 700.0);
        REQUIRE(T.at(VecI<2>(4, 4)) == 300.0);
    }
}

TEST_CASE("implicit diffusion") {
    ThermalParams tp;
    tp.rho_air = 1.0;
    tp.rho_solid = 2.0;
    SECTION("uniform temperature is a fixed point with insulated walls") {
        const auto g = centers(6);
        auto T = full_field(g, [](const Vec2&) { return 321.0; });
        grid::SparseField<double, 2> K(g, 0.05), rc(g, 1.0);
        const auto r = diffusion_solve<2>(T, K, rc, g.dx, 0.1, 1e-8, 500, std::nullopt);
        REQUIRE(r.cg_iterations == 0);
        T.for_each_sorted([&](const VecI<2>&, const double& v) { REQUIRE(v == 321.0); });
    }
    SECTION("matches a dense direct solve with random patchy conductivity") {
        const auto g = centers(4);
        std::mt19937 rng(8);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        grid::SparseField<double, 2> phi(g, 1.0);
        VecI<2> i = VecI<2>::Zero();
        for (i[0] = 0; i[0] < 4; ++i[0])
            for (i[1] = 0; i[1] < 4; ++i[1])
                if (u(rng) < 0.5) phi.set(i, -1.0);
        grid::SparseField<double, 2> K, rc;
        heaviside_coefficients<2>(phi, tp, K, rc);
        auto T = full_field(g, [&](const Vec2&) { return 250.0 + 200.0 * u(rng); });
        const auto sys = build_diffusion_system<2>(T, K, rc, g.dx, 0.5, std::nullopt);
        REQUIRE(sys.A.max_asymmetry() < 1e-14);
        // positive definiteness, probed with random vectors
        const Eigen::MatrixXd dense = to_dense(sys.A);
        std::normal_distribution<double> nd(0.0, 1.0);
        for (int probe = 0; probe < 20; ++probe) {
            Eigen::VectorXd x(sys.A.n);
            for (int k = 0; k < sys.A.n; ++k) x[k] = nd(rng);
            REQUIRE(x.dot(dense * x) > 0.0);
        }
        Eigen::VectorXd b(sys.A.n);
        for (int k = 0; k < sys.A.n; ++k) b[k] = sys.b[static_cast<std::size_t>(k)];
        const Eigen::VectorXd exact = to_dense(sys.A).fullPivLu().solve(b);
        diffusion_solve<2>(T, K, rc, g.dx, 0.5, 1e-13, 2000, std::nullopt);
        for (std::size_t k = 0; k < sys.cells.size(); ++k) {
            const double got = T.at(grid::unpack_index<2>(sys.cells[k]));
            REQUIRE(got == Catch::Approx(exact[static_cast<int>(k)])
                               .epsilon(1e-10)
                               .margin(1e-10));
        }
    }
    SECTION("insulated box conserves heat content and obeys the maximum principle") {
        const auto g = centers(5);
        std::mt19937 rng(21);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int trial = 0; trial < 100; ++trial) {
            grid::SparseField<double, 2> phi(g, 1.0);
            VecI<2> i = VecI<2>::Zero();
            for (i[0] = 0; i[0] < 5; ++i[0])
                for (i[1] = 0; i[1] < 5; ++i[1])
                    if (u(rng) < 0.4) phi.set(i, -1.0);
            grid::SparseField<double, 2> K, rc;
            heaviside_coefficients<2>(phi, tp, K, rc);
            auto T = full_field(g, [&](const Vec2&) { return 200.0 + 400.0 * u(rng); });
            double before = 0.0, lo = 1e300, hi = -1e300;
            T.for_each_sorted([&](const VecI<2>& c, const double& v) {
                before += rc.at(c) * v;
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            });
            diffusion_solve<2>(T, K, rc, g.dx, 0.2, 1e-12, 2000, std::nullopt);
            double after = 0.0;
            T.for_each_sorted([&](const VecI<2>& c, const double& v) {
                after += rc.at(c) * v;
                REQUIRE(v >= lo - 1e-9 * (hi - lo + 1.0));
                REQUIRE(v <= hi + 1e-9 * (hi - lo + 1.0));
            });
            REQUIRE(after == Catch::Approx(before).epsilon(1e-10));
        }
    }
    SECTION("a single hot cell cools monotonically") {
        const auto g = centers(5);
        auto T = full_field(g, [](const Vec2&) { return 300.0; });
        T.set(VecI<2>(2, 2), 900.0);
        grid::SparseField<double, 2> K(g, 0.1), rc(g, 1.0);
        double prev = 900.0;
        for (int s = 0; s < 5; ++s) {
            diffusion_solve<2>(T, K, rc, g.dx, 0.05, 1e-12, 2000, std::nullopt);
            const double now = T.at(VecI<2>(2, 2));
            REQUIRE(now < prev);
            prev = now;
        }
    }
    SECTION("fixed-temperature floor cells hold their value") {
        const auto g = centers(5);
        auto T = full_field(g, [](const Vec2&) { return 300.0; });
        grid::SparseField<double, 2> K(g, 0.1), rc(g, 1.0);
        diffusion_solve<2>(T, K, rc, g.dx, 0.05, 1e-10, 2000, 800.0);
        for (int x = 0; x < 5; ++x) REQUIRE(T.at(VecI<2>(x, 0)) == 800.0);
        REQUIRE(T.at(VecI<2>(2, 1)) > 300.0); // heat flows upward from the floor
    }
}

TEST_CASE("temperature extrapolation") {
    const auto g = centers(8);
    SECTION("single unknown surrounded by a constant") {
        auto T = full_field(g, [](const Vec2&) { return 300.0; });
        T.set(VecI<2>(4, 4), -1.0);
        grid::SparseField<std::uint8_t, 2> mask(g, 0);
        mask.set(VecI<2>(4, 4), 1);
        extrapolate_fluid_temperature<2>(T, mask);
        REQUIRE(T.at(VecI<2>(4, 4)) == Catch::Approx(300.0));
    }
    SECTION("mean of two known neighbors") {
        auto T = full_field(g, [](const Vec2&) { return 300.0; });
        T.set(VecI<2>(4, 3), 200.0);
        T.set(VecI<2>(4, 5), 400.0);
        T.set(VecI<2>(3, 4), 200.0);
        T.set(VecI<2>(5, 4), 400.0);
        grid::SparseField<std::uint8_t, 2> mask(g, 0);
        mask.set(VecI<2>(4, 4), 1);
        extrapolate_fluid_temperature<2>(T, mask);
        REQUIRE(T.at(VecI<2>(4, 4)) == Catch::Approx(300.0));
    }
    SECTION("a strip fills layer by layer") {
        // a 1D-style strip: known 300, 400, then two unknowns
        auto T = full_field(g, [](const Vec2&) { return 0.0; });
        grid::SparseField<std::uint8_t, 2> mask(g, 0);
        // isolate row y=4: mark everything else known at a sentinel far value
        // then make (4,4), (5,4) unknown with known (2,4)=300, (3,4)=400
        VecI<2> i = VecI<2>::Zero();
        for (i[0] = 0; i[0] < 8; ++i[0])
            for (i[1] = 0; i[1] < 8; ++i[1])
                if (i[1] != 4) mask.set(i, 1); // whole rows unknown except y=4
        T.set(VecI<2>(2, 4), 300.0);
        T.set(VecI<2>(3, 4), 400.0);
        mask.set(VecI<2>(4, 4), 1);
        mask.set(VecI<2>(5, 4), 1);
        // remaining known cells on row 4: give them 400 too so lateral fill
        // cannot change the expectation
        for (int x = 0; x < 8; ++x)
            if (x != 4 && x != 5 && x != 2 && x != 3) T.set(VecI<2>(x, 4), 400.0);
        extrapolate_fluid_temperature<2>(T, mask);
        REQUIRE(T.at(VecI<2>(4, 4)) == Catch::Approx(400.0));
        REQUIRE(T.at(VecI<2>(5, 4)) == Catch::Approx(400.0));
    }
    SECTION("idempotent and leaves known cells alone") {
        auto T = full_field(g, [](const Vec2& x) { return 300.0 + 100.0 * x[0]; });
        grid::SparseField<std::uint8_t, 2> mask(g, 0);
        mask.set(VecI<2>(2, 2), 1);
        mask.set(VecI<2>(2, 3), 1);
        const double known_before = T.at(VecI<2>(5, 5));
        extrapolate_fluid_temperature<2>(T, mask);
        const double a = T.at(VecI<2>(2, 2));
        extrapolate_fluid_temperature<2>(T, mask);
        REQUIRE(T.at(VecI<2>(2, 2)) == a);
        REQUIRE(T.at(VecI<2>(5, 5)) == known_before);
    }
    SECTION("an all-solid grid cannot be extrapolated") {
        auto T = full_field(g, [](const Vec2&) { return 300.0; });
        grid::SparseField<std::uint8_t, 2> mask(g, 0);
        VecI<2> i = VecI<2>::Zero();
        for (i[0] = 0; i[0] < 8; ++i[0])
            for (i[1] = 0; i[1] < 8; ++i[1]) mask.set(i, 1);
        REQUIRE_THROWS_AS(extrapolate_fluid_temperature<2>(T, mask), SolverError);
    }
}

TEST_CASE("temperature transfer back to particles") {
    const auto g = centers(10);
    SECTION("uniform grid gives the constant with zero gradient") {
        const auto T = full_field(g, [](const Vec2&) { return 340.0; });
        std::vector<MpmParticle<2>> ps(1);
        ps[0].x = Vec2(0.42, 0.57);
        std::vector<SmokeParticle<2>> smoke(1);
        smoke[0].x = Vec2(0.61, 0.33);
        temperature_g2p<2>(T, ps, smoke);
        REQUIRE(ps[0].T == Catch::Approx(340.0).margin(1e-12));
        REQUIRE(ps[0].gradT.norm() < 1e-9);
        REQUIRE(smoke[0].T == Catch::Approx(340.0).margin(1e-12));
    }
    SECTION("affine grid is reproduced exactly with its gradient") {
        const Vec2 b(80.0, -40.0);
        const auto T = full_field(g, [&](const Vec2& x) { return 300.0 + b.dot(x); });
        std::mt19937 rng(17);
        std::uniform_real_distribution<double> u(0.2, 0.8);
        std::vector<MpmParticle<2>> ps(50);
        for (auto& p : ps) p.x = Vec2(u(rng), u(rng));
        std::vector<SmokeParticle<2>> none;
        temperature_g2p<2>(T, ps, none);
        for (const auto& p : ps) {
            REQUIRE(p.T == Catch::Approx(300.0 + b.dot(p.x)).margin(1e-10 * 400));
            REQUIRE((p.gradT - b).norm() < 1e-10 * b.norm());
        }
    }
}
