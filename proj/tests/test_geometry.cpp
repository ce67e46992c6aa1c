#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <mmdrrt/arm.hpp>
#include <mmdrrt/ik.hpp>
#include <mmdrrt/se2.hpp>
#include <mmdrrt/shapes.hpp>

using namespace mmdrrt;

namespace {

ArmModel two_link_arm() {
    ArmModel m;
    m.base = Pose2{};
    m.link_lengths = {1.0, 1.0};
    m.joint_limits = {{-kPi, kPi}, {-kPi, kPi}};
    m.max_joint_velocity = 1.0;
    return m;
}

ArmModel three_link_arm() {
    ArmModel m;
    m.base = Pose2{};
    m.link_lengths = {1.0, 1.0, 1.0};
    m.joint_limits = {{-kPi, kPi}, {-kPi, kPi}, {-kPi, kPi}};
    m.max_joint_velocity = 1.0;
    return m;
}

}  // namespace

TEST_CASE("angle wrapping lands in the half-open interval") {
    CHECK(wrap_angle(0.0) == 0.0);
    CHECK(wrap_angle(kPi) == Catch::Approx(kPi));
    CHECK(wrap_angle(-kPi) == Catch::Approx(kPi));  // -pi maps to the +pi end
    CHECK(wrap_angle(3.0 * kPi) == Catch::Approx(kPi));
    CHECK(wrap_angle(-1.5 * kPi) == Catch::Approx(0.5 * kPi));
    CHECK(wrap_angle(2.0 * kPi) == Catch::Approx(0.0).margin(1e-12));
    for (double x : {-9.7, -3.2, 0.1, 4.4, 25.0}) {
        const double w = wrap_angle(x);
        CHECK(w > -kPi - 1e-12);
        CHECK(w <= kPi + 1e-12);
        CHECK(std::abs(std::remainder(w - x, 2.0 * kPi)) < 1e-9);
    }
}

TEST_CASE("pose composition and inverse round-trip") {
    const Pose2 a{0.3, -1.2, 0.7};
    const Pose2 b{-2.0, 0.4, -2.9};
    const Pose2 ab = a * b;
    const Pose2 back = ab * b.inverse();
    CHECK(poses_close(back, a, 1e-12, 1e-12));
    const Pose2 ident = a.inverse() * a;
    CHECK(poses_close(ident, Pose2{}, 1e-12, 1e-12));

    const Vec2 p{0.5, 0.25};
    const Vec2 q = a.apply(p);
    const Vec2 r = a.inverse().apply(q);
    CHECK(r.x == Catch::Approx(p.x).margin(1e-12));
    CHECK(r.y == Catch::Approx(p.y).margin(1e-12));
}

TEST_CASE("forward kinematics on a planar 2-link chain") {
    const ArmModel arm = two_link_arm();

    FkResult straight = forward_kinematics(arm, {0.0, 0.0});
    CHECK(straight.ee.x == Catch::Approx(2.0).margin(1e-12));
    CHECK(straight.ee.y == Catch::Approx(0.0).margin(1e-12));
    CHECK(straight.ee.theta == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(straight.links.size() == 2);

    FkResult up = forward_kinematics(arm, {kPi / 2.0, 0.0});
    CHECK(up.ee.x == Catch::Approx(0.0).margin(1e-12));
    CHECK(up.ee.y == Catch::Approx(2.0).margin(1e-12));
    CHECK(up.ee.theta == Catch::Approx(kPi / 2.0));

    FkResult bent = forward_kinematics(arm, {kPi / 2.0, -kPi / 2.0});
    CHECK(bent.ee.x == Catch::Approx(1.0).margin(1e-12));
    CHECK(bent.ee.y == Catch::Approx(1.0).margin(1e-12));
    CHECK(bent.ee.theta == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("forward kinematics composes with a moved base") {
    ArmModel arm = two_link_arm();
    arm.base = Pose2{1.0, 2.0, kPi / 2.0};
    FkResult fk = forward_kinematics(arm, {0.0, 0.0});
    CHECK(fk.ee.x == Catch::Approx(1.0).margin(1e-12));
    CHECK(fk.ee.y == Catch::Approx(4.0).margin(1e-12));
    CHECK(fk.ee.theta == Catch::Approx(kPi / 2.0));
}

TEST_CASE("forward kinematics rejects configurations outside joint limits") {
    ArmModel arm = two_link_arm();
    arm.joint_limits[1] = {-0.5, 0.5};
    CHECK_THROWS_AS(forward_kinematics(arm, {0.0, 0.6}), std::domain_error);
    CHECK_NOTHROW(forward_kinematics(arm, {0.0, 0.5}));
}

TEST_CASE("arm travel time follows the largest joint displacement") {
    CHECK(arm_travel_time({0.0, 0.0}, {1.0, -0.5}, 2.0) == Catch::Approx(0.5));
    CHECK(arm_travel_time({0.3, 0.3}, {0.3, 0.3}, 2.0) == 0.0);
}

TEST_CASE("position-only inverse kinematics for a 2-link arm") {
    const ArmModel arm = two_link_arm();
    Rng rng(1234);

    SECTION("a boundary target has the single straight solution") {
        auto sols = inverse_kinematics(arm, Pose2{2.0, 0.0, 0.4}, rng);
        REQUIRE(sols.size() == 1);
        CHECK(std::abs(sols[0][0]) < 1e-9);
        CHECK(std::abs(sols[0][1]) < 1e-9);
    }

    SECTION("an interior target has two elbow branches") {
        auto sols = inverse_kinematics(arm, Pose2{1.2, 0.6, 0.0}, rng);
        REQUIRE(sols.size() == 2);
        for (const ArmConfig& q : sols) {
            FkResult fk = forward_kinematics(arm, q);
            CHECK(std::hypot(fk.ee.x - 1.2, fk.ee.y - 0.6) < 1e-6);
        }
        CHECK(std::abs(sols[0][1] - sols[1][1]) > 1e-3);
    }

    SECTION("out-of-reach targets produce no solutions") {
        CHECK(inverse_kinematics(arm, Pose2{3.0, 0.0, 0.0}, rng).empty());
        CHECK(inverse_kinematics(arm, Pose2{2.1, 0.0, 0.0}, rng).empty());
    }
}

TEST_CASE("full-pose inverse kinematics for a 3-link arm") {
    const ArmModel arm = three_link_arm();
    Rng rng(99);
    const Pose2 target{1.5, 0.5, 0.0};
    auto sols = inverse_kinematics(arm, target, rng);
    REQUIRE(sols.size() >= 2);
    for (const ArmConfig& q : sols) {
        FkResult fk = forward_kinematics(arm, q);
        CHECK(std::hypot(fk.ee.x - target.x, fk.ee.y - target.y) < 1e-6);
        CHECK(std::abs(wrap_angle(fk.ee.theta - target.theta)) < 1e-6);
    }
    // The elbow branches are genuinely different configurations.
    bool distinct = false;
    for (std::size_t j = 1; j < sols.size() && !distinct; ++j)
        for (std::size_t k = 0; k < sols[0].size(); ++k)
            if (std::abs(sols[j][k] - sols[0][k]) > 1e-3) distinct = true;
    CHECK(distinct);
}

TEST_CASE("inverse kinematics respects tightened joint limits") {
    ArmModel arm = three_link_arm();
    for (auto& lim : arm.joint_limits) lim = {-0.05, 0.05};
    Rng rng(5);
    // Nearly straight poses stay solvable, a strongly bent one does not.
    CHECK_FALSE(inverse_kinematics(arm, Pose2{2.9995, 0.0, 0.0}, rng).empty());
    CHECK(inverse_kinematics(arm, Pose2{1.5, 0.5, 0.0}, rng).empty());
}

TEST_CASE("segment and capsule primitives") {
    SECTION("crossing segments intersect") {
        CHECK(segments_intersect({{0, 0}, {2, 2}}, {{0, 2}, {2, 0}}));
        CHECK_FALSE(segments_intersect({{0, 0}, {1, 0}}, {{0, 1}, {1, 1}}));
    }
    SECTION("capsules hit exactly when closer than the radius sum") {
        const Segment a{{0, 0}, {1, 0}};
        const Segment b{{0, 0.19}, {1, 0.19}};
        CHECK(capsules_hit(a, 0.1, b, 0.1));
        const Segment c{{0, 0.21}, {1, 0.21}};
        CHECK_FALSE(capsules_hit(a, 0.1, c, 0.1));
    }
    SECTION("point containment in a convex polygon") {
        ConvexPolygon box;
        box.pts = {{-1, -1}, {1, -1}, {1, 1}, {-1, 1}};
        CHECK(box.contains({0.0, 0.0}));
        CHECK_FALSE(box.contains({1.5, 0.0}));
    }
    SECTION("polygon overlap via separating axes") {
        ConvexPolygon a;
        a.pts = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
        ConvexPolygon b = a;
        for (auto& p : b.pts) p.x += 0.5;
        CHECK(polygons_overlap(a, b));
        ConvexPolygon c = a;
        for (auto& p : c.pts) p.x += 1.5;
        CHECK_FALSE(polygons_overlap(a, c));
    }
    SECTION("rigid transform of a polygon") {
        ConvexPolygon tri;
        tri.pts = {{0, 0}, {1, 0}, {0, 1}};
        ConvexPolygon moved = tri.transformed(Pose2{0.0, 0.0, kPi / 2.0});
        CHECK(moved.pts[1].x == Catch::Approx(0.0).margin(1e-12));
        CHECK(moved.pts[1].y == Catch::Approx(1.0).margin(1e-12));
    }
}
