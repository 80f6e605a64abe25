#include <catch2/catch_amalgamated.hpp>

#include "synthdr/bvh.hpp"
#include "synthdr/mesh.hpp"
#include "synthdr/mesh_io.hpp"
#include "synthdr/rng.hpp"
#include "test_support.hpp"

using namespace synthdr;

namespace {

// Independent triangle intersection for the brute-force oracle: plane hit
// followed by an inside test on projected barycentrics. Shares no code with
// the Moller-Trumbore path under test.
bool oracle_hit_triangle(const Vec3& orig, const Vec3& dir, const Vec3& a, const Vec3& b,
                         const Vec3& c, double& t_out) {
    Vec3 n = cross(b - a, c - a);
    double denom = dot(n, dir);
    if (std::abs(denom) < 1e-14) return false;
    double t = dot(n, a - orig) / denom;
    if (t <= 1e-7) return false;
    Vec3 p = orig + dir * t;
    double area2 = length(n);
    double u = dot(n, cross(c - b, p - b)) / (area2 * area2) * area2;
    double v = dot(n, cross(a - c, p - c)) / (area2 * area2) * area2;
    double w = dot(n, cross(b - a, p - a)) / (area2 * area2) * area2;
    if (u < -1e-9 || v < -1e-9 || w < -1e-9) return false;
    t_out = t;
    return true;
}

struct OracleHit {
    double t;
    uint32_t instance, triangle;
};

std::optional<OracleHit> oracle_nearest(const std::vector<TriangleMesh>& meshes, const Vec3& orig,
                                        const Vec3& dir) {
    std::optional<OracleHit> best;
    for (uint32_t mi = 0; mi < meshes.size(); ++mi)
        for (uint32_t ti = 0; ti < meshes[mi].triangles.size(); ++ti) {
            const auto& tri = meshes[mi].triangles[ti];
            double t;
            if (oracle_hit_triangle(orig, dir, meshes[mi].vertices[tri[0]],
                                    meshes[mi].vertices[tri[1]], meshes[mi].vertices[tri[2]], t))
                if (!best || t < best->t) best = OracleHit{t, mi, ti};
        }
    return best;
}

TriangleMesh random_triangle_soup(size_t count, Rng& rng, double extent = 2.0) {
    TriangleMesh m;
    for (size_t i = 0; i < count; ++i) {
        Vec3 base{rng.uniform(-extent, extent), rng.uniform(-extent, extent),
                  rng.uniform(-extent, extent)};
        uint32_t b = static_cast<uint32_t>(m.vertices.size());
        m.vertices.push_back(base);
        m.vertices.push_back(base + Vec3{rng.uniform(0.05, 0.4), rng.uniform(-0.2, 0.2),
                                         rng.uniform(-0.2, 0.2)});
        m.vertices.push_back(base + Vec3{rng.uniform(-0.2, 0.2), rng.uniform(0.05, 0.4),
                                         rng.uniform(-0.2, 0.2)});
        m.triangles.push_back({b, b + 1, b + 2});
    }
    compute_vertex_normals(m);
    return m;
}

}  // namespace

TEST_CASE("load_mesh: unit cube OBJ") {
    auto dir = testsupport::make_temp_dir("geom");
    testsupport::write_text(dir / "cube.obj", testsupport::unit_cube_obj());
    TriangleMesh mesh = load_mesh((dir / "cube.obj").string());
    CHECK(mesh.vertex_count() == 8);
    CHECK(mesh.triangle_count() == 12);
    for (const Vec3& n : mesh.normals) CHECK(length(n) == Catch::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("load_mesh: binary STL keeps duplicated vertices") {
    auto dir = testsupport::make_temp_dir("geom");
    testsupport::write_binary(dir / "cube.stl", testsupport::unit_cube_stl_binary());
    TriangleMesh mesh = load_mesh((dir / "cube.stl").string());
    CHECK(mesh.vertex_count() == 36);
    CHECK(mesh.triangle_count() == 12);
    Aabb box = mesh_aabb(mesh);
    CHECK(box.lo == Vec3{0, 0, 0});
    CHECK(box.hi == Vec3{1, 1, 1});
}

TEST_CASE("load_mesh: ASCII STL") {
    auto dir = testsupport::make_temp_dir("geom");
    testsupport::write_text(dir / "tri.stl",
                            "solid tri\n"
                            " facet normal 0 0 1\n"
                            "  outer loop\n"
                            "   vertex 0 0 0\n   vertex 1 0 0\n   vertex 0 1 0\n"
                            "  endloop\n"
                            " endfacet\n"
                            "endsolid tri\n");
    TriangleMesh mesh = load_mesh((dir / "tri.stl").string());
    CHECK(mesh.triangle_count() == 1);
    CHECK(mesh.vertex_count() == 3);
}

TEST_CASE("load_mesh: zero-triangle file is an error") {
    auto dir = testsupport::make_temp_dir("geom");
    testsupport::write_text(dir / "empty.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\n");
    CHECK_THROWS_WITH(load_mesh((dir / "empty.obj").string()),
                      Catch::Matchers::ContainsSubstring("empty mesh"));
}

TEST_CASE("load_mesh: degenerate triangles dropped with a counter") {
    auto dir = testsupport::make_temp_dir("geom");
    testsupport::write_text(dir / "degen.obj",
                            "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 2 0 0\n"
                            "f 1 2 3\n"
                            "f 1 2 4\n");  // collinear, zero area
    TriangleMesh mesh = load_mesh((dir / "degen.obj").string());
    CHECK(mesh.triangle_count() == 1);
    CHECK(mesh.degenerate_dropped == 1);
}

TEST_CASE("load_mesh: errors carry file and line context") {
    auto dir = testsupport::make_temp_dir("geom");
    testsupport::write_text(dir / "bad.obj", "v 0 0 0\nf 1 2 zzz\n");
    CHECK_THROWS_WITH(load_mesh((dir / "bad.obj").string()),
                      Catch::Matchers::ContainsSubstring("bad.obj:2"));
    CHECK_THROWS_WITH(load_mesh((dir / "missing.obj").string()),
                      Catch::Matchers::ContainsSubstring("missing.obj"));
}

TEST_CASE("load_mesh: OBJ corner normals and negative indices") {
    auto dir = testsupport::make_temp_dir("geom");
    testsupport::write_text(dir / "tri.obj",
                            "v 0 0 0\nv 1 0 0\nv 0 1 0\n"
                            "vn 0 0 1\n"
                            "f -3//-1 -2//-1 -1//-1\n");
    TriangleMesh mesh = load_mesh((dir / "tri.obj").string());
    REQUIRE(mesh.triangle_count() == 1);
    CHECK(mesh.normals[0].z == Catch::Approx(1.0));
}

TEST_CASE("transform_mesh examples") {
    TriangleMesh cube = make_cube(1.0);

    SECTION("identity pose") {
        TriangleMesh out = transform_mesh(cube, Pose{});
        for (size_t i = 0; i < cube.vertices.size(); ++i) CHECK(out.vertices[i] == cube.vertices[i]);
    }
    SECTION("pure translation moves min z") {
        TriangleMesh grounded = drop_to_ground(cube);  // min z = 0
        Pose pose;
        pose.translation = {0, 0, 1};
        TriangleMesh out = transform_mesh(grounded, pose);
        CHECK(mesh_aabb(out).lo.z == Catch::Approx(1.0).margin(1e-12));
    }
    SECTION("rotation pi/2 about z maps (1,0,0) to (0,1,0)") {
        Pose pose;
        pose.rotation = {0, 0, kPi / 2};
        Vec3 p = pose.apply({1, 0, 0});
        CHECK(p.x == Catch::Approx(0.0).margin(1e-9));
        CHECK(p.y == Catch::Approx(1.0).margin(1e-9));
        CHECK(p.z == Catch::Approx(0.0).margin(1e-9));
    }
    SECTION("normals are rotated only") {
        Pose pose;
        pose.scale = 3.0;
        pose.translation = {5, 5, 5};
        TriangleMesh out = transform_mesh(cube, pose);
        for (const Vec3& n : out.normals) CHECK(length(n) == Catch::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("transform_mesh inverse pose recovers vertices") {
    Rng rng = make_stream(42, 0);
    TriangleMesh mesh = random_triangle_soup(50, rng);
    for (int trial = 0; trial < 20; ++trial) {
        Pose pose;
        pose.translation = {rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)};
        pose.rotation = {rng.uniform(-kPi, kPi), rng.uniform(-kPi, kPi), rng.uniform(-kPi, kPi)};
        pose.scale = rng.uniform(0.1, 4.0);
        TriangleMesh roundtrip = transform_mesh(transform_mesh(mesh, pose), pose.inverse());
        for (size_t i = 0; i < mesh.vertices.size(); ++i) {
            double err = length(roundtrip.vertices[i] - mesh.vertices[i]);
            double scale = std::max(1.0, length(mesh.vertices[i]));
            CHECK(err / scale < 1e-6);
        }
    }
}

TEST_CASE("mesh_aabb") {
    TriangleMesh cube = drop_to_ground(make_cube(1.0));
    // drop_to_ground leaves x/y centered at the origin
    Aabb box = mesh_aabb(cube);
    CHECK(box.lo.z == 0.0);
    CHECK(box.hi.z == 1.0);

    SECTION("scaled cube") {
        Pose pose;
        pose.scale = 2.0;
        Aabb scaled = mesh_aabb(transform_mesh(cube, pose));
        CHECK(scaled.hi.z == Catch::Approx(2.0));
    }
    SECTION("matches a direct scan and contains every vertex") {
        Rng rng = make_stream(7, 0);
        TriangleMesh soup = random_triangle_soup(200, rng);
        Aabb b = mesh_aabb(soup);
        Vec3 lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
        for (const Vec3& v : soup.vertices) {
            lo = min(lo, v);
            hi = max(hi, v);
        }
        CHECK(b.lo == lo);
        CHECK(b.hi == hi);
        for (const Vec3& v : soup.vertices) CHECK(b.contains(v));
    }
    SECTION("empty mesh is an error") {
        CHECK_THROWS(mesh_aabb(TriangleMesh{}));
    }
}

TEST_CASE("drop_to_ground") {
    Rng rng = make_stream(9, 0);
    for (double offset : {-0.3, 0.0, 2.5}) {
        TriangleMesh mesh = random_triangle_soup(30, rng);
        for (Vec3& v : mesh.vertices) v.z += offset;
        double before_min_x = mesh_aabb(mesh).lo.x;
        TriangleMesh dropped = drop_to_ground(mesh);
        CHECK(mesh_aabb(dropped).lo.z == Catch::Approx(0.0).margin(1e-9));
        CHECK(mesh_aabb(dropped).lo.x == before_min_x);  // x, y untouched

        // Idempotent.
        TriangleMesh twice = drop_to_ground(dropped);
        for (size_t i = 0; i < dropped.vertices.size(); ++i)
            CHECK(twice.vertices[i] == dropped.vertices[i]);
    }
}

TEST_CASE("bvh: single triangle and union bounds") {
    TriangleMesh tri;
    tri.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    tri.triangles = {{0, 1, 2}};
    compute_vertex_normals(tri);
    Bvh bvh = build_bvh({tri});
    REQUIRE(bvh.nodes().size() == 1);
    CHECK(bvh.nodes()[0].count == 1);

    TriangleMesh a = make_cube(1.0), b = make_cube(1.0);
    Pose shift;
    shift.translation = {5, 0, 0};
    b = transform_mesh(b, shift);
    Bvh two = build_bvh({a, b});
    Aabb expect = mesh_aabb(a);
    expect.expand(mesh_aabb(b));
    CHECK(two.nodes()[0].bounds.lo == expect.lo);
    CHECK(two.nodes()[0].bounds.hi == expect.hi);
}

TEST_CASE("bvh: every leaf triangle inside its node bounds") {
    Rng rng = make_stream(11, 0);
    TriangleMesh soup = random_triangle_soup(500, rng);
    Bvh bvh = build_bvh({soup});
    for (const Bvh::Node& node : bvh.nodes()) {
        if (node.count == 0) continue;
        for (uint32_t i = node.first; i < node.first + node.count; ++i) {
            const Bvh::Tri& t = bvh.triangles()[i];
            for (const Vec3& v : {t.v0, t.v1, t.v2}) CHECK(node.bounds.contains(v));
        }
    }
}

TEST_CASE("ray_intersect: analytic ray-box distance") {
    TriangleMesh cube = make_cube(1.0);  // centered at origin
    Bvh bvh = build_bvh({cube});
    Ray ray;
    ray.origin = {0, 0, -5};
    ray.dir = {0, 0, 1};
    auto hit = bvh.intersect(ray);
    REQUIRE(hit.has_value());
    CHECK(hit->t == Catch::Approx(4.5).epsilon(1e-9));

    Ray away;
    away.origin = {0, 0, -5};
    away.dir = {0, 0, -1};
    CHECK_FALSE(bvh.intersect(away).has_value());
}

TEST_CASE("bvh matches brute force on random soups") {
    Rng rng = make_stream(1234, 0);
    std::vector<TriangleMesh> meshes;
    meshes.push_back(random_triangle_soup(900, rng));
    meshes.push_back(random_triangle_soup(600, rng));
    Bvh bvh = build_bvh(meshes);

    int hits = 0;
    for (int i = 0; i < 1000; ++i) {
        Ray ray;
        ray.origin = {rng.uniform(-4, 4), rng.uniform(-4, 4), rng.uniform(-4, 4)};
        Vec3 dir{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        if (length(dir) < 1e-6) continue;
        ray.dir = normalize(dir);

        auto fast = bvh.intersect(ray);
        auto slow = oracle_nearest(meshes, ray.origin, ray.dir);
        REQUIRE(fast.has_value() == slow.has_value());
        if (fast) {
            ++hits;
            CHECK(fast->t == Catch::Approx(slow->t).margin(1e-6));
            // Same triangle, or a coincident one at the same distance.
            if (fast->instance != slow->instance || fast->triangle != slow->triangle)
                CHECK(std::abs(fast->t - slow->t) < 1e-9);
        }
    }
    CHECK(hits > 100);  // the scene is dense enough for the test to mean something
}

TEST_CASE("bvh occlusion agrees with nearest-hit") {
    Rng rng = make_stream(77, 0);
    TriangleMesh soup = random_triangle_soup(400, rng);
    Bvh bvh = build_bvh({soup});
    for (int i = 0; i < 500; ++i) {
        Ray ray;
        ray.origin = {rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)};
        Vec3 dir{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        if (length(dir) < 1e-6) continue;
        ray.dir = normalize(dir);
        ray.t_max = rng.uniform(0.5, 6.0);
        auto hit = bvh.intersect(ray);
        CHECK(bvh.occluded(ray) == hit.has_value());
    }
}

TEST_CASE("euler extraction reproduces arbitrary rotations") {
    Rng rng = make_stream(5, 0);
    for (int i = 0; i < 200; ++i) {
        Vec3 euler{rng.uniform(-kPi, kPi), rng.uniform(-kPi, kPi), rng.uniform(-kPi, kPi)};
        Mat3 r = rotation_xyz(euler);
        Mat3 back = rotation_xyz(euler_from_rotation(r));
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) CHECK(back.m[a][b] == Catch::Approx(r.m[a][b]).margin(1e-9));
    }
}

TEST_CASE("procedural primitives are valid meshes") {
    for (int s = 0; s < kPrimitiveShapeCount; ++s) {
        TriangleMesh m = make_primitive(static_cast<PrimitiveShape>(s));
        REQUIRE(m.triangle_count() > 0);
        CHECK(m.normals.size() == m.vertices.size());
        for (const auto& t : m.triangles) {
            CHECK(t[0] < m.vertex_count());
            CHECK(triangle_area(m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]]) > 1e-12);
        }
    }
}
