#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "occlurend/envmap.hpp"
#include "occlurend/losses.hpp"
#include "occlurend/synthetic.hpp"

using namespace occlurend;

TEST_CASE("loss_image: zero, constant offset, permutation invariance") {
    Image a(8, 8, 3, 0.4), b(8, 8, 3, 0.4);
    CHECK(loss_image(a, b) == 0.0);
    for (double& v : b.data) v += 0.1;
    CHECK(loss_image(a, b) == doctest::Approx(0.1).epsilon(1e-12));

    std::mt19937 gen(3);
    Image pa(4, 4, 3), pb(4, 4, 3);
    for (size_t i = 0; i < pa.data.size(); ++i) {
        pa.data[i] = std::uniform_real_distribution<double>(0, 1)(gen);
        pb.data[i] = std::uniform_real_distribution<double>(0, 1)(gen);
    }
    double before = loss_image(pa, pb);
    // Permute pixels of both images together.
    std::vector<int> perm(16);
    for (int i = 0; i < 16; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), gen);
    Image qa(4, 4, 3), qb(4, 4, 3);
    for (int p = 0; p < 16; ++p)
        for (int c = 0; c < 3; ++c) {
            qa.data[3 * p + c] = pa.data[3 * perm[p] + c];
            qb.data[3 * p + c] = pb.data[3 * perm[p] + c];
        }
    CHECK(loss_image(qa, qb) == doctest::Approx(before).epsilon(1e-12));

    Image wrong(4, 8, 3);
    CHECK_THROWS_AS(loss_image(a, wrong), std::runtime_error);
}

TEST_CASE("loss_mask: zero, complement, half disagreement") {
    Image a(6, 6, 1, 0.0), b(6, 6, 1, 1.0);
    CHECK(loss_mask(a, a) == 0.0);
    CHECK(loss_mask(a, b) == 1.0);
    Image half = a;
    for (int i = 0; i < 18; ++i) half.data[i] = 1.0;
    CHECK(loss_mask(half, a) == 0.5);
}

TEST_CASE("loss_laplacian: zero cases and a dense-matrix oracle") {
    TriangleMesh tet;
    tet.vertices = {{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}};
    tet.faces = {{0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}};
    UniformLaplacian lap = build_uniform_laplacian(tet);

    CHECK(loss_laplacian(tet.vertices, tet.vertices, lap) == 0.0);

    std::vector<Vec3> translated = tet.vertices;
    for (Vec3& v : translated) v += Vec3(0.3, -0.7, 2.0);
    CHECK(loss_laplacian(translated, tet.vertices, lap) == doctest::Approx(0.0).epsilon(1e-20));

    // Single displaced vertex against an explicit dense evaluation.
    std::vector<Vec3> moved = tet.vertices;
    Vec3 d(0.2, -0.1, 0.05);
    moved[1] += d;
    double dense[4][4] = {{3, -1, -1, -1}, {-1, 3, -1, -1}, {-1, -1, 3, -1}, {-1, -1, -1, 3}};
    double want = 0.0;
    for (int i = 0; i < 4; ++i) {
        Vec3 row(0, 0, 0);
        for (int j = 0; j < 4; ++j) row += (moved[j] - tet.vertices[j]) * dense[i][j];
        want += dot(row, row);
    }
    CHECK(loss_laplacian(moved, tet.vertices, lap) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("loss_light_white: grayscale zero, single colored texel, homogeneity") {
    EnvironmentMap gray(8);
    for (int f = 0; f < 6; ++f)
        for (double& v : gray.face(0, f).data) v = 0.7;
    CHECK(loss_light_white(gray) <= 1e-12);

    EnvironmentMap one(8);
    one.face(0, 1).at(2, 3, 0) = 1.0;  // texel (1,0,0)
    double count = 6.0 * 8 * 8;
    CHECK(loss_light_white(one) == doctest::Approx((4.0 / 3.0) / count).epsilon(1e-12));

    EnvironmentMap scaled = one;
    for (int f = 0; f < 6; ++f)
        for (double& v : scaled.face(0, f).data) v *= 5.0;
    CHECK(loss_light_white(scaled) == doctest::Approx(5.0 * loss_light_white(one)).epsilon(1e-12));
}

TEST_CASE("loss_rough_tv: constant zero, vertical step, offset invariance") {
    Image flat(16, 16, 1, 0.5);
    CHECK(loss_rough_tv(flat) == 0.0);

    // Step of height h across a vertical edge: N rows each contribute |h|.
    const int n = 16;
    const double h = 0.3;
    Image step(n, n, 1, 0.2);
    for (int y = 0; y < n; ++y)
        for (int x = 8; x < n; ++x) step.at(x, y, 0) = 0.2 + h;
    double dense = 0.0;
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            int x1 = std::min(x + 1, n - 1), y1 = std::min(y + 1, n - 1);
            dense += std::fabs(step.at(x1, y, 0) - step.at(x, y, 0));
            dense += std::fabs(step.at(x, y1, 0) - step.at(x, y, 0));
        }
    dense /= n * n;
    CHECK(loss_rough_tv(step) == doctest::Approx(dense).epsilon(1e-12));
    CHECK(loss_rough_tv(step) == doctest::Approx(h * n / double(n * n)).epsilon(1e-12));

    Image offset = step;
    for (double& v : offset.data) v += 0.13;
    CHECK(loss_rough_tv(offset) == doctest::Approx(loss_rough_tv(step)).epsilon(1e-12));
}

TEST_CASE("loss_diffuse: zero, constant, quadratic scaling") {
    Image mask(8, 8, 1, 1.0);
    Image black(8, 8, 3, 0.0);
    CHECK(loss_diffuse(black, mask) == 0.0);

    Image half(8, 8, 3, 0.5);
    CHECK(loss_diffuse(half, mask) == doctest::Approx(0.25).epsilon(1e-12));

    Image one(8, 8, 3, 1.0);
    CHECK(loss_diffuse(one, mask) == doctest::Approx(4.0 * loss_diffuse(half, mask)).epsilon(1e-12));
}

TEST_CASE("total_loss: weighted sum with the default weights") {
    LossWeights w;
    CHECK(total_loss(0, 0, 0, 0, 0, 0, w).total == 0.0);
    CHECK(total_loss(1, 0, 0, 0, 0, 0, w).total == 1.0);
    CHECK(total_loss(0, 0, 1, 0, 0, 0, w).total == 10.0);
    CHECK(total_loss(0, 1, 0, 0, 0, 0, w).total == doctest::Approx(0.1));
    LossBreakdown b = total_loss(0.5, 0.2, 0.1, 0.3, 0.4, 0.6, w);
    CHECK(b.total == doctest::Approx(0.5 + 0.1 * 0.2 + 10.0 * 0.1 + 0.1 * 0.3 + 0.1 * 0.4 + 0.01 * 0.6));
}
