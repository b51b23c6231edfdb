#include <doctest.h>

#include <cmath>
#include <random>

#include "occlurend/brdf.hpp"
#include "occlurend/rng.hpp"
#include "oracles.hpp"

using namespace occlurend;
using namespace occlurend::testing;

TEST_CASE("lambert: closed forms and linearity") {
    Vec3 white = lambert_eval(Vec3(1, 1, 1));
    CHECK(white.x == doctest::Approx(1.0 / kPi));
    CHECK(white.y == doctest::Approx(1.0 / kPi));
    CHECK(white.z == doctest::Approx(1.0 / kPi));
    Vec3 zero = lambert_eval(Vec3(0, 0, 0));
    CHECK(zero.x == 0.0);
    Vec3 mixed = lambert_eval(Vec3(0.6, 0.3, 0.1));
    CHECK(mixed.x == doctest::Approx(0.1910).epsilon(1e-3));
    CHECK(mixed.y == doctest::Approx(0.0955).epsilon(1e-3));
    CHECK(mixed.z == doctest::Approx(0.0318).epsilon(2e-3));
    // Linearity in rho.
    Vec3 a = lambert_eval(Vec3(0.2, 0.4, 0.8));
    Vec3 b = lambert_eval(Vec3(0.1, 0.2, 0.4));
    CHECK(a.x == doctest::Approx(2.0 * b.x));
    CHECK(a.z == doctest::Approx(2.0 * b.z));
}

TEST_CASE("beckmann: normal incidence closed form and back-facing zero") {
    Vec3 n(0, 0, 1);
    CHECK(beckmann_d(n, n, 0.5) == doctest::Approx(1.0 / (kPi * 0.25)));
    CHECK(beckmann_d(n, Vec3(0, 0, -1), 0.5) == 0.0);
    CHECK(beckmann_d(n, Vec3(1, 0, 0), 0.5) == 0.0);
}

TEST_CASE("beckmann: D cos integrates to one") {
    Vec3 n(0, 0, 1);
    for (double r : {0.1, 0.3, 0.8}) {
        double integral = quadrature_hemisphere([&](const Vec3& h) { return beckmann_d(n, h, r) * h.z; });
        CHECK(integral == doctest::Approx(1.0).epsilon(1e-2));
    }
}

TEST_CASE("kelemen specular: retroreflection closed form") {
    Vec3 n(0, 0, 1);
    SpecularParams p;
    p.intensity = 1.0;
    p.roughness = 0.5;
    p.f0 = 0.028;
    double fs = kelemen_specular_eval(n, n, n, p);
    CHECK(fs == doctest::Approx(1.2732395 * 0.028 / 4.0).epsilon(1e-4));

    CHECK(kelemen_specular_eval(Vec3(0, 0, -1), n, n, p) == 0.0);
    CHECK(kelemen_specular_eval(n, Vec3(0.3, 0.2, -0.5), n, p) == 0.0);
}

TEST_CASE("kelemen specular: helmholtz reciprocity is exact") {
    Pcg32 rng(2, 4);
    SpecularParams p;
    p.intensity = 0.8;
    p.f0 = 0.028;
    Vec3 n(0, 0, 1);
    for (int i = 0; i < 200; ++i) {
        double z1 = rng.next_double(), z2 = rng.next_double();
        double p1 = 2 * kPi * rng.next_double(), p2 = 2 * kPi * rng.next_double();
        Vec3 wi(std::sqrt(1 - z1 * z1) * std::cos(p1), std::sqrt(1 - z1 * z1) * std::sin(p1), z1);
        Vec3 wo(std::sqrt(1 - z2 * z2) * std::cos(p2), std::sqrt(1 - z2 * z2) * std::sin(p2), z2);
        p.roughness = 0.05 + 0.9 * rng.next_double();
        CHECK(kelemen_specular_eval(wi, wo, n, p) == kelemen_specular_eval(wo, wi, n, p));
    }
}

TEST_CASE("kelemen specular: white furnace bound") {
    Vec3 n(0, 0, 1);
    SpecularParams p;
    p.intensity = 1.0;
    p.f0 = 1.0;  // worst case for energy
    for (double r : {0.1, 0.5, 1.0}) {
        for (double angle : {0.0, kPi / 4.0}) {
            p.roughness = r;
            Vec3 wo(std::sin(angle), 0.0, std::cos(angle));
            double integral = quadrature_hemisphere(
                [&](const Vec3& wi) { return kelemen_specular_eval(wi, wo, n, p) * wi.z; }, 600, 600);
            CHECK(integral <= 1.05);
        }
    }
}

TEST_CASE("sample_ndf: u1 = 0 gives the mirror direction") {
    Vec3 n = normalize(Vec3(0.3, -0.2, 0.9));
    Vec3 wo = normalize(Vec3(-0.4, 0.1, 0.8));
    for (double u2 : {0.0, 0.3, 0.77}) {
        NdfSample s = sample_ndf(n, wo, 0.4, 0.0, u2);
        CHECK(length(s.h - n) < 1e-12);
        CHECK(length(s.wi - reflect(wo, n)) < 1e-12);
    }
}

TEST_CASE("sample_ndf: theta_h histogram matches the analytic marginal") {
    const double r = 0.3;
    const int n_samples = 1000000, n_bins = 50;
    const double theta_max = 3.0 * r;  // covers essentially all the mass
    Vec3 n(0, 0, 1), wo(0, 0, 1);
    std::vector<double> counts(n_bins, 0.0);
    Pcg32 rng(9, 12);
    int kept = 0;
    for (int i = 0; i < n_samples; ++i) {
        NdfSample s = sample_ndf(n, wo, r, rng.next_double(), rng.next_double());
        double theta = std::acos(std::clamp(dot(n, s.h), -1.0, 1.0));
        if (theta >= theta_max) continue;
        counts[static_cast<int>(theta / theta_max * n_bins)] += 1.0;
        ++kept;
    }
    // Expected bin mass from the marginal p(theta) = 2 pi D(theta) cos sin,
    // integrated by fine midpoint quadrature per bin.
    double chi2 = 0.0;
    for (int b = 0; b < n_bins; ++b) {
        double mass = 0.0;
        const int sub = 200;
        for (int s = 0; s < sub; ++s) {
            double theta = (b + (s + 0.5) / sub) * theta_max / n_bins;
            mass += 2.0 * kPi * beckmann_d_cos(std::cos(theta), r) * std::cos(theta) * std::sin(theta);
        }
        mass *= theta_max / n_bins / sub;
        double expected = mass * n_samples;
        if (expected > 5.0) chi2 += (counts[b] - expected) * (counts[b] - expected) / expected;
    }
    CHECK(kept > n_samples * 99 / 100);
    CHECK(chi_square_p_value(chi2, n_bins - 1) > 0.01);
}

TEST_CASE("sample_ndf: reported pdf integrates to one over directions") {
    // Independent quadrature of the returned solid-angle density.
    const double r = 0.3;
    Vec3 n(0, 0, 1);
    Vec3 wo = normalize(Vec3(0.4, 0.0, 0.9));
    auto pdf_at = [&](const Vec3& wi) {
        Vec3 h = wi + wo;
        double hl = length(h);
        if (hl <= 0.0) return 0.0;
        h = h / hl;
        double coh = dot(wo, h);
        if (coh <= 0.0 || dot(n, h) <= 0.0) return 0.0;
        return beckmann_d(n, h, r) * dot(n, h) / (4.0 * coh);
    };
    // Integrate over the full sphere: the two hemispheres around n.
    double upper = quadrature_hemisphere(pdf_at, 800, 800);
    double lower = quadrature_hemisphere([&](const Vec3& w) { return pdf_at(Vec3(w.x, w.y, -w.z)); }, 800, 800);
    CHECK(upper + lower == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("brdf lut: mirror limit, energy bound, oracle spot check") {
    BrdfLut lut = precompute_brdf_lut(1024, 0);

    // Mirror-limit cell (r = r_min row, cos theta = 1 column).
    double scale, bias;
    lut.lookup(1.0, kRoughnessMin, &scale, &bias);
    CHECK(scale == doctest::Approx(1.0).epsilon(0.05));
    CHECK(std::fabs(bias) < 0.05);

    const int n = BrdfLut::kResolution;
    for (int i = 0; i < n * n; ++i) {
        CHECK(std::isfinite(lut.scale[i]));
        CHECK(std::isfinite(lut.bias[i]));
        CHECK(lut.scale[i] >= 0.0);
        CHECK(lut.bias[i] >= 0.0);
        CHECK(lut.scale[i] + lut.bias[i] <= 1.0 + 1e-3);
    }

    double oscale, obias;
    brdf_lut_cell_oracle(0.5, 0.5, 1000000, 42, &oscale, &obias);
    lut.lookup(0.5, 0.5, &scale, &bias);
    CHECK(std::fabs(scale - oscale) < 1e-2);
    CHECK(std::fabs(bias - obias) < 1e-2);
}

TEST_CASE("brdf lut: bilinear lookup tracks on-the-fly integration on a probe grid") {
    BrdfLut lut = precompute_brdf_lut(1024, 0);
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 16; ++j) {
            double cos_o = 0.05 + (i + 0.5) * 0.93 / 16.0;
            double r = 0.05 + (j + 0.5) * 0.93 / 16.0;
            double scale, bias, oscale, obias;
            lut.lookup(cos_o, r, &scale, &bias);
            brdf_lut_cell_oracle(cos_o, r, 200000, 1000 + 16 * i + j, &oscale, &obias);
            CHECK(std::fabs(scale - oscale) < 2e-2);
            CHECK(std::fabs(bias - obias) < 2e-2);
        }
}

TEST_CASE("brdf lut: deterministic for a fixed seed and pfm round trip") {
    BrdfLut a = precompute_brdf_lut(256, 5);
    BrdfLut b = precompute_brdf_lut(256, 5);
    CHECK(a.scale == b.scale);
    CHECK(a.bias == b.bias);

    write_brdf_lut("lut_roundtrip.pfm", a);
    BrdfLut c = read_brdf_lut("lut_roundtrip.pfm");
    for (size_t i = 0; i < a.scale.size(); ++i) {
        CHECK(static_cast<float>(a.scale[i]) == static_cast<float>(c.scale[i]));
        CHECK(static_cast<float>(a.bias[i]) == static_cast<float>(c.bias[i]));
    }
}
