#include <doctest.h>

#include <cmath>
#include <random>

#include "roadscene/error.hpp"
#include "roadscene/photometry.hpp"
#include "roadscene/skydome.hpp"

using namespace roadscene;

namespace {

SkyLatent latent_at(const Vec3& dir, const Rgb& intensity) {
  SkyLatent l;
  l.peak_direction = dir.normalized();
  l.peak_intensity = intensity;
  return l;
}

SkyEstimate estimate(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SkyEstimate e;
  e.dir = Vec3(u(rng) - 0.5, u(rng) - 0.5, u(rng)).normalized();
  e.intensity = Rgb(10 * u(rng), 10 * u(rng), 10 * u(rng));
  e.hdr = RgbImage(4, 8);
  e.ldr = RgbImage(4, 8);
  for (auto& p : e.hdr.pixels()) p = Rgb(2 * u(rng), 2 * u(rng), 2 * u(rng));
  // A consistent estimate: its LDR panorama is the encoded HDR one.
  for (std::size_t i = 0; i < e.hdr.size(); ++i) e.ldr.pixels()[i] = oetf(e.hdr.pixels()[i]);
  for (int i = 0; i < kSkyContentDim; ++i) e.content[i] = u(rng);
  return e;
}

}  // namespace

TEST_SUITE("skydome") {
  TEST_CASE("peak pixel: M_dir = 1 and M_int = f_int") {
    const int h = 64, w = 128;
    const Vec3 f = equirect_dir(20, 37, h, w);
    const SkyMaps m = build_sky_maps(latent_at(f, Rgb(5000, 4800, 4500)), h, w);
    CHECK(m.dir(20, 37) == 1.0);
    CHECK((m.intensity(20, 37) == Rgb(5000, 4800, 4500)).all());
    CHECK(m.encoding(20, 37) == f);
  }

  TEST_CASE("perpendicular pixel: exp(-100), no intensity") {
    // 3 x 2 map: pixel (1, 0) sits on the equator at azimuth 90 degrees, i.e. +y.
    REQUIRE((equirect_dir(1, 0, 3, 2) - Vec3::UnitY()).norm() < 1e-15);
    const SkyMaps m = build_sky_maps(latent_at(Vec3::UnitX(), Rgb(3, 3, 3)), 3, 2);
    CHECK(m.dir(1, 0) == doctest::Approx(std::exp(-100.0)).epsilon(1e-9));
    CHECK((m.intensity(1, 0) == 0.0).all());
  }

  TEST_CASE("threshold boundary at u.f = 1 + ln(0.9)/100") {
    const double boundary = 1.0 + std::log(0.9) / 100.0;
    CHECK(std::abs(boundary - 0.998946) < 1e-6);
    const int h = 128, w = 256;
    const Vec3 f = Vec3(0.3, -0.2, 0.8).normalized();
    const SkyMaps m = build_sky_maps(latent_at(f, Rgb(7, 7, 7)), h, w);
    int inside = 0, mismatched = 0;
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) {
        const double dot = m.encoding(r, c).dot(f);
        const bool lit = (m.intensity(r, c) != 0.0).any();
        if (lit) ++inside;
        if (std::abs(dot - boundary) > 1e-9 && lit != (dot > boundary)) ++mismatched;
        CHECK(m.dir(r, c) > 0.0);
        CHECK(m.dir(r, c) <= 1.0);
      }
    CHECK(inside > 0);
    CHECK(mismatched == 0);
  }

  TEST_CASE("inject_peak_residual") {
    const int h = 64, w = 128;
    const Vec3 f = equirect_dir(10, 90, h, w);
    const Rgb fi(5000, 4800, 4500);
    const SkyMaps m = build_sky_maps(latent_at(f, fi), h, w);
    const EnvironmentMap decoded(h, w, Rgb::Constant(0.5));
    const EnvironmentMap out = inject_peak_residual(decoded, m);
    CHECK((out.pixels(10, 90) == fi).all());
    int lobe = 0;
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) {
        if ((m.intensity(r, c) == 0.0).all()) {
          CHECK((out.pixels(r, c) == decoded.pixels(r, c)).all());
        } else {
          ++lobe;
          CHECK((out.pixels(r, c) == m.dir(r, c) * fi).all());
        }
      }
    CHECK(lobe >= 1);
    CHECK(inject_peak_residual(out, m) == out);
    CHECK_THROWS_AS(inject_peak_residual(EnvironmentMap(h, w / 2), m), Error);
  }

  TEST_CASE("a lobe pixel with M_dir = 0.95 receives 0.95 f_int") {
    // Place f so that a chosen pixel sits at u.f = 1 + ln(0.95)/100.
    const int h = 64, w = 128;
    const Vec3 u = equirect_dir(30, 40, h, w);
    const double angle = std::acos(1.0 + std::log(0.95) / 100.0);
    const Vec3 axis = u.cross(Vec3::UnitZ()).normalized();
    const Vec3 f = Eigen::AngleAxisd(angle, axis) * u;
    const Rgb fi(100, 200, 300);
    const SkyMaps m = build_sky_maps(latent_at(f, fi), h, w);
    CHECK(m.dir(30, 40) == doctest::Approx(0.95).epsilon(1e-9));
    const EnvironmentMap out = inject_peak_residual(EnvironmentMap(h, w), m);
    for (int k = 0; k < 3; ++k) CHECK(out.pixels(30, 40)[k] == doctest::Approx(0.95 * fi[k]).epsilon(1e-9));
  }

  TEST_CASE("argmax of M_dir is the pixel nearest f") {
    const Vec3 f = Vec3(-0.4, 0.7, 0.35).normalized();
    for (auto [h, w] : {std::pair{64, 128}, {128, 256}}) {
      const SkyMaps m = build_sky_maps(latent_at(f, Rgb::Ones()), h, w);
      int br = 0, bc = 0, nr = 0, nc = 0;
      double best = -1, nearest = -2;
      for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
          if (m.dir(r, c) > best) best = m.dir(r, c), br = r, bc = c;
          const double d = equirect_dir(r, c, h, w).dot(f);
          if (d > nearest) nearest = d, nr = r, nc = c;
        }
      CHECK(br == nr);
      CHECK(bc == nc);
    }
  }

  TEST_CASE("decoder input is the 7-channel concatenation") {
    const SkyMaps m = build_sky_maps(latent_at(Vec3::UnitZ(), Rgb(2, 3, 4)), 4, 8);
    const auto in = m.decoder_input();
    REQUIRE(in.size() == 4 * 8 * 7);
    CHECK(in[0] == static_cast<float>(m.dir(0, 0)));
    CHECK(in[4] == static_cast<float>(m.encoding(0, 0).x()));
    CHECK_THROWS_AS(build_sky_maps(latent_at(Vec3::UnitZ(), Rgb::Ones()), 1, 8), Error);
  }

  TEST_CASE("fusion of a single camera is the identity") {
    SkyLatent l = latent_at(Vec3(0.2, 0.1, 0.9), Rgb(3, 4, 5));
    for (int i = 0; i < kSkyContentDim; ++i) l.content[i] = std::sin(i);
    const Pose6D pose{Mat3(Eigen::AngleAxisd(0.4, Vec3::UnitZ())), Vec3(1, 2, 3)};
    CHECK(fuse_latents({l}, {pose}) == l);
  }

  TEST_CASE("cameras yawed +-30 degrees agree on the world peak") {
    const Vec3 world = Vec3(0.5, 0.3, 0.8).normalized();
    const Mat3 r0 = Eigen::AngleAxisd(deg_to_rad(30), Vec3::UnitZ()).toRotationMatrix();
    const Mat3 r1 = Eigen::AngleAxisd(deg_to_rad(-30), Vec3::UnitZ()).toRotationMatrix();
    // Each camera reports the peak in its own frame.
    const SkyLatent a = latent_at(r0.transpose() * world, Rgb(10, 10, 10));
    const SkyLatent b = latent_at(r1.transpose() * world, Rgb(20, 30, 40));
    const SkyLatent fused = fuse_latents({a, b}, {Pose6D{r0, Vec3::Zero()}, Pose6D{r1, Vec3::Zero()}});
    // Expressed in the front camera's frame.
    CHECK((fused.peak_direction - r0.transpose() * world).norm() < 1e-9);
    CHECK((r0 * fused.peak_direction - world).norm() < 1e-9);
    CHECK(std::abs(fused.peak_direction.norm() - 1.0) < 1e-12);
    CHECK((fused.peak_intensity == Rgb(15, 20, 25)).all());
  }

  TEST_CASE("attention fusion") {
    SkyContent c;
    for (int i = 0; i < kSkyContentDim; ++i) c[i] = 0.1 * i - 2.0;
    std::vector<SkyLatent> ls(4, latent_at(Vec3::UnitZ(), Rgb::Ones()));
    std::vector<Pose6D> ps(4);
    for (auto& l : ls) l.content = c;
    CHECK((fuse_latents(ls, ps).content - c).norm() < 1e-12);

    // Oracle softmax with q = first content.
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0.0, 0.5);
    for (auto& l : ls)
      for (int i = 0; i < kSkyContentDim; ++i) l.content[i] = n(rng);
    std::vector<double> wts;
    double z = 0.0;
    for (const auto& l : ls) {
      wts.push_back(std::exp(ls[0].content.dot(l.content) / 8.0));
      z += wts.back();
    }
    SkyContent expect = SkyContent::Zero();
    for (std::size_t i = 0; i < ls.size(); ++i) expect += wts[i] / z * ls[i].content;
    CHECK((fuse_latents(ls, ps).content - expect).norm() < 1e-12);
  }

  TEST_CASE("fusion envelope and degenerate input") {
    const SkyLatent a = latent_at(Vec3::UnitX(), Rgb(1, 9, 3));
    const SkyLatent b = latent_at(Vec3::UnitY(), Rgb(5, 2, 7));
    const SkyLatent f = fuse_latents({a, b}, {Pose6D{}, Pose6D{}});
    for (int k = 0; k < 3; ++k) {
      CHECK(f.peak_intensity[k] >= std::min(a.peak_intensity[k], b.peak_intensity[k]));
      CHECK(f.peak_intensity[k] <= std::max(a.peak_intensity[k], b.peak_intensity[k]));
    }
    const SkyLatent opposite = latent_at(-Vec3::UnitX(), Rgb::Ones());
    try {
      fuse_latents({a, opposite}, {Pose6D{}, Pose6D{}});
      FAIL("expected kDegenerate");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kDegenerate);
    }
    CHECK_THROWS_AS(fuse_latents({a}, {}), Error);
  }

  TEST_CASE("stage-1 losses") {
    const SkyEstimate t = estimate(1);
    const Stage1Losses zero = sky_losses_stage1(t, t);
    CHECK(zero.total == 0.0);
    CHECK(zero.dir == 0.0);
    CHECK(direction_loss(Vec3::UnitX(), Vec3::UnitY()) == doctest::Approx(kPi / 2).epsilon(1e-15));
    CHECK(stage1_total(1, 2, 3, 4) == 8.0);
    CHECK_THROWS_AS(direction_loss(Vec3(2, 0, 0), Vec3::UnitX()), Error);

    SkyEstimate p = estimate(2);
    for (auto& px : p.hdr.pixels()) px *= 1.3;
    const Stage1Losses l = sky_losses_stage1(p, t);
    CHECK(l.dir == doctest::Approx(std::acos(p.dir.dot(t.dir))).epsilon(1e-9));
    double li = 0.0;
    for (int k = 0; k < 3; ++k) li += std::pow(std::log(1 + p.intensity[k]) - std::log(1 + t.intensity[k]), 2);
    CHECK(l.intensity == doctest::Approx(li).epsilon(1e-12));
    double hdr = 0.0, ldr = 0.0;
    for (std::size_t i = 0; i < t.hdr.size(); ++i)
      for (int k = 0; k < 3; ++k) {
        hdr += std::pow(std::log(1 + p.hdr.pixels()[i][k]) - std::log(1 + t.hdr.pixels()[i][k]), 2);
        const double x = std::min(p.hdr.pixels()[i][k], 1.0);
        const double enc = x <= 0.0031308 ? 12.92 * x : 1.055 * std::pow(x, 1 / 2.4) - 0.055;
        ldr += std::abs(t.ldr.pixels()[i][k] - enc);
      }
    CHECK(l.hdr == doctest::Approx(hdr / (3.0 * t.hdr.size())).epsilon(1e-12));
    CHECK(l.ldr == doctest::Approx(ldr / (3.0 * t.hdr.size())).epsilon(1e-12));
    CHECK(l.total == doctest::Approx(1.0 * l.dir + 0.1 * l.intensity + 2.0 * l.hdr + 0.2 * l.ldr).epsilon(1e-15));
  }

  TEST_CASE("stage-2 losses") {
    const SkyEstimate t = estimate(3);
    CHECK(sky_losses_stage2(t, t).total == 0.0);
    CHECK(stage2_total(1, 1, 1, 1, 1) == 1.055);
    SkyContent a = SkyContent::Constant(1.0), b = SkyContent::Constant(3.0);
    CHECK(content_loss(a, b) == 2.0);
    SkyEstimate p = t;
    p.content = t.content.array() + 2.0;
    const Stage2Losses l = sky_losses_stage2(p, t);
    CHECK(l.content == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(l.total == doctest::Approx(0.2 * 2.0).epsilon(1e-12));
  }

  TEST_CASE("white balance augmentation") {
    EnvironmentMap map(4, 8, Rgb(1, 1, 1));
    map.pixels(1, 1) = Rgb(0.3, 0.6, 0.9);
    const EnvironmentMap fixed = apply_white_balance(map, {1.25, 1.25});
    CHECK(fixed.pixels(0, 0)[0] == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(fixed.pixels(0, 0)[1] == 1.0);
    CHECK(fixed.pixels(0, 0)[2] == 1.25);

    const EnvironmentMap aug = white_balance_augment(map, 77);
    for (std::size_t i = 0; i < map.pixels.size(); ++i) CHECK(aug.pixels.pixels()[i][1] == map.pixels.pixels()[i][1]);
    CHECK(white_balance_augment(map, 77) == aug);

    double lo = 10, hi = 0;
    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
      const WhiteBalance wb = draw_white_balance(seed);
      lo = std::min({lo, wb.blue_gain, wb.red_divisor});
      hi = std::max({hi, wb.blue_gain, wb.red_divisor});
    }
    CHECK(lo >= 1.2);
    CHECK(hi <= 1.3);
  }

  TEST_CASE("latent JSON is 70 numbers") {
    SkyLatent l = latent_at(Vec3(1, 1, 1), Rgb(1, 2, 3));
    l.content[63] = 4.5;
    const auto j = to_json(l);
    CHECK(j.size() == 70);
    CHECK(sky_latent_from_json(j) == l);
    CHECK_THROWS_AS(sky_latent_from_json(nlohmann::json::array({1, 2})), Error);
  }
}
