// Copyright 2026 The Purifuse Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "purifuse/error.hpp"
#include "purifuse/evaluator.hpp"
#include "purifuse/image_io.hpp"
#include "purifuse/purifier.hpp"
#include "purifuse/subprocess.hpp"
#include "purifuse/synthetic.hpp"
#include "test_util.hpp"

using namespace purifuse;

namespace {

ImageBuffer constant(int w, int h, int ch, double v) { return ImageBuffer(w, h, ch, v); }

double sum_of(const ImageBuffer& img) {
  return std::accumulate(img.data().begin(), img.data().end(), 0.0);
}

double energy(const ImageBuffer& img) {
  double e = 0;
  for (double v : img.data()) e += v * v;
  return e;
}

// Per-pixel median by sorting the reflected window.
ImageBuffer brute_median(const ImageBuffer& img, int r) {
  ImageBuffer out(img.width(), img.height(), img.channels());
  for (int c = 0; c < img.channels(); ++c) {
    for (int y = 0; y < img.height(); ++y) {
      for (int x = 0; x < img.width(); ++x) {
        std::vector<double> win;
        for (int dy = -r; dy <= r; ++dy) {
          for (int dx = -r; dx <= r; ++dx) {
            win.push_back(img.at(c, reflect_index(y + dy, img.height()),
                                 reflect_index(x + dx, img.width())));
          }
        }
        std::sort(win.begin(), win.end());
        out.at(c, y, x) = win[win.size() / 2];
      }
    }
  }
  return out;
}

void expect_valid(const ImageBuffer& img, int w, int h, int ch) {
  ASSERT_EQ(img.width(), w);
  ASSERT_EQ(img.height(), h);
  ASSERT_EQ(img.channels(), ch);
  for (double v : img.data()) {
    ASSERT_TRUE(std::isfinite(v));
    ASSERT_GE(v, 0.0);
    ASSERT_LE(v, 1.0);
  }
}

StageSpec stage(StageMethod m) { return StageSpec{std::move(m)}; }

}  // namespace

TEST(Reflect, HalfSampleSymmetric) {
  EXPECT_EQ(reflect_index(-1, 5), 0);
  EXPECT_EQ(reflect_index(-2, 5), 1);
  EXPECT_EQ(reflect_index(5, 5), 4);
  EXPECT_EQ(reflect_index(6, 5), 3);
  EXPECT_EQ(reflect_index(10, 5), 0);
  EXPECT_EQ(reflect_index(-7, 1), 0);
}

TEST(Median, ConstantUnchanged) {
  const ImageBuffer img = constant(7, 5, 3, 0.3);
  EXPECT_EQ(median_denoise(img, 1), img);
  EXPECT_EQ(median_denoise(img, 2), img);
}

TEST(Median, RemovesSaltPixel) {
  ImageBuffer img = constant(5, 5, 1, 0.0);
  img.at(0, 2, 2) = 1.0;
  EXPECT_EQ(median_denoise(img, 1), constant(5, 5, 1, 0.0));
}

TEST(Median, CheckerboardMatchesBruteForce) {
  ImageBuffer img(8, 8, 1);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) img.at(0, y, x) = ((x / 2) + (y / 2)) % 2 ? 1.0 : 0.0;
  }
  EXPECT_EQ(median_denoise(img, 1), brute_median(img, 1));
}

TEST(Median, RandomMatchesBruteForce) {
  testutil::Rng rng(31);
  for (int i = 0; i < 20; ++i) {
    const ImageBuffer img = testutil::random_image(rng, testutil::pick(rng, 3, 9),
                                                   testutil::pick(rng, 3, 9), 1 + 2 * (i % 2));
    const int r = testutil::pick(rng, 1, 3);
    if (r > std::min(img.width(), img.height())) continue;
    EXPECT_EQ(median_denoise(img, r), brute_median(img, r));
  }
}

TEST(Median, RejectsBadRadius) {
  EXPECT_THROW(median_denoise(constant(4, 4, 1, 0), 0), std::invalid_argument);
  EXPECT_THROW(median_denoise(constant(4, 3, 1, 0), 4), std::invalid_argument);
}

TEST(Gaussian, ConstantUnchanged) {
  const ImageBuffer img = constant(9, 6, 1, 0.42);
  const ImageBuffer out = gaussian_denoise(img, 1.5);
  EXPECT_LE(max_abs_diff(out, img), 1e-9);
}

TEST(Gaussian, ImpulseCenterMatchesKernel) {
  ImageBuffer img = constant(41, 41, 1, 0.0);
  img.at(0, 20, 20) = 1.0;
  const double sigma = 2.0;
  const auto k = gaussian_kernel_1d(sigma);
  const std::size_t r = k.size() / 2;
  EXPECT_EQ(r, 6u);
  const double g0 = std::exp(0.0);
  double s = 0;
  for (int i = -6; i <= 6; ++i) s += std::exp(-i * i / (2 * sigma * sigma));
  EXPECT_NEAR(k[r], g0 / s, 1e-15);
  const ImageBuffer out = gaussian_denoise(img, sigma);
  EXPECT_NEAR(out.at(0, 20, 20), (g0 / s) * (g0 / s), 1e-9);
  EXPECT_NEAR(out.at(0, 20, 23), k[r] * k[r + 3], 1e-9);
}

TEST(Gaussian, SmallSigmaNearIdentity) {
  testutil::Rng rng(32);
  const ImageBuffer img = testutil::random_image(rng, 16, 12, 3);
  EXPECT_LE(max_abs_diff(gaussian_denoise(img, 0.1), img), 1e-3);
}

TEST(GaussianProperty, MeanPreserved) {
  testutil::Rng rng(33);
  for (int i = 0; i < testutil::kPropertyCases; ++i) {
    const ImageBuffer img = testutil::random_image(rng, testutil::pick(rng, 4, 20),
                                                   testutil::pick(rng, 4, 20), 1);
    const double sigma = testutil::unif(rng, 0.3, 3.0);
    EXPECT_NEAR(mean_value(gaussian_denoise(img, sigma)), mean_value(img), 1e-6);
  }
}

TEST(MotionPsf, Examples) {
  const Psf one = motion_psf(1, 37.0);
  EXPECT_EQ(one.width, 1);
  EXPECT_EQ(one.height, 1);
  EXPECT_DOUBLE_EQ(one.weights[0], 1.0);
  const Psf five = motion_psf(5, 0.0);
  ASSERT_EQ(five.width, 5);
  ASSERT_EQ(five.height, 1);
  for (double v : five.weights) EXPECT_NEAR(v, 0.2, 1e-15);
  const Psf vert = motion_psf(3, 90.0);
  EXPECT_EQ(vert.width, 1);
  EXPECT_EQ(vert.height, 3);
}

TEST(MotionPsfProperty, SumsToOne) {
  testutil::Rng rng(34);
  for (int i = 0; i < testutil::kPropertyCases; ++i) {
    const Psf p = motion_psf(testutil::pick(rng, 1, 25), testutil::unif(rng, -360, 360));
    EXPECT_NEAR(p.sum(), 1.0, 1e-9);
    EXPECT_EQ(p.width % 2, 1);
    EXPECT_EQ(p.height % 2, 1);
    for (double v : p.weights) EXPECT_GE(v, 0.0);
  }
}

TEST(Psf, FromKernelValidates) {
  const Psf p = Psf::FromKernel(3, 1, {1, 2, 1});
  EXPECT_NEAR(p.at(0, 1), 0.5, 1e-15);
  EXPECT_THROW(Psf::FromKernel(2, 1, {1, 1}), std::invalid_argument);
  EXPECT_THROW(Psf::FromKernel(1, 1, {-1}), std::invalid_argument);
  EXPECT_THROW(Psf::FromKernel(3, 1, {0, 0, 0}), std::invalid_argument);
  const Psf f = Psf::FromKernel(3, 1, {1, 2, 3}).flipped();
  EXPECT_NEAR(f.at(0, 0), 0.5, 1e-15);
}

TEST(Wiener, IdentityPsfNoNoiseIsIdentity) {
  testutil::Rng rng(35);
  const ImageBuffer img = testutil::random_image(rng, 17, 11, 3);
  EXPECT_LE(max_abs_diff(wiener_deblur(img, Psf::Identity(), 0.0), img), 1e-6);
}

TEST(Wiener, RestoresBlurredTestCard) {
  const ImageBuffer card = make_test_card(96, 96);
  const Psf psf = motion_psf(9, 0.0);
  const ImageBuffer blurred = convolve(card, psf);
  const ImageBuffer restored = wiener_deblur(blurred, psf, 1e-3);
  EXPECT_GE(psnr(restored, card) - psnr(blurred, card), 3.0);
  EXPECT_GT(concentration_metrics(restored).laplacian_variance,
            concentration_metrics(blurred).laplacian_variance);
}

TEST(Wiener, LargeNoisePowerAttenuates) {
  const ImageBuffer card = make_test_card(48, 48);
  const Psf psf = motion_psf(7, 30.0);
  const ImageBuffer blurred = convolve(card, psf);
  double prev = energy(blurred) * 10;
  for (double k : {1e-2, 1e-1, 1.0, 10.0, 100.0, 1e4}) {
    const double e = energy(wiener_deblur(blurred, psf, k));
    EXPECT_LE(e, prev);
    prev = e;
  }
  EXPECT_LT(prev, 1e-3 * energy(blurred));
}

TEST(Wiener, Errors) {
  EXPECT_THROW(wiener_deblur(constant(4, 4, 1, 0.5), motion_psf(9, 0), 1e-3),
               std::invalid_argument);
  EXPECT_THROW(wiener_deblur(constant(4, 4, 1, 0.5), Psf::Identity(), -1.0),
               std::invalid_argument);
}

TEST(RichardsonLucy, IdentityPsfFixedPoint) {
  testutil::Rng rng(36);
  ImageBuffer img = testutil::random_image(rng, 9, 7, 1);
  for (double& v : img.data()) v = 0.05 + 0.9 * v;
  for (int it : {1, 5, 20}) {
    EXPECT_LE(max_abs_diff(richardson_lucy(img, Psf::Identity(), it), img), 1e-6);
  }
}

TEST(RichardsonLucy, OneStepOnEightPixels) {
  const ImageBuffer obs(8, 1, 1, {0.1, 0.2, 0.4, 0.8, 0.6, 0.3, 0.2, 0.1});
  const Psf psf = Psf::FromKernel(3, 1, {0.2, 0.5, 0.3});
  // est1 = obs * (flip(k) * (obs / (k * obs))), reflected edges.
  const double want[] = {0.0869047619047619,  0.18571428571428572,
                         0.41666666666666663, 0.8923809523809525,
                         0.5959459459459459,  0.2673359073359073,
                         0.17382437382437382, 0.08058608058608059};
  const ImageBuffer got = richardson_lucy(obs, psf, 1);
  for (int x = 0; x < 8; ++x) EXPECT_NEAR(got.at(0, 0, x), want[x], 1e-9);
}

TEST(RichardsonLucy, RestoresBlurredTestCard) {
  const ImageBuffer card = make_test_card(96, 96);
  const Psf psf = motion_psf(9, 0.0);
  const ImageBuffer blurred = convolve(card, psf);
  const ImageBuffer restored = richardson_lucy(blurred, psf, 30);
  EXPECT_GE(psnr(restored, card) - psnr(blurred, card), 2.0);
  EXPECT_NEAR(sum_of(restored), sum_of(blurred), 0.01 * sum_of(blurred));
  for (int it = 1; it <= 8; ++it) {
    for (double v : richardson_lucy(blurred, psf, it).data()) ASSERT_GE(v, 0.0);
  }
}

TEST(Upscale, ConstantStaysConstant) {
  const ImageBuffer img = constant(5, 4, 3, 0.6);
  for (Interp in : {Interp::kNearest, Interp::kBilinear, Interp::kBicubic}) {
    for (int f : {2, 3, 4}) {
      const ImageBuffer out = upscale(img, f, in);
      EXPECT_EQ(out.width(), 5 * f);
      EXPECT_EQ(out.height(), 4 * f);
      EXPECT_LE(max_abs_diff(out, constant(5 * f, 4 * f, 3, 0.6)), 1e-12);
    }
  }
}

TEST(Upscale, NearestDuplicatesBlocks) {
  testutil::Rng rng(37);
  const ImageBuffer img = testutil::random_image(rng, 4, 3, 1);
  const ImageBuffer out = upscale(img, 2, Interp::kNearest);
  for (int y = 0; y < 6; ++y) {
    for (int x = 0; x < 8; ++x) EXPECT_EQ(out.at(0, y, x), img.at(0, y / 2, x / 2));
  }
}

TEST(Upscale, BilinearRampByHand) {
  // v(x, y) = 0.2 x + 0.4 y; output centers map to -0.25, 0.25, 0.75, 1.25
  // and reflected edges hold the end samples.
  const ImageBuffer img(2, 2, 1, {0.0, 0.2, 0.4, 0.6});
  const ImageBuffer out = upscale(img, 2, Interp::kBilinear);
  const double px[] = {0.0, 0.05, 0.15, 0.2};
  const double py[] = {0.0, 0.1, 0.3, 0.4};
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) EXPECT_NEAR(out.at(0, y, x), px[x] + py[y], 1e-9);
  }
}

TEST(Upscale, Errors) {
  const ImageBuffer img = constant(4, 4, 1, 0.5);
  EXPECT_THROW(upscale(img, 5, Interp::kNearest), std::invalid_argument);
  EXPECT_THROW(upscale(img, 1, Interp::kNearest), std::invalid_argument);
  EXPECT_THROW(upscale(img, 4, Interp::kBicubic, 8 * 8), std::invalid_argument);
}

TEST(Resample, BoxDownsampleAndResize) {
  const ImageBuffer img(4, 2, 1, {0, 1, 0, 1, 1, 0, 1, 0});
  const ImageBuffer d = box_downsample(img, 2);
  ASSERT_EQ(d.width(), 2);
  EXPECT_NEAR(d.at(0, 0, 0), 0.5, 1e-15);
  EXPECT_EQ(resize_to(img, 4, 2), img);
  EXPECT_EQ(resize_to(img, 2, 1).width(), 2);
}

TEST(Stages, LabelsAndKinds) {
  EXPECT_EQ(stage(MedianDenoise{1}).label(), "median_r1");
  EXPECT_EQ(stage(MedianDenoise{1}).kind(), StageKind::kRealDenoise);
  EXPECT_EQ(stage(WienerDeblur{motion_psf(3, 0), 1e-3}).kind(), StageKind::kMotionDeblur);
  EXPECT_EQ(stage(Upscale{}).kind(), StageKind::kUpscale);
  ExternalStage e;
  e.role = StageKind::kUpscale;
  e.command = "true";
  EXPECT_EQ(stage(e).kind(), StageKind::kUpscale);
  EXPECT_EQ(stage_kind_from_string("RD"), StageKind::kRealDenoise);
  EXPECT_EQ(stage_kind_from_string("motion_deblur"), StageKind::kMotionDeblur);
  EXPECT_STREQ(short_tag(StageKind::kUpscale), "RE");
  EXPECT_THROW(stage_kind_from_string("sharpen"), std::invalid_argument);
}

TEST(Pipeline, SingleStageEqualsDirectCall) {
  testutil::Rng rng(38);
  const ImageBuffer img = testutil::random_image(rng, 6, 5, 1);
  EXPECT_EQ(run_pipeline(img, {stage(Upscale{2, Interp::kNearest})}),
            upscale(img, 2, Interp::kNearest));
}

TEST(Pipeline, EmptyStageListRejected) {
  EXPECT_THROW(run_pipeline(constant(4, 4, 1, 0), {}), std::invalid_argument);
}

TEST(Pipeline, StageErrorCarriesIndex) {
  const std::vector<StageSpec> stages{stage(GaussianDenoise{1.0}), stage(MedianDenoise{1}),
                                      stage(MedianDenoise{9})};
  try {
    run_pipeline(constant(5, 5, 1, 0.5), stages);
    FAIL() << "expected StageError";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage_index(), 2u);
    EXPECT_NE(e.cause().find("radius"), std::string::npos);
    EXPECT_FALSE(e.external_failure());
  }
}

TEST(Pipeline, OrderingsDiffer) {
  const ImageBuffer card = make_test_card(48, 48);
  const Psf psf = motion_psf(9, 0.0);
  ImageBuffer noisy = convolve(card, psf);
  testutil::Rng rng(39);
  for (double& v : noisy.data()) v = std::clamp(v + 0.05 * (testutil::unif(rng) - 0.5), 0.0, 1.0);
  const StageSpec rd = stage(MedianDenoise{1});
  const StageSpec md = stage(WienerDeblur{psf, 1e-2});
  const StageSpec re = stage(Upscale{2, Interp::kBicubic});
  const ImageBuffer a = run_pipeline(noisy, {rd, md, re});
  const ImageBuffer b = run_pipeline(noisy, {re, md, rd});
  expect_valid(a, 96, 96, 1);
  EXPECT_GT(max_abs_diff(a, b), 1e-3);
}

TEST(Pipeline, PersistsStageOutputs) {
  TempDir dir;
  PipelineOptions opts;
  opts.persist_dir = dir.path();
  run_pipeline(constant(6, 6, 1, 0.5), {stage(MedianDenoise{1}), stage(Upscale{})}, opts);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "stage_0_median_r1.png"));
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "stage_1_upscale_x2_bicubic.png"));
}

TEST(PipelineProperty, CompositionAssociative) {
  testutil::Rng rng(40);
  auto random_stage = [&](bool allow_upscale) {
    switch (testutil::pick(rng, 0, allow_upscale ? 4 : 3)) {
      case 0:
        return stage(MedianDenoise{1});
      case 1:
        return stage(GaussianDenoise{testutil::unif(rng, 0.3, 1.5)});
      case 2:
        return stage(WienerDeblur{motion_psf(testutil::pick(rng, 1, 5), testutil::unif(rng, 0, 180)),
                                  testutil::unif(rng, 1e-3, 1e-1)});
      case 3:
        return stage(RichardsonLucy{motion_psf(3, 0), testutil::pick(rng, 1, 3)});
      default:
        return stage(Upscale{2, static_cast<Interp>(testutil::pick(rng, 0, 2))});
    }
  };
  for (int i = 0; i < testutil::kPropertyCases; ++i) {
    const ImageBuffer img = testutil::random_image(rng, testutil::pick(rng, 6, 12),
                                                   testutil::pick(rng, 6, 12), 1 + 2 * (i % 2));
    std::vector<StageSpec> a, b;
    bool up = false;
    for (int k = testutil::pick(rng, 1, 3); k > 0; --k) {
      a.push_back(random_stage(!up));
      up = up || a.back().kind() == StageKind::kUpscale;
    }
    for (int k = testutil::pick(rng, 1, 3); k > 0; --k) {
      b.push_back(random_stage(!up));
      up = up || b.back().kind() == StageKind::kUpscale;
    }
    std::vector<StageSpec> ab = a;
    ab.insert(ab.end(), b.begin(), b.end());
    const ImageBuffer whole = run_pipeline(img, ab);
    const ImageBuffer split = run_pipeline(run_pipeline(img, a), b);
    ASSERT_EQ(whole, split);
    expect_valid(whole, whole.width(), whole.height(), img.channels());
    ASSERT_EQ(run_pipeline(img, ab), whole);
  }
}

TEST(ExternalStage, CopyCommandRoundTrips) {
  testutil::Rng rng(41);
  ImageBuffer img = testutil::random_image(rng, 8, 6, 3);
  for (double& v : img.data()) v = std::round(v * 255) / 255;
  ExternalStage e;
  e.command = "cp {input} {output}";
  EXPECT_LE(max_abs_diff(run_external_stage(img, e), img), 1e-12);
  e.format = ImageFormat::kPnm;
  EXPECT_LE(max_abs_diff(run_external_stage(img, e), img), 1e-12);
}

TEST(ExternalStage, Failures) {
  const ImageBuffer img = constant(4, 4, 1, 0.5);
  ExternalStage e;
  e.command = "exit 3";
  EXPECT_THROW(run_external_stage(img, e), ExternalCommandError);
  e.command = "true";
  EXPECT_THROW(run_external_stage(img, e), ExternalCommandError);
  e.command = "echo junk > {output}";
  EXPECT_THROW(run_external_stage(img, e), ExternalCommandError);
  e.command = "sleep 5; cp {input} {output}";
  e.timeout = std::chrono::milliseconds(200);
  const auto t0 = std::chrono::steady_clock::now();
  EXPECT_THROW(run_external_stage(img, e), ExternalCommandError);
  EXPECT_LT(std::chrono::steady_clock::now() - t0, std::chrono::seconds(3));
}

TEST(ExternalStage, PipelineMarksExternalFailures) {
  ExternalStage e;
  e.command = "exit 1";
  try {
    run_pipeline(constant(4, 4, 1, 0.5), {stage(MedianDenoise{1}), stage(e)});
    FAIL();
  } catch (const StageError& err) {
    EXPECT_EQ(err.stage_index(), 1u);
    EXPECT_TRUE(err.external_failure());
  }
}

TEST(Histogram, Examples) {
  const Histogram h = histogram(constant(10, 10, 1, 0.5), 0);
  EXPECT_EQ(h.bins[128], 100u);
  EXPECT_EQ(h.total, 100u);
  ImageBuffer two(10, 10, 1);
  for (int y = 5; y < 10; ++y) {
    for (int x = 0; x < 10; ++x) two.at(0, y, x) = 1.0;
  }
  const Histogram t = histogram(two, 0);
  EXPECT_EQ(t.bins[0], 50u);
  EXPECT_EQ(t.bins[255], 50u);
  EXPECT_THROW(histogram(two, 1), std::invalid_argument);
}

TEST(Histogram, UniformRandomWithinFiveSigma) {
  testutil::Rng rng(42);
  const ImageBuffer img = testutil::random_image(rng, 100, 100, 1);
  const Histogram h = histogram(img, 0);
  const double n = 10000.0, p = 1.0 / 256;
  const double mu = n * p, sd = std::sqrt(n * p * (1 - p));
  std::uint64_t total = 0;
  for (std::uint64_t b : h.bins) {
    EXPECT_LE(std::abs(static_cast<double>(b) - mu), 5 * sd);
    total += b;
  }
  EXPECT_EQ(total, 10000u);
}

TEST(Concentration, Examples) {
  const ConcentrationMetrics c = concentration_metrics(constant(8, 8, 3, 0.3));
  EXPECT_EQ(c.shannon_entropy, 0.0);
  EXPECT_EQ(c.laplacian_variance, 0.0);
  EXPECT_NEAR(c.histogram_variance, 0.0, 1e-15);
  ImageBuffer two(8, 8, 1);
  for (int i = 0; i < 32; ++i) two.data()[i] = 1.0;
  EXPECT_NEAR(concentration_metrics(two).shannon_entropy, 1.0, 1e-12);
}

TEST(StageProperty, OutputsValidAndDeterministic) {
  testutil::Rng rng(43);
  for (int i = 0; i < testutil::kPropertyCases; ++i) {
    ImageBuffer img = testutil::random_image(rng, testutil::pick(rng, 5, 14),
                                             testutil::pick(rng, 5, 14), 1 + 2 * (i % 2));
    img.data()[0] = 1.0;
    StageSpec s;
    switch (i % 6) {
      case 0: s = stage(MedianDenoise{testutil::pick(rng, 1, 2)}); break;
      case 1: s = stage(GaussianDenoise{testutil::unif(rng, 0.2, 2.5)}); break;
      case 2: s = stage(WienerDeblur{motion_psf(testutil::pick(rng, 1, 5), testutil::unif(rng, 0, 90)), testutil::unif(rng, 0, 0.1)}); break;
      case 3: s = stage(RichardsonLucy{motion_psf(testutil::pick(rng, 1, 5), 45), testutil::pick(rng, 1, 6)}); break;
      case 4: s = stage(Upscale{testutil::pick(rng, 2, 4), static_cast<Interp>(testutil::pick(rng, 0, 2))}); break;
      default: s = stage(GaussianDenoise{0.5}); break;
    }
    const ImageBuffer out = apply_stage(img, s);
    const int f = s.kind() == StageKind::kUpscale ? std::get<Upscale>(s.method).factor : 1;
    expect_valid(out, img.width() * f, img.height() * f, img.channels());
    EXPECT_EQ(apply_stage(img, s), out);
  }
}
