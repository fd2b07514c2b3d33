// Copyright 2026 The SaliencyBench Authors.
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

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "saliencybench/image_ops.hpp"
#include "saliencybench/metrics.hpp"
#include "saliencybench/saliency.hpp"
#include "test_util.hpp"

namespace sbench {
namespace {

using testing::plane;
using testing::random_tensor;
using testing::small_cnn;

GroundTruthMask mask_of(std::size_t h, std::size_t w, std::vector<float> v) {
  return GroundTruthMask(plane(h, w, std::move(v)));
}

// Axis-aligned rectangle covering roughly `frac` of an h x w plane.
GroundTruthMask rect_mask(std::size_t h, std::size_t w, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t rh = 2 + rng.index(h / 2), rw = 2 + rng.index(w / 2);
  const std::size_t y0 = rng.index(h - rh + 1), x0 = rng.index(w - rw + 1);
  Tensor m({h, w});
  for (std::size_t y = y0; y < y0 + rh; ++y)
    for (std::size_t x = x0; x < x0 + rw; ++x) m(y, x) = 1.0f;
  return GroundTruthMask(m);
}

FunctionModel mean_model(const Shape& shape) {
  return FunctionModel("mean", shape, 2, [](const Tensor& img) {
    const double m = std::accumulate(img.values().begin(), img.values().end(), 0.0) /
                     static_cast<double>(img.size());
    return std::vector<float>{static_cast<float>(m), static_cast<float>(1.0 - m)};
  });
}

// Model that always predicts `label` with probability 0.9.
FunctionModel fixed_model(std::string id, const Shape& shape, std::size_t label) {
  return FunctionModel(std::move(id), shape, 3, [label](const Tensor&) {
    std::vector<float> p(3, 0.05f);
    p[label] = 0.9f;
    return p;
  });
}

Explainer map_explainer(std::function<Tensor(const Model&, const Tensor&, std::size_t)> fn) {
  return [fn](const Model& m, const Tensor& img, std::size_t c) {
    SaliencyMap s;
    s.scores = fn(m, img, c);
    s.method = "fixed";
    s.class_index = c;
    return s;
  };
}

std::vector<double> as_double(const Tensor& t) { return oracle::to_double(t); }

TEST(GroundTruthMask, Validation) {
  EXPECT_SBENCH_ERROR(mask_of(2, 2, {0, 0, 0, 0}), ErrorCode::kEmptyMask);
  EXPECT_SBENCH_ERROR(mask_of(2, 2, {0, 0.5f, 0, 1}), ErrorCode::kInvalidArgument);
  const GroundTruthMask m = mask_of(2, 2, {0, 1, 1, 1});
  EXPECT_EQ(m.area(), 3u);
  EXPECT_DOUBLE_EQ(m.fraction(), 0.75);
}

TEST(Insertion, ReferenceEqualToImageScoresZero) {
  const MicroCnn m = small_cnn(1);
  const Tensor img = random_tensor({3, 16, 16}, 1);
  const InsertionCurve c = insertion_auc(m, img, 0, random_tensor({16, 16}, 2), img, 10);
  ASSERT_EQ(c.scores.size(), 11u);
  for (double s : c.scores) EXPECT_EQ(s, 0.0);
  EXPECT_EQ(c.iauc, 0.0);
}

TEST(Insertion, TwoPixelHandEnumeration) {
  const FunctionModel f = mean_model({1, 1, 2});
  const Tensor ones({1, 1, 2}, 1.0f), zeros({1, 1, 2});
  const InsertionCurve c = insertion_auc(f, ones, 0, plane(1, 2, {0.2f, 0.9f}), zeros, 2);
  ASSERT_EQ(c.scores.size(), 3u);
  EXPECT_NEAR(c.scores[0], 0.0, 1e-7);
  EXPECT_NEAR(c.scores[1], 0.5, 1e-7);
  EXPECT_NEAR(c.scores[2], 1.0, 1e-7);
  EXPECT_NEAR(c.iauc, 0.5, 1e-7);
  EXPECT_EQ(c.fractions, (std::vector<double>{0.0, 0.5, 1.0}));
}

TEST(Insertion, CurveInvariants) {
  const MicroCnn m = small_cnn(2);
  const Tensor img = random_tensor({3, 16, 16}, 3);
  const Tensor ref = insertion_reference_blur(img);
  const InsertionCurve c = insertion_auc(m, img, 1, random_tensor({16, 16}, 4), ref, 100);
  ASSERT_EQ(c.scores.size(), 101u);
  EXPECT_NEAR(c.iauc, std::accumulate(c.scores.begin(), c.scores.end(), 0.0) / 101.0, 1e-6);
  // The last state is the full image.
  EXPECT_NEAR(c.scores.back(), m.predict(img)[1] - m.predict(ref)[1], 1e-6);
  EXPECT_SBENCH_ERROR(insertion_auc(m, img, 1, Tensor({16, 16}), Tensor({3, 16, 15}), 10),
                      ErrorCode::kShapeMismatch);
}

TEST(Insertion, OrderIsStableDescending) {
  const auto order = insertion_order(plane(1, 5, {0.5f, 1.0f, 0.5f, 0.0f, 1.0f}));
  EXPECT_EQ(order, (std::vector<std::size_t>{1, 4, 0, 2, 3}));
}

TEST(PointingGame, Examples) {
  EXPECT_TRUE(pointing_game(plane(2, 2, {0, 1, 0, 0}), mask_of(2, 2, {0, 1, 0, 0})).hit);
  EXPECT_FALSE(pointing_game(plane(2, 2, {1, 0, 0, 0}), mask_of(2, 2, {0, 0, 0, 1})).hit);
  // Ties resolve to the first pixel in row-major order.
  EXPECT_TRUE(pointing_game(plane(2, 2, {0, 1, 1, 0}), mask_of(2, 2, {0, 1, 0, 0})).hit);
  const PointingResult flat = pointing_game(Tensor({2, 2}, 0.3f), mask_of(2, 2, {1, 0, 0, 0}));
  EXPECT_TRUE(flat.hit);
  EXPECT_TRUE(flat.constant_map);
}

TEST(PointingGame, Summary) {
  const std::vector<Tensor> maps{plane(1, 2, {1, 0}), plane(1, 2, {1, 0}), Tensor({1, 2})};
  const std::vector<GroundTruthMask> masks{mask_of(1, 2, {1, 0}), mask_of(1, 2, {0, 1}),
                                           mask_of(1, 2, {0, 1})};
  const PointingSummary s = pointing_game(maps, masks);
  EXPECT_EQ(s.hits, 1u);
  EXPECT_EQ(s.misses, 2u);
  EXPECT_EQ(s.constant_maps, 1u);
  EXPECT_DOUBLE_EQ(s.value(), 1.0 / 3.0);
}

TEST(Iosr, Examples) {
  EXPECT_DOUBLE_EQ(iosr(plane(2, 2, {1, 1, 0, 0}), mask_of(2, 2, {1, 0, 1, 0}), 0.5), 0.5);
  EXPECT_DOUBLE_EQ(iosr(plane(2, 2, {1, 0.9f, 0, 0}), mask_of(2, 2, {1, 1, 0, 0})), 1.0);
  EXPECT_SBENCH_ERROR(iosr(Tensor({2, 2}), mask_of(2, 2, {1, 0, 0, 0})),
                      ErrorCode::kEmptySalientArea);
  EXPECT_SBENCH_ERROR(iosr(plane(2, 2, {-1, -2, 0, -1}), mask_of(2, 2, {1, 0, 0, 0})),
                      ErrorCode::kEmptySalientArea);
  // theta * max selecting exactly the mask gives 1.
  EXPECT_DOUBLE_EQ(iosr(plane(2, 2, {0.9f, 0.1f, 1.0f, 0.2f}), mask_of(2, 2, {1, 0, 1, 0})), 1.0);
}

TEST(ConceptContribution, Examples) {
  const GroundTruthMask m = mask_of(2, 2, {1, 0, 1, 0});
  EXPECT_DOUBLE_EQ(concept_contribution(plane(2, 2, {1, 0, 0.5f, 0}), m), 0.75);
  EXPECT_DOUBLE_EQ(concept_contribution(plane(2, 2, {0, 1, 0, 0.4f}), m), 0.0);
  // Constant 0.3 on the mask after normalization.
  EXPECT_NEAR(concept_contribution(plane(2, 3, {0.3f, 0, 1, 0.3f, 0.5f, 0.5f}),
                                   mask_of(2, 3, {1, 0, 0, 1, 0, 0})),
              0.3, 1e-7);
}

TEST(Mcs, Examples) {
  EXPECT_EQ(mcs(0.4, 0.4), 0.0);
  EXPECT_NEAR(mcs(0.754, 0.261), 0.493, 1e-12);
  EXPECT_EQ(mcs(0.1, 0.7), -mcs(0.7, 0.1));
}

struct SampleSet {
  std::vector<Tensor> images;
  std::vector<GroundTruthMask> masks;
  std::vector<std::size_t> labels;
};

// 20 images; half the labels agree with the model's prediction.
SampleSet sample_set(const Model& model, std::uint64_t seed) {
  SampleSet s;
  for (std::size_t i = 0; i < 20; ++i) {
    s.images.push_back(random_tensor({3, 16, 16}, seed + i));
    s.masks.push_back(rect_mask(16, 16, seed + 1000 + i));
    const std::size_t pred = argmax(model.predict(s.images.back()));
    s.labels.push_back(i % 2 ? pred : (pred + 1) % 3);
  }
  return s;
}

TEST(GlobalContribution, MatchesOracle) {
  const MicroCnn m = small_cnn(10);
  const SampleSet s = sample_set(m, 500);
  const Explainer ex = make_explainer({});
  const Contribution g = global_contribution(m, ex, s.images, s.masks, s.labels);
  double sum = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < 20; ++i) {
    if (argmax(m.predict(s.images[i])) != s.labels[i]) continue;
    sum += oracle::sco(as_double(ex(m, s.images[i], s.labels[i]).scores),
                       as_double(s.masks[i].mask()));
    ++n;
  }
  EXPECT_EQ(g.n_included, n);
  EXPECT_EQ(g.n_excluded, 20 - n);
  EXPECT_NEAR(g.value, sum / static_cast<double>(n), 1e-6);
}

TEST(GlobalContribution, Examples) {
  const FunctionModel f = fixed_model("f", {3, 4, 4}, 2);
  const std::vector<Tensor> images{random_tensor({3, 4, 4}, 1), random_tensor({3, 4, 4}, 2)};
  std::vector<GroundTruthMask> masks{rect_mask(4, 4, 1), rect_mask(4, 4, 2)};
  const Explainer ex = map_explainer([](const Model&, const Tensor& img, std::size_t) {
    return channel_sum(img);
  });
  const std::vector<std::size_t> wrong{0, 1};
  EXPECT_SBENCH_ERROR(global_contribution(f, ex, images, masks, wrong),
                      ErrorCode::kNoCorrectPredictions);
  const std::vector<std::size_t> one{2, 0};
  const Contribution g = global_contribution(f, ex, images, masks, one);
  EXPECT_EQ(g.n_included, 1u);
  EXPECT_NEAR(g.value, concept_contribution(channel_sum(images[0]), masks[0]), 1e-12);
}

std::vector<ConceptPair> concept_pairs(const Model& obj, const Model& scene, std::size_t n,
                                       std::uint64_t seed) {
  std::vector<ConceptPair> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    Tensor twin = random_tensor({3, 16, 16}, seed + i);
    Tensor with = twin;
    GroundTruthMask mask = rect_mask(16, 16, seed + 5000 + i);
    Rng rng(seed + 9000 + i);
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t j = 0; j < 256; ++j)
        if (mask.contains(j)) with[c * 256 + j] = static_cast<float>(rng.uniform());
    const std::size_t ol = argmax(obj.predict(with));
    const std::size_t sl = argmax(scene.predict(with));
    pairs.push_back({with, twin, mask, i % 3 ? ol : (ol + 1) % 3, i % 4 ? sl : (sl + 1) % 3});
  }
  return pairs;
}

TEST(Mcr, MatchesOracle) {
  const MicroCnn fo = small_cnn(20), fs = small_cnn(21);
  const auto pairs = concept_pairs(fo, fs, 20, 700);
  const Explainer ex = make_explainer({});
  const Contribution r = mcr(fo, fs, ex, pairs);
  double sum = 0;
  std::size_t n = 0;
  for (const ConceptPair& p : pairs) {
    if (argmax(fo.predict(p.with_cf)) != p.object_label) continue;
    if (argmax(fs.predict(p.with_cf)) != p.scene_label) continue;
    const auto mask = as_double(p.cf_mask.mask());
    sum += oracle::cf_ratio(as_double(ex(fo, p.with_cf, p.object_label).scores), mask) -
           oracle::cf_ratio(as_double(ex(fs, p.with_cf, p.scene_label).scores), mask);
    ++n;
  }
  ASSERT_GT(n, 0u);
  EXPECT_EQ(r.n_included, n);
  EXPECT_NEAR(r.value, sum / static_cast<double>(n), 1e-6);
}

TEST(Mcr, HandCaseAndIdenticalMaps) {
  const FunctionModel fo = fixed_model("o", {3, 4, 4}, 1);
  const FunctionModel fs = fixed_model("s", {3, 4, 4}, 2);
  const GroundTruthMask mask = rect_mask(4, 4, 3);
  const ConceptPair pair{random_tensor({3, 4, 4}, 1), random_tensor({3, 4, 4}, 2), mask, 1, 2};
  const Explainer split = map_explainer([&](const Model& m, const Tensor&, std::size_t) {
    Tensor t = mask.mask();
    if (m.model_id() == "s")
      for (float& v : t.values()) v = 1.0f - v;
    return t;
  });
  const Contribution r = mcr(fo, fs, split, std::span(&pair, 1));
  EXPECT_NEAR(r.value, 1.0 / static_cast<double>(mask.area()), 1e-12);
  const Explainer same = map_explainer([](const Model&, const Tensor& img, std::size_t) {
    return channel_sum(img);
  });
  EXPECT_EQ(mcr(fo, fs, same, std::span(&pair, 1)).value, 0.0);
}

TEST(Idr, MatchesOracleAndTieRule) {
  const MicroCnn fo = small_cnn(30), fs = small_cnn(31);
  const auto pairs = concept_pairs(fo, fs, 20, 800);
  const Explainer ex = make_explainer({});
  std::size_t hits = 0;
  for (const ConceptPair& p : pairs) {
    const auto mask = as_double(p.cf_mask.mask());
    if (oracle::sco(as_double(ex(fs, p.with_cf, p.scene_label).scores), mask) >
        oracle::sco(as_double(ex(fs, p.without_cf, p.scene_label).scores), mask))
      ++hits;
  }
  EXPECT_NEAR(idr(fs, ex, pairs).value, hits / 20.0, 1e-12);

  const Explainer same = map_explainer([](const Model&, const Tensor&, std::size_t) {
    return random_tensor({16, 16}, 1);
  });
  EXPECT_EQ(idr(fs, same, pairs).value, 0.0);

  // Zeroing the CF region on with-CF images only.
  const Explainer hide = map_explainer([&](const Model&, const Tensor& img, std::size_t) {
    Tensor t = channel_sum(img);
    for (const ConceptPair& p : pairs) {
      if (p.with_cf == img)
        for (std::size_t j = 0; j < t.size(); ++j)
          if (p.cf_mask.contains(j)) t[j] = 0.0f;
    }
    return t;
  });
  EXPECT_EQ(idr(fs, hide, pairs).value, 0.0);

  std::vector<ConceptPair> bad{pairs[0]};
  bad[0].without_cf = Tensor({3, 8, 8});
  EXPECT_SBENCH_ERROR(idr(fs, ex, bad), ErrorCode::kUnpairedSample);
}

TEST(LocalizationOracle, PointingAndIosrOnTwentyMaps) {
  const MicroCnn m = small_cnn(40);
  const Explainer ex = make_explainer({SaliencyMethod::kGradCam});
  for (std::size_t i = 0; i < 20; ++i) {
    const Tensor img = random_tensor({3, 16, 16}, 900 + i);
    const GroundTruthMask mask = rect_mask(16, 16, 950 + i);
    const Tensor sal = ex(m, img, i % 3).scores;
    EXPECT_EQ(pointing_game(sal, mask).hit, oracle::pointing_hit(as_double(sal), as_double(mask.mask())));
    const double want = oracle::iosr(as_double(sal), as_double(mask.mask()), 0.5);
    if (std::isnan(want)) {
      EXPECT_SBENCH_ERROR(iosr(sal, mask), ErrorCode::kEmptySalientArea);
    } else {
      EXPECT_NEAR(iosr(sal, mask), want, 1e-6);
    }
  }
}

TEST(RandomBaseline, PointingAndIosrTrackMaskFraction) {
  const GroundTruthMask mask = rect_mask(16, 16, 77);
  PointingSummary pg;
  double iosr_sum = 0.0;
  for (std::uint64_t t = 0; t < 2000; ++t) {
    const Tensor sal = random_saliency(16, 16, t);
    if (pointing_game(sal, mask).hit) ++pg.hits; else ++pg.misses;
    iosr_sum += iosr(sal, mask);
  }
  EXPECT_NEAR(pg.value(), mask.fraction(), 0.05);
  EXPECT_NEAR(iosr_sum / 2000.0, mask.fraction(), 0.05);
}

TEST(RandomBaseline, ExplainerIsAPureFunctionOfInput) {
  const Explainer r = random_explainer(5);
  const MicroCnn m = small_cnn(1);
  const Tensor a = random_tensor({3, 16, 16}, 1), b = random_tensor({3, 16, 16}, 2);
  const Tensor ma = r(m, a, 0).scores;
  EXPECT_EQ(r(m, b, 0).scores.shape(), ma.shape());
  EXPECT_EQ(r(m, a, 0).scores, ma);
  EXPECT_NE(r(m, a, 1).scores, ma);
  EXPECT_NE(r(m, b, 0).scores, ma);
  for (float v : ma.values()) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LT(v, 1.0f);
  }
}

TEST(Pearson, Examples) {
  const std::vector<float> a{1, 0, 0, 0}, b{0, 0, 0, 1};
  EXPECT_NEAR(pearson(a, b), -1.0 / 3.0, 1e-12);
  EXPECT_NEAR(pearson(a, a), 1.0, 1e-12);
  const std::vector<float> flat{2, 2, 2, 2};
  EXPECT_SBENCH_ERROR(pearson(a, flat), ErrorCode::kUndefined);
}

TEST(ClassSensitivity, IdenticalAndFlippedMaps) {
  const MicroCnn m = small_cnn(50);
  const Tensor img = random_tensor({3, 16, 16}, 50);
  const Tensor base = random_tensor({16, 16}, 51);
  const Explainer same = map_explainer([&](const Model&, const Tensor&, std::size_t) { return base; });
  EXPECT_NEAR(class_sensitivity(m, same, img), 1.0, 1e-6);
  const std::size_t top = argmax(m.predict(img));
  const Explainer flip = map_explainer([&](const Model&, const Tensor&, std::size_t c) {
    Tensor t = base;
    if (c != top)
      for (float& v : t.values()) v = -v;
    return t;
  });
  EXPECT_NEAR(class_sensitivity(m, flip, img), -1.0, 1e-6);
  const Explainer flat = map_explainer([](const Model&, const Tensor&, std::size_t) {
    return Tensor({16, 16}, 1.0f);
  });
  EXPECT_SBENCH_ERROR(class_sensitivity(m, flat, img), ErrorCode::kUndefined);
}

TEST(Sensitivity, ZeroRadiusAndConstantExplainer) {
  const MicroCnn m = small_cnn(60);
  const Tensor img = random_tensor({3, 16, 16}, 60);
  const Explainer grad = make_explainer({});
  EXPECT_EQ(max_sensitivity(m, grad, img, 0, {0.0, 5, PerturbationNorm::kLinf, 1}), 0.0);
  const Explainer flat = map_explainer([](const Model&, const Tensor&, std::size_t) {
    return Tensor({16, 16}, 1.0f);
  });
  EXPECT_EQ(max_sensitivity(m, flat, img, 0, {0.5, 5, PerturbationNorm::kLinf, 1}), 0.0);
  EXPECT_SBENCH_ERROR(max_sensitivity(m, grad, img, 0, {-0.1, 5, PerturbationNorm::kLinf, 1}),
                      ErrorCode::kInvalidArgument);
  EXPECT_SBENCH_ERROR(max_sensitivity(m, grad, img, 0, {0.1, 0, PerturbationNorm::kLinf, 1}),
                      ErrorCode::kInvalidArgument);
}

TEST(Sensitivity, GradientOfLinearModelIsStable) {
  const MicroCnn m = testing::linear_model({3, 8, 8}, random_tensor({2, 192}, 61, -1, 1));
  const Explainer grad = make_explainer({});
  for (double r : {0.05, 0.2, 1.0}) {
    EXPECT_EQ(max_sensitivity(m, grad, random_tensor({3, 8, 8}, 62), 1,
                              {r, 8, PerturbationNorm::kLinf, 3}),
              0.0);
  }
}

TEST(Sensitivity, SweepIsNestedAndMonotone) {
  const MicroCnn m = small_cnn(63);
  const Tensor img = random_tensor({3, 16, 16}, 63);
  const Explainer grad = make_explainer({});
  const std::vector<double> radii{0.0, 0.05, 0.1, 0.2, 0.4};
  const auto curve = sensitivity_radius_sweep(m, grad, img, 2, radii, 6, 9);
  ASSERT_EQ(curve.size(), radii.size());
  EXPECT_EQ(curve[0], 0.0);
  for (std::size_t i = 1; i < curve.size(); ++i) EXPECT_GE(curve[i], curve[i - 1]);
  EXPECT_GT(curve.back(), 0.0);
  const std::vector<double> one{0.2};
  EXPECT_EQ(sensitivity_radius_sweep(m, grad, img, 2, one, 6, 9)[0],
            max_sensitivity(m, grad, img, 2, {0.2, 6, PerturbationNorm::kLinf, 9}));
  const std::vector<double> unsorted{0.2, 0.1};
  EXPECT_THROW(sensitivity_radius_sweep(m, grad, img, 2, unsorted, 6, 9), Error);
}

TEST(UnitNormalize, ZeroStaysZero) {
  const std::vector<float> z(4, 0.0f), v{3, 4};
  for (double x : unit_normalize(z)) EXPECT_EQ(x, 0.0);
  const auto n = unit_normalize(v);
  EXPECT_DOUBLE_EQ(n[0], 0.6);
  EXPECT_DOUBLE_EQ(n[1], 0.8);
}

}  // namespace
}  // namespace sbench
