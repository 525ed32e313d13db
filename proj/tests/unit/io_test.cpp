#include "famloc/io.hpp"

#include <random>

#include <gtest/gtest.h>

#include "famloc/config.hpp"
#include "famloc/errors.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

namespace famloc {
namespace {

using testing::slurp;
using testing::TempDir;
using testing::write_text;

std::string error_of(auto&& fn) {
  try {
    fn();
  } catch (const std::exception& ex) {
    return ex.what();
  }
  return "";
}

TEST(Fstk, RoundTripAndLayout) {
  TempDir dir("fstk");
  // Values representable as floats so the round trip is exact.
  FeatureStack s(2, 2, 3, {1, 2, 3, 4, 5, 6, -0.5, 0.25, 8, 9, 10, 11});
  io::write_fstk(dir / "s.fstk", s);
  const std::string bytes = slurp(dir / "s.fstk");
  ASSERT_EQ(bytes.size(), 20u + 12u * 4u);
  EXPECT_EQ(bytes.substr(0, 4), "FSTK");
  EXPECT_EQ(bytes.substr(4, 4), std::string("\x01\x00\x00\x00", 4));
  EXPECT_EQ(bytes.substr(8, 4), std::string("\x02\x00\x00\x00", 4));
  EXPECT_EQ(bytes.substr(16, 4), std::string("\x03\x00\x00\x00", 4));
  EXPECT_EQ(bytes.substr(20, 4), std::string("\x00\x00\x80\x3f", 4));  // 1.0f little-endian

  const auto back = io::read_fstk(dir / "s.fstk");
  EXPECT_EQ(back.k_count(), 2u);
  EXPECT_EQ(back.height(), 2u);
  EXPECT_EQ(back.width(), 3u);
  EXPECT_TRUE(std::ranges::equal(back.values(), s.values()));
}

TEST(Fstk, RejectsCorruptFiles) {
  TempDir dir("fstk_bad");
  write_text(dir / "magic.fstk", std::string("NOPE\x01\x00\x00\x00", 8) + std::string(12, '\x01'));
  EXPECT_THROW(io::read_fstk(dir / "magic.fstk"), ValidationError);

  io::write_fstk(dir / "ok.fstk", FeatureStack(1, 2, 2));
  std::string truncated = slurp(dir / "ok.fstk");
  truncated.pop_back();
  write_text(dir / "short.fstk", truncated);
  EXPECT_THROW(io::read_fstk(dir / "short.fstk"), ValidationError);

  std::string nan = slurp(dir / "ok.fstk");
  nan.replace(20, 4, std::string("\x00\x00\xc0\x7f", 4));
  write_text(dir / "nan.fstk", nan);
  EXPECT_THROW(io::read_fstk(dir / "nan.fstk"), ValidationError);

  EXPECT_THROW(io::read_fstk(dir / "missing.fstk"), IoError);
}

TEST(Weights, VectorAndHeadRoundTrip) {
  TempDir dir("weights");
  const WeightVector w{{0.1, -2.5, 3e-7}, 0.3};
  io::save_weight_vector(dir / "w.json", w);
  const auto back = io::load_weight_vector(dir / "w.json");
  EXPECT_EQ(back.weights, w.weights);
  EXPECT_EQ(back.bias, w.bias);
  EXPECT_FALSE(io::is_head_model_file(dir / "w.json"));

  std::mt19937_64 rng(51);
  const HeadModel m{testing::random_bank(rng, 3, 2), testing::random_head(rng, 3)};
  io::save_head_model(dir / "h.json", m);
  EXPECT_TRUE(io::is_head_model_file(dir / "h.json"));
  const auto h = io::load_head_model(dir / "h.json");
  EXPECT_TRUE(std::ranges::equal(h.conv.kernels(), m.conv.kernels()));
  EXPECT_TRUE(std::ranges::equal(h.conv.biases(), m.conv.biases()));
  EXPECT_EQ(h.softmax.class_weights, m.softmax.class_weights);
  EXPECT_EQ(h.softmax.class_biases, m.softmax.class_biases);
}

TEST(Weights, HeadValidationNamesField) {
  TempDir dir("head_bad");
  write_text(dir / "h.json",
             R"({"conv": {"out": 2, "in": 1, "kernels": [1,2,3], "bias": [0,0]},
                 "softmax": {"weights": [[1,1],[1,1]], "bias": [0,0]}})");
  EXPECT_NE(error_of([&] { io::load_head_model(dir / "h.json"); }).find("'conv'"),
            std::string::npos);
  write_text(dir / "h2.json",
             R"({"conv": {"out": 1, "in": 1, "kernels": [0,0,0,0,1,0,0,0,0], "bias": [0]},
                 "softmax": {"weights": [[1,1],[1,1]], "bias": [0,0]}})");
  EXPECT_NE(error_of([&] { io::load_head_model(dir / "h2.json"); }).find("softmax.weights"),
            std::string::npos);
  write_text(dir / "w.json", R"({"weights": [1, "x"], "bias": 0})");
  EXPECT_NE(error_of([&] { io::load_weight_vector(dir / "w.json"); }).find("weights[1]"),
            std::string::npos);
}

TEST(Annotations, RoundTripWithinTolerance) {
  TempDir dir("ann");
  std::mt19937_64 rng(52);
  std::uniform_real_distribution<double> d(0.0, 100.0);
  std::vector<io::ImageAnnotations> images;
  std::vector<io::ImagePredictions> preds;
  for (int i = 0; i < 5; ++i) {
    io::ImageAnnotations a{"im" + std::to_string(i), 640, 480, {}};
    io::ImagePredictions p{a.image_id, 640, 480, {}};
    for (int k = 0; k < i; ++k) {
      const double x = d(rng), y = d(rng);
      const BoundingBox b{x, y, x + 1.0 + d(rng), y + 1.0 / 3.0 + d(rng)};
      a.boxes.push_back({b, "cls" + std::to_string(k), a.image_id});
      p.boxes.push_back({b, a.image_id, k % 2 ? std::optional<double>(d(rng)) : std::nullopt,
                         k % 3 ? std::optional<std::string>("c") : std::nullopt});
    }
    images.push_back(a);
    preds.push_back(p);
  }
  io::write_annotations(dir / "gt.jsonl", images);
  io::write_predictions(dir / "p.jsonl", preds);
  const auto a2 = io::read_annotations(dir / "gt.jsonl");
  const auto p2 = io::read_predictions(dir / "p.jsonl");
  ASSERT_EQ(a2.size(), images.size());
  ASSERT_EQ(p2.size(), preds.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    ASSERT_EQ(a2[i].boxes.size(), images[i].boxes.size());
    for (std::size_t k = 0; k < images[i].boxes.size(); ++k) {
      EXPECT_NEAR(a2[i].boxes[k].box.x_min, images[i].boxes[k].box.x_min, 1e-9);
      EXPECT_NEAR(a2[i].boxes[k].box.y_max, images[i].boxes[k].box.y_max, 1e-9);
      EXPECT_EQ(a2[i].boxes[k].class_label, images[i].boxes[k].class_label);
      EXPECT_EQ(p2[i].boxes[k].score, preds[i].boxes[k].score);
      EXPECT_EQ(p2[i].boxes[k].class_label, preds[i].boxes[k].class_label);
    }
  }
  // Writers are deterministic byte for byte.
  io::write_annotations(dir / "gt2.jsonl", a2);
  EXPECT_EQ(slurp(dir / "gt.jsonl"), slurp(dir / "gt2.jsonl"));
}

TEST(Annotations, ErrorsCarryFileLineAndField) {
  TempDir dir("ann_bad");
  write_text(dir / "gt.jsonl",
             "{\"image_id\": \"a\", \"width\": 10, \"height\": 10, \"boxes\": []}\n"
             "\n"
             "{\"image_id\": \"b\", \"width\": 10, \"height\": 10, \"boxes\": "
             "[{\"class\": \"x\", \"x_min\": 5, \"y_min\": 0, \"x_max\": 2, \"y_max\": 3}]}\n");
  const auto msg = error_of([&] { io::read_annotations(dir / "gt.jsonl"); });
  EXPECT_NE(msg.find("gt.jsonl:3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("boxes[0]"), std::string::npos) << msg;

  write_text(dir / "bad.jsonl", "{\"image_id\": \"a\", \"width\": 10}\nnot json\n");
  const auto msg2 = error_of([&] { io::read_annotations(dir / "bad.jsonl"); });
  EXPECT_NE(msg2.find("bad.jsonl:1: field 'height'"), std::string::npos) << msg2;
}

TEST(LabeledPredictions, RoundTrip) {
  TempDir dir("labeled");
  LabeledByImage l{{"a", {LabeledPrediction{{1, 2, 3, 4}, "a", "pho", 0.25}}}, {"b", {}}};
  io::write_labeled_predictions(dir / "l.jsonl", l);
  const auto back = io::read_labeled_predictions(dir / "l.jsonl");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back.at("a")[0].class_label, "pho");
  EXPECT_EQ(back.at("a")[0].recognition_score, 0.25);
  EXPECT_EQ(back.at("a")[0].box, (BoundingBox{1, 2, 3, 4}));
}

TEST(Manifest, EmptyFileIsEmptyManifest) {
  TempDir dir("manifest_empty");
  write_text(dir / "m.jsonl", "");
  EXPECT_TRUE(io::load_manifest(dir / "m.jsonl").entries.empty());
}

TEST(Manifest, DuplicateIdNamesBothLines) {
  TempDir dir("manifest_dup");
  io::write_fstk(dir / "f.fstk", FeatureStack(1, 1, 1));
  write_text(dir / "m.jsonl",
             "{\"image_id\": \"x\", \"width\": 4, \"height\": 4, \"features\": \"f.fstk\"}\n"
             "{\"image_id\": \"y\", \"width\": 4, \"height\": 4, \"features\": \"f.fstk\"}\n"
             "{\"image_id\": \"x\", \"width\": 4, \"height\": 4, \"features\": \"f.fstk\"}\n");
  const auto msg = error_of([&] { io::load_manifest(dir / "m.jsonl"); });
  EXPECT_NE(msg.find("m.jsonl:3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("'x'"), std::string::npos) << msg;
  EXPECT_NE(msg.find("line 1"), std::string::npos) << msg;
}

TEST(Manifest, MissingFeatureFileFailsAtLoad) {
  TempDir dir("manifest_missing");
  write_text(dir / "m.jsonl",
             "{\"image_id\": \"x\", \"width\": 4, \"height\": 4, \"features\": \"nope.fstk\"}\n");
  const auto msg = error_of([&] { io::load_manifest(dir / "m.jsonl"); });
  EXPECT_NE(msg.find("field 'features'"), std::string::npos) << msg;
  EXPECT_NE(msg.find("nope.fstk"), std::string::npos) << msg;
}

TEST(Manifest, RoundTripResolvesRelativePaths) {
  TempDir dir("manifest_rt");
  testing::write_fixture_dataset(dir.path());
  const auto m = io::load_manifest(dir / "manifest.jsonl");
  ASSERT_EQ(m.entries.size(), 4u);
  EXPECT_EQ(m.entries[0].features, dir / "blob_and_decoy.fstk");
  EXPECT_TRUE(m.entries[0].annotations.has_value());
  EXPECT_NE(slurp(dir / "manifest.jsonl").find("\"features\":\"blob_and_decoy.fstk\""),
            std::string::npos);
}

TEST(RunConfig, FilePrecedenceAndValidation) {
  TempDir dir("config");
  write_text(dir / "c.json", R"({"t": 0.6, "gate": 0.7, "iou_grid": "0.5:0.7:0.1"})");
  RunConfig cfg;
  apply_config_file(cfg, dir / "c.json");
  EXPECT_EQ(cfg.params.t, 0.6);
  EXPECT_EQ(cfg.params.s, 0.1);
  EXPECT_EQ(cfg.gate, 0.7);
  EXPECT_EQ(cfg.iou_grid, (std::vector<double>{0.5, 0.6, 0.7}));
  EXPECT_NO_THROW(cfg.validate());
  cfg.params.s = 1.0;
  EXPECT_THROW(cfg.validate(), ValidationError);
  write_text(dir / "bad.json", R"({"t": "high"})");
  EXPECT_NE(error_of([&] { apply_config_file(cfg, dir / "bad.json"); }).find("field 't'"),
            std::string::npos);
}

}  // namespace
}  // namespace famloc
