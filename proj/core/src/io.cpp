#include "famloc/io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "famloc/errors.hpp"

namespace famloc::io {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------
// Small binary helpers. FSTK is little-endian regardless of host order.

std::uint32_t load_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void store_u32_le(unsigned char* p, std::uint32_t v) {
  p[0] = static_cast<unsigned char>(v & 0xff);
  p[1] = static_cast<unsigned char>((v >> 8) & 0xff);
  p[2] = static_cast<unsigned char>((v >> 16) & 0xff);
  p[3] = static_cast<unsigned char>((v >> 24) & 0xff);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("failed reading " + path.string());
  return ss.str();
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode | std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

// ---------------------------------------------------------------------------
// Field access with location-aware errors.

struct Where {
  const fs::path* file;
  std::size_t line;  // 0 for whole-document formats

  [[noreturn]] void fail(const std::string& field, const std::string& msg) const {
    if (line > 0) {
      throw ValidationError(fmt::format("{}:{}: field '{}': {}", file->string(), line, field, msg));
    }
    throw ValidationError(fmt::format("{}: field '{}': {}", file->string(), field, msg));
  }
};

const json& member(const json& obj, const char* key, const Where& at, const std::string& ctx) {
  const std::string field = ctx.empty() ? key : ctx + "." + key;
  if (!obj.is_object()) at.fail(ctx.empty() ? "<root>" : ctx, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) at.fail(field, "missing");
  return *it;
}

double number(const json& v, const Where& at, const std::string& field) {
  if (!v.is_number()) at.fail(field, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) at.fail(field, "expected a finite number");
  return d;
}

std::size_t positive_int(const json& v, const Where& at, const std::string& field) {
  if (!v.is_number_integer() || v.get<long long>() <= 0) {
    at.fail(field, "expected a positive integer");
  }
  return v.get<std::size_t>();
}

std::string text(const json& v, const Where& at, const std::string& field) {
  if (!v.is_string()) at.fail(field, "expected a string");
  return v.get<std::string>();
}

std::vector<double> numbers(const json& v, const Where& at, const std::string& field) {
  if (!v.is_array()) at.fail(field, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(number(v[i], at, fmt::format("{}[{}]", field, i)));
  }
  return out;
}

BoundingBox box_fields(const json& obj, const Where& at, const std::string& ctx) {
  const double x0 = number(member(obj, "x_min", at, ctx), at, ctx + ".x_min");
  const double y0 = number(member(obj, "y_min", at, ctx), at, ctx + ".y_min");
  const double x1 = number(member(obj, "x_max", at, ctx), at, ctx + ".x_max");
  const double y1 = number(member(obj, "y_max", at, ctx), at, ctx + ".y_max");
  BoundingBox b{x0, y0, x1, y1};
  if (!b.valid()) at.fail(ctx, "box requires x_max > x_min and y_max > y_min");
  return b;
}

void put_box(ordered_json& j, const BoundingBox& b) {
  j["x_min"] = b.x_min;
  j["y_min"] = b.y_min;
  j["x_max"] = b.x_max;
  j["y_max"] = b.y_max;
}

json parse_document(const std::string& content, const Where& at) {
  try {
    return json::parse(content);
  } catch (const json::parse_error& ex) {
    if (at.line > 0) {
      throw ValidationError(fmt::format("{}:{}: malformed JSON: {}", at.file->string(), at.line,
                                        ex.what()));
    }
    throw ValidationError(fmt::format("{}: malformed JSON: {}", at.file->string(), ex.what()));
  }
}

// Calls fn(json, Where) for every non-blank line.
template <typename Fn>
void for_each_line(const fs::path& path, Fn&& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const Where at{&path, number};
    const json doc = parse_document(line, at);
    if (!doc.is_object()) at.fail("<root>", "expected a JSON object");
    fn(doc, at);
  }
  if (in.bad()) throw IoError("failed reading " + path.string());
}

template <typename Image>
void check_unique(std::map<std::string, std::size_t>& seen, const Image& img, const Where& at) {
  const auto [it, inserted] = seen.emplace(img.image_id, at.line);
  if (!inserted) {
    at.fail("image_id", fmt::format("duplicate image_id '{}' (first seen on line {})",
                                    img.image_id, it->second));
  }
}

}  // namespace

// ---------------------------------------------------------------------------

FeatureStack read_fstk(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::array<unsigned char, 20> header{};
  in.read(reinterpret_cast<char*>(header.data()), header.size());
  if (in.gcount() != static_cast<std::streamsize>(header.size())) {
    throw ValidationError(path.string() + ": truncated FSTK header");
  }
  if (std::memcmp(header.data(), "FSTK", 4) != 0) {
    throw ValidationError(path.string() + ": bad magic, expected FSTK");
  }
  const std::uint32_t version = load_u32_le(header.data() + 4);
  if (version != kFstkVersion) {
    throw ValidationError(fmt::format("{}: unsupported FSTK version {}", path.string(), version));
  }
  const std::size_t k = load_u32_le(header.data() + 8);
  const std::size_t h = load_u32_le(header.data() + 12);
  const std::size_t w = load_u32_le(header.data() + 16);
  if (k == 0 || h == 0 || w == 0) {
    throw ValidationError(path.string() + ": FSTK dimensions must be positive");
  }
  const std::size_t n = k * h * w;
  std::vector<unsigned char> raw(n * 4);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw ValidationError(fmt::format("{}: truncated FSTK payload, expected {} floats",
                                      path.string(), n));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw ValidationError(path.string() + ": trailing bytes after FSTK payload");
  }
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    values[i] = static_cast<double>(std::bit_cast<float>(load_u32_le(raw.data() + 4 * i)));
  }
  try {
    return FeatureStack(k, h, w, std::move(values));
  } catch (const ValidationError& ex) {
    throw ValidationError(path.string() + ": " + ex.what());
  }
}

void write_fstk(const fs::path& path, const FeatureStack& stack) {
  std::vector<unsigned char> buf(20 + 4 * stack.values().size());
  std::memcpy(buf.data(), "FSTK", 4);
  store_u32_le(buf.data() + 4, kFstkVersion);
  store_u32_le(buf.data() + 8, static_cast<std::uint32_t>(stack.k_count()));
  store_u32_le(buf.data() + 12, static_cast<std::uint32_t>(stack.height()));
  store_u32_le(buf.data() + 16, static_cast<std::uint32_t>(stack.width()));
  const auto values = stack.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    store_u32_le(buf.data() + 20 + 4 * i,
                 std::bit_cast<std::uint32_t>(static_cast<float>(values[i])));
  }
  auto out = open_out(path);
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  finish(out, path);
}

// ---------------------------------------------------------------------------

WeightVector load_weight_vector(const fs::path& path) {
  const Where at{&path, 0};
  const json doc = parse_document(read_text(path), at);
  WeightVector w;
  w.weights = numbers(member(doc, "weights", at, ""), at, "weights");
  w.bias = number(member(doc, "bias", at, ""), at, "bias");
  if (w.weights.empty()) at.fail("weights", "must not be empty");
  return w;
}

void save_weight_vector(const fs::path& path, const WeightVector& w) {
  ordered_json j;
  j["weights"] = w.weights;
  j["bias"] = w.bias;
  auto out = open_out(path);
  out << j.dump() << '\n';
  finish(out, path);
}

bool is_head_model_file(const fs::path& path) {
  const Where at{&path, 0};
  const json doc = parse_document(read_text(path), at);
  return doc.is_object() && doc.contains("conv");
}

HeadModel load_head_model(const fs::path& path) {
  const Where at{&path, 0};
  const json doc = parse_document(read_text(path), at);
  const json& conv = member(doc, "conv", at, "");
  const std::size_t out_ch = positive_int(member(conv, "out", at, "conv"), at, "conv.out");
  const std::size_t in_ch = positive_int(member(conv, "in", at, "conv"), at, "conv.in");
  auto kernels = numbers(member(conv, "kernels", at, "conv"), at, "conv.kernels");
  auto bias = numbers(member(conv, "bias", at, "conv"), at, "conv.bias");

  HeadModel model;
  try {
    model.conv = ConvKernelBank(out_ch, in_ch, std::move(kernels), std::move(bias));
  } catch (const ValidationError& ex) {
    at.fail("conv", ex.what());
  }

  const json& softmax = member(doc, "softmax", at, "");
  const json& rows = member(softmax, "weights", at, "softmax");
  if (!rows.is_array() || rows.size() != 2) {
    at.fail("softmax.weights", "expected two rows (non-food, food)");
  }
  const auto biases = numbers(member(softmax, "bias", at, "softmax"), at, "softmax.bias");
  if (biases.size() != 2) at.fail("softmax.bias", "expected two values (non-food, food)");
  for (std::size_t c = 0; c < 2; ++c) {
    model.softmax.class_weights[c] = numbers(rows[c], at, fmt::format("softmax.weights[{}]", c));
    model.softmax.class_biases[c] = biases[c];
  }
  try {
    model.softmax.validate();
  } catch (const ValidationError& ex) {
    at.fail("softmax", ex.what());
  }
  if (model.softmax.width() != out_ch) {
    at.fail("softmax.weights", fmt::format("row length {} does not match conv.out {}",
                                           model.softmax.width(), out_ch));
  }
  return model;
}

void save_head_model(const fs::path& path, const HeadModel& model) {
  ordered_json j;
  const auto kernels = model.conv.kernels();
  const auto biases = model.conv.biases();
  j["conv"] = {{"out", model.conv.out_channels()},
               {"in", model.conv.in_channels()},
               {"kernels", std::vector<double>(kernels.begin(), kernels.end())},
               {"bias", std::vector<double>(biases.begin(), biases.end())}};
  j["softmax"] = {{"weights", {model.softmax.class_weights[0], model.softmax.class_weights[1]}},
                  {"bias", {model.softmax.class_biases[0], model.softmax.class_biases[1]}}};
  auto out = open_out(path);
  out << j.dump() << '\n';
  finish(out, path);
}

// ---------------------------------------------------------------------------

std::vector<ImageAnnotations> read_annotations(const fs::path& path) {
  std::vector<ImageAnnotations> images;
  std::map<std::string, std::size_t> seen;
  for_each_line(path, [&](const json& doc, const Where& at) {
    ImageAnnotations img;
    img.image_id = text(member(doc, "image_id", at, ""), at, "image_id");
    img.width = positive_int(member(doc, "width", at, ""), at, "width");
    img.height = positive_int(member(doc, "height", at, ""), at, "height");
    check_unique(seen, img, at);
    const json& boxes = member(doc, "boxes", at, "");
    if (!boxes.is_array()) at.fail("boxes", "expected an array");
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      const std::string ctx = fmt::format("boxes[{}]", i);
      GroundTruthBox g;
      g.box = box_fields(boxes[i], at, ctx);
      g.class_label = normalize_label(text(member(boxes[i], "class", at, ctx), at, ctx + ".class"));
      if (g.class_label.empty()) at.fail(ctx + ".class", "must not be empty");
      g.image_id = img.image_id;
      img.boxes.push_back(std::move(g));
    }
    images.push_back(std::move(img));
  });
  return images;
}

void write_annotations(const fs::path& path, const std::vector<ImageAnnotations>& images) {
  auto out = open_out(path);
  for (const auto& img : images) {
    ordered_json j;
    j["image_id"] = img.image_id;
    j["width"] = img.width;
    j["height"] = img.height;
    j["boxes"] = ordered_json::array();
    for (const auto& g : img.boxes) {
      ordered_json b;
      b["class"] = g.class_label;
      put_box(b, g.box);
      j["boxes"].push_back(std::move(b));
    }
    out << j.dump() << '\n';
  }
  finish(out, path);
}

std::vector<ImagePredictions> read_predictions(const fs::path& path) {
  std::vector<ImagePredictions> images;
  std::map<std::string, std::size_t> seen;
  for_each_line(path, [&](const json& doc, const Where& at) {
    ImagePredictions img;
    img.image_id = text(member(doc, "image_id", at, ""), at, "image_id");
    img.width = positive_int(member(doc, "width", at, ""), at, "width");
    img.height = positive_int(member(doc, "height", at, ""), at, "height");
    check_unique(seen, img, at);
    const json& boxes = member(doc, "boxes", at, "");
    if (!boxes.is_array()) at.fail("boxes", "expected an array");
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      const std::string ctx = fmt::format("boxes[{}]", i);
      Prediction p;
      p.box = box_fields(boxes[i], at, ctx);
      p.image_id = img.image_id;
      if (boxes[i].contains("score")) p.score = number(boxes[i]["score"], at, ctx + ".score");
      if (boxes[i].contains("class")) {
        p.class_label = normalize_label(text(boxes[i]["class"], at, ctx + ".class"));
      }
      img.boxes.push_back(std::move(p));
    }
    images.push_back(std::move(img));
  });
  return images;
}

void write_predictions(const fs::path& path, const std::vector<ImagePredictions>& images) {
  auto out = open_out(path);
  for (const auto& img : images) {
    ordered_json j;
    j["image_id"] = img.image_id;
    j["width"] = img.width;
    j["height"] = img.height;
    j["boxes"] = ordered_json::array();
    for (const auto& p : img.boxes) {
      ordered_json b;
      if (p.class_label) b["class"] = *p.class_label;
      if (p.score) b["score"] = *p.score;
      put_box(b, p.box);
      j["boxes"].push_back(std::move(b));
    }
    out << j.dump() << '\n';
  }
  finish(out, path);
}

LabeledByImage read_labeled_predictions(const fs::path& path) {
  LabeledByImage labeled;
  std::map<std::string, std::size_t> seen;
  for_each_line(path, [&](const json& doc, const Where& at) {
    struct {
      std::string image_id;
    } img{text(member(doc, "image_id", at, ""), at, "image_id")};
    check_unique(seen, img, at);
    auto& list = labeled[img.image_id];
    const json& preds = member(doc, "predictions", at, "");
    if (!preds.is_array()) at.fail("predictions", "expected an array");
    for (std::size_t i = 0; i < preds.size(); ++i) {
      const std::string ctx = fmt::format("predictions[{}]", i);
      LabeledPrediction lp;
      lp.box = box_fields(preds[i], at, ctx);
      lp.image_id = img.image_id;
      lp.class_label = normalize_label(text(member(preds[i], "class", at, ctx), at, ctx + ".class"));
      if (lp.class_label.empty()) at.fail(ctx + ".class", "must not be empty");
      lp.recognition_score = number(member(preds[i], "score", at, ctx), at, ctx + ".score");
      list.push_back(std::move(lp));
    }
  });
  return labeled;
}

void write_labeled_predictions(const fs::path& path, const LabeledByImage& labeled) {
  auto out = open_out(path);
  for (const auto& [image_id, list] : labeled) {
    ordered_json j;
    j["image_id"] = image_id;
    j["predictions"] = ordered_json::array();
    for (const auto& lp : list) {
      ordered_json p;
      p["class"] = lp.class_label;
      p["score"] = lp.recognition_score;
      put_box(p, lp.box);
      j["predictions"].push_back(std::move(p));
    }
    out << j.dump() << '\n';
  }
  finish(out, path);
}

GroundTruthByImage group_ground_truth(const std::vector<ImageAnnotations>& images) {
  GroundTruthByImage out;
  for (const auto& img : images) {
    auto& list = out[img.image_id];
    list.insert(list.end(), img.boxes.begin(), img.boxes.end());
  }
  return out;
}

PredictionsByImage group_predictions(const std::vector<ImagePredictions>& images) {
  PredictionsByImage out;
  for (const auto& img : images) {
    auto& list = out[img.image_id];
    list.insert(list.end(), img.boxes.begin(), img.boxes.end());
  }
  return out;
}

std::set<std::string> read_class_list(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::set<std::string> classes;
  std::string line;
  while (std::getline(in, line)) {
    auto label = normalize_label(line);
    if (!label.empty()) classes.insert(std::move(label));
  }
  return classes;
}

// ---------------------------------------------------------------------------

DatasetManifest load_manifest(const fs::path& path) {
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    const fs::path candidate(p);
    return candidate.is_absolute() ? candidate : base / candidate;
  };
  DatasetManifest manifest;
  std::map<std::string, std::size_t> seen;
  for_each_line(path, [&](const json& doc, const Where& at) {
    ManifestEntry e;
    e.image_id = text(member(doc, "image_id", at, ""), at, "image_id");
    if (e.image_id.empty()) at.fail("image_id", "must not be empty");
    check_unique(seen, e, at);
    e.width = positive_int(member(doc, "width", at, ""), at, "width");
    e.height = positive_int(member(doc, "height", at, ""), at, "height");
    e.features = resolve(text(member(doc, "features", at, ""), at, "features"));
    if (!fs::is_regular_file(e.features)) {
      at.fail("features", "file not found: " + e.features.string());
    }
    if (doc.contains("annotations") && !doc["annotations"].is_null()) {
      e.annotations = resolve(text(doc["annotations"], at, "annotations"));
      if (!fs::is_regular_file(*e.annotations)) {
        at.fail("annotations", "file not found: " + e.annotations->string());
      }
    }
    manifest.entries.push_back(std::move(e));
  });
  return manifest;
}

void write_manifest(const fs::path& path, const DatasetManifest& manifest) {
  const fs::path base = path.parent_path();
  auto relative = [&](const fs::path& p) {
    const fs::path rel = p.lexically_relative(base.empty() ? fs::path(".") : base);
    return (rel.empty() ? p : rel).generic_string();
  };
  auto out = open_out(path);
  for (const auto& e : manifest.entries) {
    ordered_json j;
    j["image_id"] = e.image_id;
    j["width"] = e.width;
    j["height"] = e.height;
    j["features"] = relative(e.features);
    if (e.annotations) j["annotations"] = relative(*e.annotations);
    out << j.dump() << '\n';
  }
  finish(out, path);
}

}  // namespace famloc::io
