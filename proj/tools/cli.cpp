#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "famloc/activation_map.hpp"
#include "famloc/config.hpp"
#include "famloc/errors.hpp"
#include "famloc/gap_head.hpp"
#include "famloc/io.hpp"
#include "famloc/joint_eval.hpp"
#include "famloc/localizer.hpp"
#include "famloc/metrics.hpp"
#include "famloc/tuner.hpp"

namespace famloc::cli {

namespace fs = std::filesystem;

namespace {

// Raw flag values; whether each was given is read back from CLI11.
struct Flags {
  std::string config;
  double t = 0.0, s = 0.0, e = 0.0, gate = 0.0, min_iou = 0.0;
  std::string iou_grid;
  std::string weights, manifest, out;
  std::string stack, pred, gt, classes, classifier;
  std::string t_values, s_values, e_values;
  unsigned threads = 0;
};

struct Options {
  CLI::Option* config = nullptr;
  CLI::Option* t = nullptr;
  CLI::Option* s = nullptr;
  CLI::Option* e = nullptr;
  CLI::Option* gate = nullptr;
  CLI::Option* min_iou = nullptr;
  CLI::Option* iou_grid = nullptr;
  CLI::Option* weights = nullptr;
  CLI::Option* manifest = nullptr;
  CLI::Option* out = nullptr;
};

bool given(const CLI::Option* opt) { return opt != nullptr && opt->count() > 0; }

RunConfig resolve_config(const Flags& f, const Options& o) {
  RunConfig cfg;
  if (given(o.config)) apply_config_file(cfg, f.config);
  if (given(o.t)) cfg.params.t = f.t;
  if (given(o.s)) cfg.params.s = f.s;
  if (given(o.e)) cfg.params.e = f.e;
  if (given(o.gate)) cfg.gate = f.gate;
  if (given(o.min_iou)) cfg.min_iou = f.min_iou;
  if (given(o.iou_grid)) cfg.iou_grid = parse_iou_grid(f.iou_grid);
  if (given(o.weights)) cfg.weights = f.weights;
  if (given(o.manifest)) cfg.manifest = f.manifest;
  if (given(o.out)) cfg.out_dir = f.out;
  cfg.validate();
  return cfg;
}

fs::path prepare_out_dir(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + cfg.out_dir.string());
  return cfg.out_dir;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  return os;
}

void close_out(std::ofstream& os, const fs::path& path) {
  os.flush();
  if (!os) throw IoError("failed writing " + path.string());
}

void echo_config(const RunConfig& cfg, const fs::path& dir) {
  const fs::path path = dir / "config.json";
  auto os = open_out(path);
  os << config_to_json(cfg);
  close_out(os, path);
}

const fs::path& require(const std::optional<fs::path>& p, const char* flag) {
  if (!p) throw ValidationError(fmt::format("missing required {}", flag));
  return *p;
}

std::vector<double> parse_list(const std::string& text, const char* flag) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(token, &used));
      if (token.find_first_not_of(' ', used) != std::string::npos) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw ValidationError(fmt::format("{}: cannot parse '{}' as a number", flag, token));
    }
  }
  return values;
}

// --- subcommands -----------------------------------------------------------

int run_fam(const Flags& f, const Options& o, std::ostream& out) {
  const RunConfig cfg = resolve_config(f, o);
  const fs::path& weights = require(cfg.weights, "--weights");
  const FeatureStack stack = io::read_fstk(f.stack);
  const fs::path dir = prepare_out_dir(cfg);

  ActivationGrid fam;
  std::optional<FoodDecision> decision;
  if (io::is_head_model_file(weights)) {
    const HeadModel model = io::load_head_model(weights);
    HeadOutput head = run_head(stack, model, cfg.gate);
    fam = std::move(head.fam);
    decision = head.decision;
  } else {
    const WeightVector w = io::load_weight_vector(weights);
    fam = compute_fam(stack, w);
  }

  export_heatmap(fam, dir / "fam.pgm");
  const fs::path csv = dir / "fam.csv";
  auto os = open_out(csv);
  for (std::size_t y = 0; y < fam.height(); ++y) {
    for (std::size_t x = 0; x < fam.width(); ++x) {
      os << (x ? "," : "") << fmt::format("{}", fam.at(y, x));
    }
    os << '\n';
  }
  close_out(os, csv);

  out << fmt::format("fam {}x{} max {}\n", fam.height(), fam.width(), grid_max(fam));
  if (decision) {
    out << fmt::format("p_food {:.6f} is_food {}\n", decision->p_food, decision->is_food);
  }
  return kExitOk;
}

int run_localize(const Flags& f, const Options& o, std::ostream& out) {
  const RunConfig cfg = resolve_config(f, o);
  const auto manifest = io::load_manifest(require(cfg.manifest, "--manifest"));
  const HeadModel model = io::load_head_model(require(cfg.weights, "--weights"));
  const fs::path dir = prepare_out_dir(cfg);

  std::vector<io::ImagePredictions> images;
  std::size_t box_count = 0;
  for (const auto& entry : manifest.entries) {
    const HeadOutput head = run_head(io::read_fstk(entry.features), model, cfg.gate);
    io::ImagePredictions img{entry.image_id, entry.width, entry.height, {}};
    for (const auto& box : propose_boxes(head.fam, head.decision, cfg.params, entry.height,
                                         entry.width)) {
      img.boxes.push_back(Prediction{box, entry.image_id, std::nullopt, std::nullopt});
    }
    box_count += img.boxes.size();
    images.push_back(std::move(img));
  }
  io::write_predictions(dir / "predictions.jsonl", images);
  echo_config(cfg, dir);
  out << fmt::format("localized {} image(s), {} box(es)\n", images.size(), box_count);
  return kExitOk;
}

int run_evaluate(const Flags& f, const Options& o, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = resolve_config(f, o);
  const auto preds = io::group_predictions(io::read_predictions(f.pred));
  const auto gts = io::group_ground_truth(io::read_annotations(f.gt));
  const fs::path dir = prepare_out_dir(cfg);
  const auto grid = cfg.effective_iou_grid();
  const auto points = curves(preds, gts, grid, &err);
  const fs::path csv = dir / "curves.csv";
  auto os = open_out(csv);
  write_curves_csv(os, points);
  close_out(os, csv);
  double mean_acc = 0.0;
  for (const auto& p : points) mean_acc += p.accuracy;
  out << fmt::format("{} threshold(s), mean accuracy {:.6f}\n", points.size(),
                     mean_acc / static_cast<double>(points.size()));
  return kExitOk;
}

int run_tune(const Flags& f, const Options& o, std::ostream& out, CLI::App& sub) {
  const RunConfig cfg = resolve_config(f, o);
  const auto manifest = io::load_manifest(require(cfg.manifest, "--manifest"));
  const HeadModel model = io::load_head_model(require(cfg.weights, "--weights"));

  GridSpec spec;
  if (sub.count("--t-values")) spec.t_values = parse_list(f.t_values, "--t-values");
  if (sub.count("--s-values")) spec.s_values = parse_list(f.s_values, "--s-values");
  if (sub.count("--e-values")) spec.e_values = parse_list(f.e_values, "--e-values");

  // Ground truth: --gt for everything, otherwise each entry's own file.
  std::map<fs::path, GroundTruthByImage> gt_cache;
  auto ground_truth_for = [&](const io::ManifestEntry& entry) {
    std::optional<fs::path> source;
    if (sub.count("--gt")) {
      source = fs::path(f.gt);
    } else {
      source = entry.annotations;
    }
    if (!source) {
      throw ValidationError(fmt::format(
          "tune: image '{}' has no annotations reference and no --gt was given", entry.image_id));
    }
    auto it = gt_cache.find(*source);
    if (it == gt_cache.end()) {
      it = gt_cache.emplace(*source, io::group_ground_truth(io::read_annotations(*source))).first;
    }
    const auto found = it->second.find(entry.image_id);
    return found == it->second.end() ? std::vector<GroundTruthBox>{} : found->second;
  };

  std::vector<ValidationImage> validation;
  for (const auto& entry : manifest.entries) {
    HeadOutput head = run_head(io::read_fstk(entry.features), model, cfg.gate);
    validation.push_back(ValidationImage{entry.image_id, std::move(head.fam), head.decision,
                                         ground_truth_for(entry), entry.height, entry.width});
  }

  const fs::path dir = prepare_out_dir(cfg);
  const auto grid = cfg.effective_iou_grid();
  const TuneResult result = grid_search(validation, spec, grid, f.threads);

  const fs::path csv = dir / "tune.csv";
  auto cos = open_out(csv);
  write_tune_csv(cos, result);
  close_out(cos, csv);
  const fs::path json = dir / "tune.json";
  auto jos = open_out(json);
  write_tune_json(jos, result);
  close_out(jos, json);
  echo_config(cfg, dir);

  out << fmt::format("best t={} s={} e={} objective {:.6f} over {} combination(s)\n",
                     result.best.t, result.best.s, result.best.e, result.objective,
                     result.table.size());
  return kExitOk;
}

int run_joint_eval(const Flags& f, const Options& o, std::ostream& out, CLI::App& sub) {
  const RunConfig cfg = resolve_config(f, o);
  const auto labeled = io::read_labeled_predictions(f.pred);
  const auto gts = io::group_ground_truth(io::read_annotations(f.gt));
  std::optional<std::set<std::string>> classes;
  if (sub.count("--classes")) classes = io::read_class_list(f.classes);
  const fs::path dir = prepare_out_dir(cfg);
  const ClassMetrics metrics = joint_evaluate(labeled, gts, cfg.min_iou, classes);

  const fs::path json = dir / "joint.json";
  auto jos = open_out(json);
  write_class_metrics_json(jos, metrics);
  close_out(jos, json);
  const fs::path csv = dir / "joint.csv";
  auto cos = open_out(csv);
  write_class_metrics_csv(cos, metrics);
  close_out(cos, csv);

  out << fmt::format("{} class(es): macro precision {:.6f} recall {:.6f} accuracy {:.6f}\n",
                     metrics.per_class.size(), metrics.macro.precision, metrics.macro.recall,
                     metrics.macro.accuracy);
  return kExitOk;
}

ClassifierSource make_source(const std::string& spec, const std::string& gt_path) {
  if (spec == "oracle") {
    if (gt_path.empty()) throw ValidationError("--classifier oracle requires --gt");
    return OracleClassifier{io::group_ground_truth(io::read_annotations(gt_path))};
  }
  if (spec.starts_with("constant:")) {
    const std::string label = normalize_label(spec.substr(9));
    if (label.empty()) throw ValidationError("--classifier constant: needs a label");
    return ConstantClassifier{label};
  }
  if (spec.starts_with("file:")) {
    const std::string path = spec.substr(5);
    if (path.empty()) throw ValidationError("--classifier file: needs a path");
    return FileClassifier{io::read_labeled_predictions(path)};
  }
  throw ValidationError(fmt::format(
      "--classifier: expected file:PATH, oracle or constant:LABEL, got '{}'", spec));
}

int run_classify(const Flags& f, const Options& o, std::ostream& out) {
  const RunConfig cfg = resolve_config(f, o);
  const auto images = io::read_predictions(f.pred);
  const ClassifierSource source = make_source(f.classifier, f.gt);
  const fs::path dir = prepare_out_dir(cfg);

  LabeledByImage labeled;
  std::size_t kept = 0, total = 0;
  for (const auto& img : images) {
    auto list = classify_boxes(img.boxes, source);
    total += img.boxes.size();
    kept += list.size();
    labeled[img.image_id] = std::move(list);
  }
  io::write_labeled_predictions(dir / "labeled.jsonl", labeled);
  out << fmt::format("labeled {} of {} box(es)\n", kept, total);
  return kExitOk;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"famloc: activation-map food localization and detection evaluation", "famloc"};
  app.require_subcommand(1);
  Flags f;

  auto add_common = [&](CLI::App* sub, Options& o) {
    o.config = sub->add_option("--config", f.config, "JSON config file (flags take precedence)");
    o.out = sub->add_option("--out", f.out, "Output directory");
  };
  auto add_localizer = [&](CLI::App* sub, Options& o) {
    o.t = sub->add_option("--t", f.t, "Threshold fraction of the FAM maximum (default 0.4)");
    o.s = sub->add_option("--s", f.s, "Minimum region area fraction (default 0.1)");
    o.e = sub->add_option("--e", f.e, "Box expansion fraction (default 0.2)");
  };

  Options fam_o, loc_o, eval_o, tune_o, joint_o, cls_o;

  auto* fam = app.add_subcommand("fam", "Feature stack + weights -> heatmap and FAM dump");
  add_common(fam, fam_o);
  fam->add_option("--stack", f.stack, "FSTK feature stack")->required();
  fam_o.weights = fam->add_option("--weights", f.weights, "WeightVector JSON or head model JSON");
  fam_o.gate = fam->add_option("--gate", f.gate, "Food probability gate (default 0.5)");

  auto* loc = app.add_subcommand("localize", "Manifest + head weights -> box predictions");
  add_common(loc, loc_o);
  add_localizer(loc, loc_o);
  loc_o.gate = loc->add_option("--gate", f.gate, "Food probability gate (default 0.5)");
  loc_o.weights = loc->add_option("--weights", f.weights, "Head model JSON");
  loc_o.manifest = loc->add_option("--manifest", f.manifest, "Dataset manifest (JSON lines)");

  auto* eval = app.add_subcommand("evaluate", "Predictions + ground truth -> curves CSV");
  add_common(eval, eval_o);
  eval->add_option("--pred", f.pred, "Predictions (JSON lines)")->required();
  eval->add_option("--gt", f.gt, "Ground-truth annotations (JSON lines)")->required();
  eval_o.iou_grid = eval->add_option("--iou-grid", f.iou_grid, "start:stop:step or a,b,c");

  auto* tune = app.add_subcommand("tune", "Grid search over {t, s, e} on a validation manifest");
  add_common(tune, tune_o);
  tune_o.gate = tune->add_option("--gate", f.gate, "Food probability gate (default 0.5)");
  tune_o.iou_grid = tune->add_option("--iou-grid", f.iou_grid, "start:stop:step or a,b,c");
  tune_o.weights = tune->add_option("--weights", f.weights, "Head model JSON");
  tune_o.manifest = tune->add_option("--manifest", f.manifest, "Validation manifest");
  tune->add_option("--gt", f.gt, "Ground truth for every image (overrides manifest references)");
  tune->add_option("--t-values", f.t_values, "Comma-separated t values");
  tune->add_option("--s-values", f.s_values, "Comma-separated s values");
  tune->add_option("--e-values", f.e_values, "Comma-separated e values");
  tune->add_option("--threads", f.threads, "Worker threads (0 = hardware concurrency)");

  auto* joint = app.add_subcommand("joint-eval", "Labeled predictions + ground truth -> per-class metrics");
  add_common(joint, joint_o);
  joint->add_option("--pred", f.pred, "Labeled predictions (JSON lines)")->required();
  joint->add_option("--gt", f.gt, "Ground-truth annotations (JSON lines)")->required();
  joint_o.min_iou = joint->add_option("--min-iou", f.min_iou, "Minimum IoU (default 0.5)");
  joint->add_option("--classes", f.classes, "Declared class list, one label per line");

  auto* cls = app.add_subcommand("classify", "Boxes + classifier source -> labeled predictions");
  add_common(cls, cls_o);
  cls->add_option("--pred", f.pred, "Box predictions (JSON lines)")->required();
  cls->add_option("--classifier", f.classifier, "file:PATH | oracle | constant:LABEL")->required();
  cls->add_option("--gt", f.gt, "Ground truth (required by the oracle classifier)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& ex) {
    err << "error: " << ex.what() << "\n\n";
    const CLI::App* target = &app;
    for (const auto* sub : app.get_subcommands()) target = sub;
    err << target->help();
    return kExitValidation;
  }

  try {
    if (fam->parsed()) return run_fam(f, fam_o, out);
    if (loc->parsed()) return run_localize(f, loc_o, out);
    if (eval->parsed()) return run_evaluate(f, eval_o, out, err);
    if (tune->parsed()) return run_tune(f, tune_o, out, *tune);
    if (joint->parsed()) return run_joint_eval(f, joint_o, out, *joint);
    if (cls->parsed()) return run_classify(f, cls_o, out);
  } catch (const IoError& ex) {
    err << "I/O error: " << ex.what() << '\n';
    return kExitIo;
  } catch (const fs::filesystem_error& ex) {
    err << "I/O error: " << ex.what() << '\n';
    return kExitIo;
  } catch (const ValidationError& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitValidation;
  }
  err << app.help();
  return kExitValidation;
}

}  // namespace famloc::cli
