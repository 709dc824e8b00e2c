// SPDX-License-Identifier: Apache-2.0

#include "dea/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>

#include "dea/error.hpp"
#include "dea/parallel.hpp"

namespace fs = std::filesystem;

namespace dea {

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) {
    throw DataError(fmt::format("cannot read '{}'", p.string()));
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text) || !out.flush()) {
    throw DataError(fmt::format("cannot write '{}'", p.string()));
  }
}

}  // namespace

std::string category_name(int class_id) {
  const auto cats = dota_categories();
  if (class_id >= 0 && static_cast<std::size_t>(class_id) < cats.size()) {
    return std::string(cats[static_cast<std::size_t>(class_id)].name);
  }
  return fmt::format("class-{}", class_id);
}

CorpusFiles corpus_layout(const fs::path& root) {
  return CorpusFiles{root / "annotations", root / "predictions"};
}

std::size_t write_synthetic_corpus(const fs::path& root, const SceneGenerator& generator,
                                   std::size_t count, int threads) {
  const CorpusFiles layout = corpus_layout(root);
  std::error_code ec;
  fs::create_directories(layout.annotations, ec);
  fs::create_directories(layout.predictions, ec);
  if (!fs::is_directory(layout.annotations) || !fs::is_directory(layout.predictions)) {
    throw DataError(fmt::format("cannot create corpus directories under '{}'", root.string()));
  }
  std::vector<std::size_t> objects(count, 0);
  parallel_for(count, threads, [&](std::size_t i) {
    const SyntheticScene scene = generator.generate(i);
    const TilePredictions tile = scene.predictions();
    write_file(layout.annotations / (scene.image_id + ".txt"),
               format_annotations(scene.annotation()));
    write_file(layout.predictions / (scene.image_id + ".txt"),
               format_predictions(std::span(&tile, 1), generator.pyramid().first_level));
    objects[i] = scene.gts.size();
  });
  std::size_t total = 0;
  for (std::size_t n : objects) {
    total += n;
  }
  return total;
}

AnnotationCorpus load_annotation_dir(const fs::path& dir, bool strict) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw DataError(fmt::format("annotation directory '{}' not found", dir.string()));
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") {
      files.push_back(entry.path());
    }
  }
  if (ec) {
    throw DataError(fmt::format("cannot list '{}': {}", dir.string(), ec.message()));
  }
  std::sort(files.begin(), files.end());

  AnnotationCorpus corpus;
  for (const fs::path& f : files) {
    std::string text;
    try {
      text = read_file(f);
    } catch (const DataError& e) {
      corpus.issues.push_back({f.string(), 0, e.what()});
      continue;
    }
    ParseResult parsed = parse_annotations(text, f.stem().string(), ParseOptions{strict});
    for (const ParseIssue& issue : parsed.issues) {
      corpus.issues.push_back({f.string(), issue.line, issue.message});
    }
    corpus.scenes.push_back(std::move(parsed.scene));
  }
  return corpus;
}

PredictionCorpus load_prediction_dir(const fs::path& dir, std::span<const SceneAnnotation> scenes,
                                     const PyramidConfig& cfg) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw DataError(fmt::format("prediction directory '{}' not found", dir.string()));
  }
  PredictionCorpus corpus;
  for (const SceneAnnotation& s : scenes) {
    const fs::path f = dir / (s.image_id + ".txt");
    if (!fs::is_regular_file(f, ec)) {
      corpus.issues.push_back({f.string(), 0, "prediction file missing"});
      corpus.files.emplace_back(std::nullopt);
      continue;
    }
    try {
      PredictionFile parsed = parse_predictions(read_file(f), cfg);
      for (const ParseIssue& issue : parsed.issues) {
        corpus.issues.push_back({f.string(), issue.line, issue.message});
      }
      corpus.files.emplace_back(std::move(parsed));
    } catch (const DataError& e) {
      corpus.issues.push_back({f.string(), 0, e.what()});
      corpus.files.emplace_back(std::nullopt);
    }
  }
  return corpus;
}

// ------------------------------------------------------------- screening

ScreenScene to_screen_scene(const SyntheticScene& scene) {
  ScreenScene out;
  out.image_id = scene.image_id;
  out.image_w = scene.image_w;
  out.image_h = scene.image_h;
  out.gts = scene.gts;
  for (const HBox& g : scene.gts) {
    out.oriented_gts.push_back(OBox::from_hbox(g));
  }
  out.af_vectors = scene.af_vectors;
  return out;
}

std::vector<ScreenScene> screen_scenes(std::span<const SceneAnnotation> scenes,
                                       std::span<const std::optional<PredictionFile>> predictions,
                                       const RunConfig& cfg) {
  std::vector<ScreenScene> out;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const SceneAnnotation& scene = scenes[i];
    const auto [w, h] = scene.extent();
    const bool tiled = w > cfg.patch || h > cfg.patch;
    std::vector<TilePredictions> tiles;
    if (i < predictions.size() && predictions[i]) {
      tiles = predictions[i]->tiles;
    }
    if (tiles.empty()) {
      tiles.push_back(TilePredictions{});
    }
    for (const TilePredictions& tile : tiles) {
      const SceneAnnotation cropped = crop_annotations(scene, tile.offset, cfg.patch);
      ScreenScene s;
      s.image_id = tiled ? cropped.image_id : scene.image_id;
      s.image_w = cropped.image_w;
      s.image_h = cropped.image_h;
      for (const AnnotatedObject& o : cropped.objects) {
        s.gts.push_back(hbb_of(o.obb));
        s.oriented_gts.push_back(o.obb);
      }
      s.af_vectors = tile.anchor_free;
      out.push_back(std::move(s));
    }
  }
  return out;
}

void GridCache::prepare(std::span<const ScreenScene> scenes) {
  for (const ScreenScene& s : scenes) {
    const auto key = std::make_pair(s.image_w, s.image_h);
    if (entries_.count(key) != 0) {
      continue;
    }
    PyramidConfig cfg = base_;
    cfg.image_w = s.image_w;
    cfg.image_h = s.image_h;
    AnchorGrid grid = generate_anchors(cfg);
    std::vector<HBox> boxes = grid.flat_boxes();
    std::vector<AnchorLocator> locators;
    locators.reserve(boxes.size());
    for (const AnchorLevel& level : grid.levels()) {
      for (std::size_t k = 0; k < level.anchors.size(); ++k) {
        locators.push_back(AnchorLocator{level.level_id, k});
      }
    }
    entries_.emplace(key, Entry{std::move(grid), std::move(boxes), std::move(locators)});
  }
}

const AnchorGrid& GridCache::get(int image_w, int image_h) const {
  const auto it = entries_.find({image_w, image_h});
  if (it == entries_.end()) {
    throw ConfigError(fmt::format("no anchor grid prepared for {}x{}", image_w, image_h));
  }
  return it->second.grid;
}

std::span<const HBox> GridCache::boxes(int image_w, int image_h) const {
  get(image_w, image_h);
  return entries_.find({image_w, image_h})->second.boxes;
}

std::span<const AnchorLocator> GridCache::locators(int image_w, int image_h) const {
  get(image_w, image_h);
  return entries_.find({image_w, image_h})->second.locators;
}

AssignmentResult screen_scene(const ScreenScene& scene, const GridCache& grids,
                              const RunConfig& cfg, bool with_af) {
  const auto anchors = grids.boxes(scene.image_w, scene.image_h);
  const std::span<const PredVector> vectors =
      with_af ? std::span<const PredVector>(scene.af_vectors) : std::span<const PredVector>();
  const auto& strides = cfg.pyramid.strides;
  if (cfg.iou_mode == IouMode::kOriented && scene.oriented_gts.size() == scene.gts.size() &&
      !scene.gts.empty()) {
    return screen(std::span<const OBox>(scene.oriented_gts), anchors, vectors, strides,
                  cfg.screen, IouMode::kOriented);
  }
  return screen(std::span<const HBox>(scene.gts), anchors, vectors, strides, cfg.screen);
}

double IouStudyResult::per_image(std::size_t count) const {
  return images == 0 ? 0.0 : static_cast<double>(count) / static_cast<double>(images);
}

IouStudyResult run_iou_study(std::span<const ScreenScene> scenes, const RunConfig& cfg,
                                int threads) {
  GridCache grids(cfg.pyramid);
  grids.prepare(scenes);

  struct Partial {
    AssignmentStats baseline;
    AssignmentStats dea;
    std::size_t baseline_high = 0;
    std::size_t dea_high = 0;
    bool contained = true;
  };
  std::vector<Partial> partials(scenes.size());
  parallel_for(scenes.size(), threads, [&](std::size_t i) {
    const ScreenScene& s = scenes[i];
    const AssignmentResult base = screen_scene(s, grids, cfg, false);
    const AssignmentResult dea = screen_scene(s, grids, cfg, true);
    Partial& p = partials[i];
    p.baseline = assignment_stats(base, s.gts.size());
    p.dea = assignment_stats(dea, s.gts.size());
    for (const PositiveSample& ps : base.positives()) {
      p.baseline_high += ps.iou >= kHighIou ? 1 : 0;
    }
    for (const PositiveSample& ps : dea.positives()) {
      p.dea_high += ps.iou >= kHighIou ? 1 : 0;
    }
    p.contained = std::includes(dea.positive_anchors.begin(), dea.positive_anchors.end(),
                                base.positive_anchors.begin(), base.positive_anchors.end());
  });

  IouStudyResult out;
  out.images = scenes.size();
  for (const Partial& p : partials) {
    for (std::size_t b = 0; b < kHistogramBins; ++b) {
      out.baseline_counts[b] += p.baseline.histogram[b];
      out.dea_counts[b] += p.dea.histogram[b];
    }
    out.baseline_total += p.baseline.total();
    out.dea_total += p.dea.total();
    out.baseline_high += p.baseline_high;
    out.dea_high += p.dea_high;
    out.containment_violations += p.contained ? 0 : 1;
  }
  return out;
}

void write_iou_study(const IouStudyResult& r, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  fmt::memory_buffer hist;
  auto h = std::back_inserter(hist);
  fmt::format_to(h, "iou_lo,iou_hi,baseline_per_image,dea_per_image,baseline_count,dea_count\n");
  for (std::size_t b = 0; b < kHistogramBins; ++b) {
    fmt::format_to(h, "{:.2f},{:.2f},{:.6f},{:.6f},{},{}\n", b * kHistogramBinWidth,
                   (b + 1) * kHistogramBinWidth, r.per_image(r.baseline_counts[b]),
                   r.per_image(r.dea_counts[b]), r.baseline_counts[b], r.dea_counts[b]);
  }
  write_file(dir / "iou_histogram.csv", fmt::to_string(hist));

  fmt::memory_buffer sum;
  auto s = std::back_inserter(sum);
  fmt::format_to(s, "metric,baseline,dea\n");
  fmt::format_to(s, "images,{},{}\n", r.images, r.images);
  fmt::format_to(s, "positives,{},{}\n", r.baseline_total, r.dea_total);
  fmt::format_to(s, "positives_per_image,{:.6f},{:.6f}\n", r.per_image(r.baseline_total),
                 r.per_image(r.dea_total));
  fmt::format_to(s, "positives_iou_ge_0.7,{},{}\n", r.baseline_high, r.dea_high);
  write_file(dir / "iou_summary.csv", fmt::to_string(sum));
}

// ------------------------------------------------------------- inference

InferenceResult run_inference(std::span<const SceneAnnotation> scenes,
                              std::span<const std::optional<PredictionFile>> predictions,
                              const RunConfig& cfg, int threads) {
  std::vector<ImageDetections> images(scenes.size());
  std::vector<OpCounter> counters(scenes.size());
  parallel_for(scenes.size(), threads, [&](std::size_t i) {
    images[i].image_id = scenes[i].image_id;
    if (i >= predictions.size() || !predictions[i]) {
      return;
    }
    std::vector<TileDetections> tiles;
    for (const TilePredictions& tile : predictions[i]->tiles) {
      std::vector<Detection> dets = decode_anchor_based(tile, cfg.pyramid);
      if (cfg.inference == InferenceMode::kFuse) {
        std::vector<Detection> af = decode_anchor_free(tile, cfg.pyramid);
        dets.insert(dets.end(), af.begin(), af.end());
      }
      tiles.push_back(
          TileDetections{tile.offset, nms(dets, cfg.nms_thresh, cfg.score_thresh, &counters[i])});
    }
    images[i].detections = merge_detections(tiles, cfg.nms_thresh, &counters[i]);
  });
  InferenceResult out;
  out.images = std::move(images);
  for (const OpCounter& c : counters) {
    out.ops.iou_evals += c.iou_evals;
  }
  return out;
}

std::string format_detections(std::span<const ImageDetections> images) {
  std::string out = std::string(kHbbHeader) + "\n";
  for (const ImageDetections& img : images) {
    for (const Detection& d : img.detections) {
      out += format_detection(img.image_id, d, category_name(d.class_id));
      out += '\n';
    }
  }
  return out;
}

EvalReport evaluate_detections(std::span<const SceneAnnotation> scenes,
                               std::span<const ImageDetection> rows, const RunConfig& cfg,
                               bool oriented, std::vector<std::string>* class_names) {
  CategoryVocabulary vocab(false);
  std::vector<ImageRecord> records(scenes.size());
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    index.emplace(scenes[i].image_id, i);
    for (const AnnotatedObject& o : scenes[i].objects) {
      const auto cls = vocab.id_of(o.category);
      if (!cls) {
        continue;
      }
      records[i].ground_truths.push_back(GroundTruth{
          oriented ? AnyBox(o.obb) : AnyBox(hbb_of(o.obb)), *cls, o.difficult});
    }
  }
  for (const ImageDetection& row : rows) {
    const auto it = index.find(row.image_id);
    const auto cls = vocab.id_of(row.class_name);
    if (it == index.end() || !cls) {
      continue;
    }
    Detection d = row.detection;
    d.class_id = *cls;
    if (!oriented) {
      d.box = envelope(d.box);
    }
    records[it->second].detections.push_back(std::move(d));
  }
  if (class_names != nullptr) {
    class_names->clear();
    for (std::size_t id = 0; id < vocab.size(); ++id) {
      class_names->push_back(vocab.name_of(static_cast<int>(id)));
    }
  }
  return evaluate(records, EvalOptions{cfg.eval_iou, cfg.voc07});
}

std::string format_eval_report(const EvalReport& report, std::span<const std::string> class_names) {
  fmt::memory_buffer buf;
  auto out = std::back_inserter(buf);
  fmt::format_to(out, "class,num_gt,ap\n");
  for (const ClassEval& c : report.classes) {
    const std::string name = static_cast<std::size_t>(c.class_id) < class_names.size()
                                 ? class_names[static_cast<std::size_t>(c.class_id)]
                                 : category_name(c.class_id);
    fmt::format_to(out, "{},{},{:.6f}\n", name, c.num_gt, c.ap);
  }
  fmt::format_to(out, "mAP,,{:.6f}\n", report.map);
  return fmt::to_string(buf);
}

}  // namespace dea
