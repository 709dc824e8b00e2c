// SPDX-License-Identifier: Apache-2.0
//
// dea: batch front end for scene generation, sample screening, the
// positive-IoU study, inference post-processing, evaluation and tiling.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 data error,
// 3 partial failure (some input files were missing or malformed).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "dea/config.hpp"
#include "dea/error.hpp"
#include "dea/parallel.hpp"
#include "dea/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitPartial = 3;

struct Globals {
  std::string config;
  std::uint64_t seed = 0;
  int threads = 1;
  bool strict = false;
};

struct Inputs {
  std::string corpus;
  std::string annotations;
  std::string predictions;

  void add_to(CLI::App* app, bool need_predictions) {
    app->add_option("--corpus", corpus, "corpus root with annotations/ and predictions/");
    app->add_option("--annotations", annotations, "annotation directory");
    if (need_predictions) {
      app->add_option("--predictions", predictions, "prediction directory");
    }
  }

  fs::path annotation_dir() const {
    if (!annotations.empty()) {
      return annotations;
    }
    if (corpus.empty()) {
      throw CLI::ValidationError("--annotations", "give --corpus or --annotations");
    }
    return dea::corpus_layout(corpus).annotations;
  }

  fs::path prediction_dir() const {
    if (!predictions.empty()) {
      return predictions;
    }
    if (corpus.empty()) {
      throw CLI::ValidationError("--predictions", "give --corpus or --predictions");
    }
    return dea::corpus_layout(corpus).predictions;
  }
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::fwrite(text.data(), 1, text.size(), stdout);
    return;
  }
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text)) {
    throw dea::DataError(fmt::format("cannot write '{}'", path.string()));
  }
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw dea::DataError(fmt::format("cannot read '{}'", path.string()));
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int report_issues(const std::vector<dea::FileIssue>& issues) {
  for (const auto& i : issues) {
    if (i.line > 0) {
      fmt::print(stderr, "error: {}:{}: {}\n", i.file, i.line, i.message);
    } else {
      fmt::print(stderr, "error: {}: {}\n", i.file, i.message);
    }
  }
  return issues.empty() ? kExitOk : kExitPartial;
}

template <typename T>
void append(std::vector<T>& a, const std::vector<T>& b) {
  a.insert(a.end(), b.begin(), b.end());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic enhancement anchor sample-assignment toolkit"};
  app.fallthrough();
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "key = value configuration file");
  app.add_option("--seed", g.seed, "random seed for synthetic corpora");
  app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--strict", g.strict, "reject categories outside the DOTA vocabulary");

  // gen
  auto* gen = app.add_subcommand("gen", "write a synthetic corpus");
  std::string gen_out;
  std::size_t gen_count = 100;
  dea::SyntheticSceneSpec spec;
  double tiny_fraction = 0.3;
  gen->add_option("--out", gen_out, "corpus root")->required();
  gen->add_option("--count", gen_count, "number of scenes");
  gen->add_option("--image-size", spec.image_w, "square image side")->check(CLI::Range(64, 1 << 16));
  gen->add_option("--objects", spec.objects, "objects per scene");
  gen->add_option("--tiny-fraction", tiny_fraction, "probability of the tiny band")
      ->check(CLI::Range(0.0, 1.0));
  gen->add_option("--extreme-fraction", spec.extreme_fraction, "share of >5:1 objects");
  gen->add_option("--af-noise", spec.af_noise, "anchor-free noise, regular objects");
  gen->add_option("--af-degraded-noise", spec.af_degraded_noise,
                  "anchor-free noise, large or extreme objects");
  gen->add_option("--ab-noise", spec.ab_noise, "anchor-based noise, regular objects");
  gen->add_option("--ab-accurate-noise", spec.ab_accurate_noise,
                  "anchor-based noise, large or extreme objects");
  gen->add_flag("--oracle", spec.oracle, "exact predictions with score 1");

  // screen
  auto* scr = app.add_subcommand("screen", "assign training samples and write them as rows");
  Inputs scr_in;
  scr_in.add_to(scr, true);
  std::string scr_out;
  bool scr_negatives = false;
  bool scr_baseline = false;
  scr->add_option("--out", scr_out, "output file (default stdout)");
  scr->add_flag("--negatives", scr_negatives, "also list negative anchors");
  scr->add_flag("--anchor-only", scr_baseline, "ignore anchor-free vectors");

  // stats
  auto* st = app.add_subcommand("stats", "positive-sample IoU histograms, baseline vs DEA");
  Inputs st_in;
  st_in.add_to(st, true);
  std::string st_out = ".";
  std::size_t st_synthetic = 0;
  st->add_option("--out", st_out, "directory for the plot-data files");
  st->add_option("--synthetic", st_synthetic, "generate this many scenes in memory instead");

  // infer
  auto* inf = app.add_subcommand("infer", "decode, suppress and merge predictions");
  Inputs inf_in;
  inf_in.add_to(inf, true);
  std::string inf_out;
  std::string inf_mode;
  inf->add_option("--out", inf_out, "detection file (default stdout)");
  inf->add_option("--mode", inf_mode, "freeze or fuse")->check(CLI::IsMember({"freeze", "fuse"}));

  // eval
  auto* ev = app.add_subcommand("eval", "VOC-style AP of a detection file");
  Inputs ev_in;
  ev_in.add_to(ev, false);
  std::string ev_dets;
  std::string ev_out;
  bool ev_voc07 = false;
  bool ev_oriented = false;
  ev->add_option("--detections", ev_dets, "detection file")->required();
  ev->add_option("--out", ev_out, "report file (default stdout)");
  ev->add_flag("--voc07", ev_voc07, "11-point interpolated AP");
  ev->add_flag("--oriented", ev_oriented, "match against oriented ground truth");

  // tile
  auto* tl = app.add_subcommand("tile", "tile plan or per-tile annotations");
  int tl_w = 0;
  int tl_h = 0;
  std::string tl_ann;
  std::string tl_out;
  tl->add_option("--width", tl_w, "image width");
  tl->add_option("--height", tl_h, "image height");
  tl->add_option("--annotations", tl_ann, "crop every annotation file in this directory");
  tl->add_option("--out", tl_out, "output directory for cropped annotations");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    dea::RunConfig cfg;
    if (!g.config.empty()) {
      cfg = dea::load_config(g.config);
    }
    cfg.validate();

    if (*gen) {
      spec.seed = g.seed;
      spec.image_h = spec.image_w;
      const double rest = 1.0 - tiny_fraction;
      const auto w = dea::SyntheticSceneSpec{}.band_weights;
      const double others = w[1] + w[2] + w[3];
      spec.band_weights = {tiny_fraction, rest * w[1] / others, rest * w[2] / others,
                           rest * w[3] / others};
      const dea::SceneGenerator generator(spec, cfg.pyramid, cfg.af_ranges);
      const std::size_t objects = dea::write_synthetic_corpus(gen_out, generator, gen_count,
                                                              g.threads);
      fmt::print("wrote {} scenes with {} objects to {}\n", gen_count, objects, gen_out);
      return kExitOk;
    }

    if (*tl) {
      if (!tl_ann.empty()) {
        if (tl_out.empty()) {
          throw CLI::ValidationError("--out", "required with --annotations");
        }
        auto corpus = dea::load_annotation_dir(tl_ann, g.strict);
        std::size_t tiles = 0;
        for (const auto& scene : corpus.scenes) {
          const auto [w, h] = scene.extent();
          const auto plan = dea::plan_tiles(w, h, cfg.patch, cfg.tile_stride);
          for (const auto& off : plan.offsets()) {
            const auto cropped = dea::crop_annotations(scene, off, cfg.patch);
            write_text(fs::path(tl_out) / (cropped.image_id + ".txt"),
                       dea::format_annotations(cropped));
            ++tiles;
          }
        }
        fmt::print("wrote {} tiles from {} images\n", tiles, corpus.scenes.size());
        return report_issues(corpus.issues);
      }
      if (tl_w <= 0 || tl_h <= 0) {
        throw CLI::ValidationError("--width", "give positive --width and --height, or --annotations");
      }
      const auto plan = dea::plan_tiles(tl_w, tl_h, cfg.patch, cfg.tile_stride);
      fmt::print("ox,oy\n");
      for (const auto& off : plan.offsets()) {
        fmt::print("{},{}\n", off.x, off.y);
      }
      return kExitOk;
    }

    if (*ev) {
      cfg.voc07 = cfg.voc07 || ev_voc07;
      auto corpus = dea::load_annotation_dir(ev_in.annotation_dir(), g.strict);
      const auto dets = dea::parse_detections(read_text(ev_dets));
      std::vector<dea::FileIssue> issues = corpus.issues;
      for (const auto& i : dets.issues) {
        issues.push_back({ev_dets, i.line, i.message});
      }
      std::vector<std::string> names;
      const auto report =
          dea::evaluate_detections(corpus.scenes, dets.rows, cfg, ev_oriented, &names);
      write_text(ev_out, dea::format_eval_report(report, names));
      fmt::print(stderr, "mAP {:.6f} over {} classes\n", report.map, report.classes.size());
      return report_issues(issues);
    }

    // screen, stats and infer share corpus loading.
    std::vector<dea::ScreenScene> scenes;
    std::vector<dea::FileIssue> issues;
    dea::AnnotationCorpus ann;
    dea::PredictionCorpus preds;
    const bool synthetic = *st && st_synthetic > 0;
    if (synthetic) {
      dea::SyntheticSceneSpec s;
      s.seed = g.seed;
      const dea::SceneGenerator generator(s, cfg.pyramid, cfg.af_ranges);
      std::vector<dea::ScreenScene> generated(st_synthetic);
      dea::parallel_for(st_synthetic, g.threads, [&](std::size_t i) {
        generated[i] = dea::to_screen_scene(generator.generate(i));
      });
      scenes = std::move(generated);
    } else {
      const Inputs& in = *scr ? scr_in : (*st ? st_in : inf_in);
      ann = dea::load_annotation_dir(in.annotation_dir(), g.strict);
      preds = dea::load_prediction_dir(in.prediction_dir(), ann.scenes, cfg.pyramid);
      append(issues, ann.issues);
      append(issues, preds.issues);
      if (!*inf) {
        scenes = dea::screen_scenes(ann.scenes, preds.files, cfg);
      }
    }

    if (*inf) {
      if (!inf_mode.empty()) {
        cfg.inference = inf_mode == "fuse" ? dea::InferenceMode::kFuse : dea::InferenceMode::kFreeze;
      }
      const auto result = dea::run_inference(ann.scenes, preds.files, cfg, g.threads);
      write_text(inf_out, dea::format_detections(result.images));
      std::size_t n = 0;
      for (const auto& img : result.images) {
        n += img.detections.size();
      }
      fmt::print(stderr, "{} detections over {} images, {} IoU evaluations\n", n,
                 result.images.size(), result.ops.iou_evals);
      return report_issues(issues);
    }

    if (*st) {
      if (scenes.empty()) {
        fmt::print(stderr, "warning: empty corpus, writing zero tables\n");
      }
      const auto result = dea::run_iou_study(scenes, cfg, g.threads);
      dea::write_iou_study(result, st_out);
      fmt::print("images {} | positives baseline {} dea {} | IoU>=0.7 baseline {} dea {}\n",
                 result.images, result.baseline_total, result.dea_total, result.baseline_high,
                 result.dea_high);
      return report_issues(issues);
    }

    // screen
    dea::GridCache grids(cfg.pyramid);
    grids.prepare(scenes);
    std::vector<std::string> rows(scenes.size());
    dea::parallel_for(scenes.size(), g.threads, [&](std::size_t i) {
      const auto& s = scenes[i];
      const auto result = dea::screen_scene(s, grids, cfg, !scr_baseline);
      rows[i] = dea::format_assignment(s.image_id, result, grids.boxes(s.image_w, s.image_h),
                                       grids.locators(s.image_w, s.image_h), scr_negatives);
    });
    std::string text = std::string(dea::kAssignmentHeader) + "\n";
    for (const auto& r : rows) {
      text += r;
    }
    write_text(scr_out, text);
    return report_issues(issues);
  } catch (const CLI::ValidationError& e) {
    fmt::print(stderr, "usage error: {}\n", e.what());
    return kExitUsage;
  } catch (const dea::ConfigError& e) {
    fmt::print(stderr, "configuration error: {}\n", e.what());
    return kExitUsage;
  } catch (const dea::DataError& e) {
    fmt::print(stderr, "data error: {}\n", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    fmt::print(stderr, "data error: {}\n", e.what());
    return kExitData;
  }
}
