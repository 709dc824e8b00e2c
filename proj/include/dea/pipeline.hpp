// SPDX-License-Identifier: Apache-2.0
//
// Corpus-level drivers behind the command-line tool: synthetic corpus
// writing, directory loading, the positive-sample IoU study, inference
// post-processing and evaluation. Work is spread over images with
// parallel_for and merged in image order, so outputs do not depend on the
// thread count.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dea/aerial_io.hpp"
#include "dea/config.hpp"
#include "dea/discriminator.hpp"
#include "dea/eval.hpp"
#include "dea/predictions.hpp"
#include "dea/synthetic.hpp"

namespace dea {

/// Problem attached to one input file; `line` is 0 for whole-file errors.
struct FileIssue {
  std::string file;
  std::size_t line = 0;
  std::string message;
};

/// Category name used in detection files: DOTA names for ids 0..14.
std::string category_name(int class_id);

// ---------------------------------------------------------------- corpora

struct CorpusFiles {
  std::filesystem::path annotations;  // <root>/annotations
  std::filesystem::path predictions;  // <root>/predictions
};

CorpusFiles corpus_layout(const std::filesystem::path& root);

/// Writes `count` scenes as annotation and prediction files under `root`.
/// Returns the number of ground-truth objects written.
std::size_t write_synthetic_corpus(const std::filesystem::path& root,
                                   const SceneGenerator& generator, std::size_t count,
                                   int threads);

struct AnnotationCorpus {
  std::vector<SceneAnnotation> scenes;  // sorted by image id
  std::vector<FileIssue> issues;
};

/// Loads every `*.txt` file of `dir`; the image id is the file stem. Throws
/// DataError when `dir` is not a readable directory.
AnnotationCorpus load_annotation_dir(const std::filesystem::path& dir, bool strict);

struct PredictionCorpus {
  std::vector<std::optional<PredictionFile>> files;  // parallel to the scene list
  std::vector<FileIssue> issues;
};

/// Loads `<dir>/<image_id>.txt` for every scene; missing files are reported.
PredictionCorpus load_prediction_dir(const std::filesystem::path& dir,
                                     std::span<const SceneAnnotation> scenes,
                                     const PyramidConfig& cfg);

// ------------------------------------------------------------- screening

/// One screening unit: a tile-sized image with ground truth and anchor-free vectors.
struct ScreenScene {
  std::string image_id;
  int image_w = 0;
  int image_h = 0;
  std::vector<HBox> gts;
  std::vector<OBox> oriented_gts;  // used by IouMode::kOriented when non-empty
  std::vector<PredVector> af_vectors;
};

ScreenScene to_screen_scene(const SyntheticScene& scene);

/// One unit per prediction tile; annotations are cropped to the tile.
std::vector<ScreenScene> screen_scenes(std::span<const SceneAnnotation> scenes,
                                       std::span<const std::optional<PredictionFile>> predictions,
                                       const RunConfig& cfg);

/// Anchor grids keyed by image size.
class GridCache {
 public:
  explicit GridCache(PyramidConfig base) : base_(std::move(base)) {}

  /// Builds any missing grids; call before concurrent lookups.
  void prepare(std::span<const ScreenScene> scenes);
  const AnchorGrid& get(int image_w, int image_h) const;
  std::span<const HBox> boxes(int image_w, int image_h) const;
  std::span<const AnchorLocator> locators(int image_w, int image_h) const;

 private:
  struct Entry {
    AnchorGrid grid;
    std::vector<HBox> boxes;
    std::vector<AnchorLocator> locators;
  };
  PyramidConfig base_;
  std::map<std::pair<int, int>, Entry> entries_;
};

/// Screens one scene; `with_af` false gives the anchor-only baseline.
AssignmentResult screen_scene(const ScreenScene& scene, const GridCache& grids,
                              const RunConfig& cfg, bool with_af);

struct IouStudyResult {
  std::size_t images = 0;
  std::vector<std::size_t> baseline_counts = std::vector<std::size_t>(kHistogramBins, 0);
  std::vector<std::size_t> dea_counts = std::vector<std::size_t>(kHistogramBins, 0);
  std::size_t baseline_total = 0;
  std::size_t dea_total = 0;
  std::size_t baseline_high = 0;  // positives with IoU >= 0.7
  std::size_t dea_high = 0;
  /// Scenes where the DEA set does not contain the baseline positive set.
  std::size_t containment_violations = 0;

  double per_image(std::size_t count) const;
};

inline constexpr double kHighIou = 0.7;

IouStudyResult run_iou_study(std::span<const ScreenScene> scenes, const RunConfig& cfg,
                                int threads);

/// Writes `iou_histogram.csv` and `iou_summary.csv` into `dir`.
void write_iou_study(const IouStudyResult& result, const std::filesystem::path& dir);

// ------------------------------------------------------------- inference

struct ImageDetections {
  std::string image_id;
  std::vector<Detection> detections;  // image coordinates
};

struct InferenceResult {
  std::vector<ImageDetections> images;
  OpCounter ops;
};

/// Per tile: decode (anchor-based rows, plus anchor-free rows in fuse mode),
/// class-wise NMS with the score threshold, then cross-tile merge.
InferenceResult run_inference(std::span<const SceneAnnotation> scenes,
                              std::span<const std::optional<PredictionFile>> predictions,
                              const RunConfig& cfg, int threads);

std::string format_detections(std::span<const ImageDetections> images);

/// Evaluates parsed detection rows against annotations, horizontally
/// (ground truth envelopes) unless `oriented` is set.
EvalReport evaluate_detections(std::span<const SceneAnnotation> scenes,
                               std::span<const ImageDetection> rows, const RunConfig& cfg,
                               bool oriented, std::vector<std::string>* class_names = nullptr);

std::string format_eval_report(const EvalReport& report, std::span<const std::string> class_names);

}  // namespace dea
