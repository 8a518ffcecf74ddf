#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "lmkd/heatmap.hpp"
#include "lmkd/image.hpp"
#include "lmkd/metrics.hpp"

namespace lmkd {

struct BBox {
  double x = 0;
  double y = 0;
  double width = 0;
  double height = 0;
};

struct Sample {
  Image image;
  LandmarkSet landmarks;
  BBox bbox;
};

/// Affine taking the square of side max(w, h) centred on the box onto
/// [0, side]². Throws on a box with zero area.
Affine crop_transform(const BBox& box, std::size_t side);

/// Crops and scales a sample to side×side with bilinear resampling. The
/// result's bbox covers the whole output.
Sample crop_and_scale(const Sample& sample, std::size_t side = 256);

struct AugmentConfig {
  double rotation_degrees = 30;
  double scale_min = 0.75;
  double scale_max = 1.25;
  double hflip_prob = 0.5;
  /// Mirror partner of every landmark index; empty disables flipping.
  std::vector<std::size_t> flip_map;

  /// Throws unless scales are positive and ordered and flip_map is an
  /// involution.
  void validate(std::size_t landmarks) const;
};

struct AugmentDraw {
  double rotation_degrees = 0;
  double scale = 1;
  bool flip = false;
};

AugmentDraw draw_augment(const AugmentConfig& cfg, std::mt19937_64& rng);

/// Scale, then rotate, about the crop centre ((side-1)/2, (side-1)/2), then
/// mirror horizontally when flipping.
Affine augment_transform(const AugmentDraw& draw, std::size_t side);

/// Applies one drawn augmentation to a square side×side sample. On a flip,
/// output landmark i is the transformed input landmark flip_map[i].
Sample apply_augment(const Sample& sample, const AugmentDraw& draw, const std::vector<std::size_t>& flip_map);

Sample augment(const Sample& sample, const AugmentConfig& cfg, std::mt19937_64& rng);

/// Independent random stream for (seed, a, b), e.g. (run seed, epoch, index).
std::mt19937_64 derive_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

struct DatasetMeta {
  std::size_t landmarks = 0;
  NormPair norm_pair{0, 1};
  std::vector<std::size_t> flip_map;
  std::string source;
};

struct ManifestRecord {
  std::string image_path;
  std::vector<double> points;  // x0, y0, x1, y1, ...
  BBox bbox;
};

struct DatasetManifest {
  DatasetMeta meta;
  std::vector<ManifestRecord> records;
  /// Directory relative image paths are resolved against.
  std::string base_dir;

  /// Checks every record against meta.landmarks; the error names the
  /// offending record.
  void validate() const;
};

DatasetManifest load_manifest(const std::string& path);
void save_manifest(const DatasetManifest& manifest, const std::string& path);
/// Reads every record's image and returns the uncropped samples.
std::vector<Sample> load_samples(const DatasetManifest& manifest);

enum class AnnotationFormat { COFW, W300, WFLW };
AnnotationFormat parse_annotation_format(const std::string& name);

/// Metadata template (landmark count, outer-eye pair, mirror map) of a
/// benchmark annotation scheme.
DatasetMeta annotation_template(AnnotationFormat format);

/// Converts a native annotation listing into the manifest schema.
///   wflw: one face per line, 196 coordinates, x_min y_min x_max y_max,
///         six attribute flags, image name.
///   300w: one .pts path per line; the image is the same stem with .png.
///   cofw: image path, 29 x values, 29 y values, optional 29 occlusion
///         flags, optional x y w h box.
DatasetManifest convert_annotations(AnnotationFormat format, const std::string& src);

struct SynthParams {
  std::uint64_t seed = 0;
  std::size_t landmarks = 16;
  std::size_t canvas = 96;
  double shape_variation = 1.0;
  double stroke_width = 1.6;
  double contrast = 0.6;
  double noise = 0.03;
};

struct SynthDataset {
  DatasetMeta meta;
  std::vector<Sample> samples;
};

/// Meta of the synthetic scheme: contour points first (L - 11 of them),
/// then eye, nose and mouth control points.
DatasetMeta synthetic_meta(std::size_t landmarks);

/// Procedural faces (contour ellipse, eye arcs, nose line, mouth curve)
/// whose landmarks are the exact control points of the drawn strokes.
SynthDataset generate_synthetic(const SynthParams& params, std::size_t count);

/// Writes one PNG per sample plus manifest.json into `dir`.
DatasetManifest write_dataset(const SynthDataset& data, const std::string& dir);

}  // namespace lmkd
