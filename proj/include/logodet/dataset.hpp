#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "logodet/box.hpp"
#include "logodet/labels.hpp"

namespace logodet {

// One ground-truth object: a box plus a logo class id (1..C).
struct GtObject {
  BoundingBox box;
  int cls = 0;

  bool operator==(const GtObject& o) const = default;
};

// One image record. `image_path` is relative to the dataset root.
struct Annotation {
  std::string image_path;
  int width = 0;
  int height = 0;
  std::vector<GtObject> objects;

  bool operator==(const Annotation& o) const = default;
};

struct Dataset {
  std::vector<Annotation> annotations;
  BrandMap brand_map;
  std::string root;  // directory the image paths are relative to; not compared

  // Checks every object box lies inside its image, classes are in range,
  // and image paths are unique. Throws ValidationError.
  void validate() const;

  bool operator==(const Dataset& o) const {
    return annotations == o.annotations && brand_map == o.brand_map;
  }
};

// On-disk layout under a root directory:
//   classes.tsv        one "<class name>\t<brand name>" row per logo class
//   annotations.jsonl  one JSON object per line:
//                      {"image": path, "width": w, "height": h,
//                       "objects": [{"bbox":[x0,y0,x1,y1], "cls": name}, ...]}
//   images referenced by relative path (PNG, 8-bit RGB)
// load_dataset validates the result; parse failures carry file and line.
// The two-argument forms address a different annotations file under the same
// root (how train/val/test splits share one image tree).
Dataset load_dataset(const std::string& root);
Dataset load_dataset(const std::string& root, const std::string& annotations_file);
void save_dataset(const Dataset& ds, const std::string& root);
void save_dataset(const Dataset& ds, const std::string& root,
                  const std::string& annotations_file);

struct SplitFractions {
  double train = 0.5;
  double val = 0.2;
  double test = 0.3;
};

struct SplitResult {
  Dataset train;
  Dataset val;
  Dataset test;
};

// Image-level partition: floor(N*f) images for train and val, remainder to
// test. Deterministic given seed. Throws InvalidFractions.
SplitResult split_dataset(const Dataset& ds, const SplitFractions& fractions, uint64_t seed);

struct DatasetStats {
  int num_images = 0;
  int num_objects = 0;
  double mean_width = 0.0;
  double mean_height = 0.0;
  std::vector<int> per_class_objects;  // size C+1, slot 0 unused
  std::vector<int> per_brand_images;   // size B; images containing the brand
};

DatasetStats dataset_stats(const Dataset& ds);

// GT brand label per image for brand evaluation. Every image must contain
// objects of exactly one brand; zero-object images are skipped. Throws
// ValidationError when an image mixes brands.
std::map<std::string, int> brand_labels(const Dataset& ds);

}  // namespace logodet
