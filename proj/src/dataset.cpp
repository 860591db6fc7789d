#include "logodet/dataset.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "logodet/error.hpp"
#include "logodet/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace logodet {

void Dataset::validate() const {
  brand_map.validate();
  std::set<std::string> paths;
  for (const auto& ann : annotations) {
    if (ann.image_path.empty())
      throw ValidationError("annotation with empty image path");
    if (!paths.insert(ann.image_path).second)
      throw ValidationError("duplicate image path '" + ann.image_path + "'");
    if (ann.width <= 0 || ann.height <= 0)
      throw ValidationError("image '" + ann.image_path + "' has non-positive dimensions");
    for (const auto& obj : ann.objects) {
      if (!obj.box.valid())
        throw ValidationError("image '" + ann.image_path + "' has a degenerate box");
      if (!obj.box.inside_image(ann.width, ann.height))
        throw ValidationError("image '" + ann.image_path + "' has a box outside the image");
      if (obj.cls < 1 || obj.cls > brand_map.num_classes())
        throw ValidationError("image '" + ann.image_path + "' references unknown class id " +
                              std::to_string(obj.cls));
    }
  }
}

namespace {

BrandMap load_class_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::pair<std::string, std::string>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size())
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": expected '<class>\\t<brand>'");
    rows.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  if (rows.empty()) throw ParseError(path + ": empty class table");
  try {
    return make_brand_map(rows);
  } catch (const ValidationError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace

Dataset load_dataset(const std::string& root) {
  return load_dataset(root, "annotations.jsonl");
}

Dataset load_dataset(const std::string& root, const std::string& annotations_file) {
  Dataset ds;
  ds.root = root;
  ds.brand_map = load_class_table((fs::path(root) / "classes.tsv").string());

  const std::string ann_path = (fs::path(root) / annotations_file).string();
  std::ifstream in(ann_path);
  if (!in) throw IoError("cannot open " + ann_path);

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = ann_path + ":" + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("image") || !j.contains("width") ||
        !j.contains("height") || !j.contains("objects"))
      throw ParseError(where + ": missing image/width/height/objects");

    Annotation ann;
    try {
      ann.image_path = j.at("image").get<std::string>();
      ann.width = j.at("width").get<int>();
      ann.height = j.at("height").get<int>();
      for (const auto& obj : j.at("objects")) {
        const auto& bb = obj.at("bbox");
        if (!bb.is_array() || bb.size() != 4)
          throw ParseError(where + ": bbox must be [x0,y0,x1,y1]");
        GtObject g;
        g.box = BoundingBox(bb[0].get<double>(), bb[1].get<double>(), bb[2].get<double>(),
                            bb[3].get<double>());
        std::string cls_name = obj.at("cls").get<std::string>();
        auto cls = ds.brand_map.class_id(cls_name);
        if (!cls)
          throw ValidationError("image '" + ann.image_path + "' (" + where +
                                ") references unknown class '" + cls_name + "'");
        g.cls = *cls;
        ann.objects.push_back(g);
      }
    } catch (const json::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
    ds.annotations.push_back(std::move(ann));
  }
  ds.validate();
  return ds;
}

void save_dataset(const Dataset& ds, const std::string& root) {
  save_dataset(ds, root, "annotations.jsonl");
}

void save_dataset(const Dataset& ds, const std::string& root,
                  const std::string& annotations_file) {
  ds.validate();
  fs::create_directories(root);

  {
    std::ofstream out(fs::path(root) / "classes.tsv", std::ios::binary);
    if (!out) throw IoError("cannot write classes.tsv under " + root);
    for (int c = 1; c <= ds.brand_map.num_classes(); ++c) {
      out << ds.brand_map.class_names[static_cast<size_t>(c)] << '\t'
          << ds.brand_map.brand_names[static_cast<size_t>(ds.brand_map.class_to_brand[static_cast<size_t>(c)])]
          << '\n';
    }
  }

  std::ofstream out(fs::path(root) / annotations_file, std::ios::binary);
  if (!out) throw IoError("cannot write " + annotations_file + " under " + root);
  for (const auto& ann : ds.annotations) {
    json objs = json::array();
    for (const auto& obj : ann.objects) {
      objs.push_back({{"bbox", {obj.box.x_min, obj.box.y_min, obj.box.x_max, obj.box.y_max}},
                      {"cls", ds.brand_map.class_names[static_cast<size_t>(obj.cls)]}});
    }
    json j{{"image", ann.image_path}, {"width", ann.width}, {"height", ann.height},
           {"objects", objs}};
    out << j.dump() << '\n';
  }
}

SplitResult split_dataset(const Dataset& ds, const SplitFractions& fr, uint64_t seed) {
  if (fr.train < 0 || fr.val < 0 || fr.test < 0 ||
      std::abs(fr.train + fr.val + fr.test - 1.0) > 1e-9)
    throw InvalidFractions("split fractions must be non-negative and sum to 1");

  const size_t n = ds.annotations.size();
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng = stream_rng(seed, 0x51u);
  shuffle(order, rng);

  size_t n_train = static_cast<size_t>(std::floor(static_cast<double>(n) * fr.train));
  size_t n_val = static_cast<size_t>(std::floor(static_cast<double>(n) * fr.val));

  SplitResult out;
  for (Dataset* part : {&out.train, &out.val, &out.test}) {
    part->brand_map = ds.brand_map;
    part->root = ds.root;
  }
  for (size_t i = 0; i < n; ++i) {
    const Annotation& ann = ds.annotations[order[i]];
    if (i < n_train)
      out.train.annotations.push_back(ann);
    else if (i < n_train + n_val)
      out.val.annotations.push_back(ann);
    else
      out.test.annotations.push_back(ann);
  }
  return out;
}

DatasetStats dataset_stats(const Dataset& ds) {
  DatasetStats st;
  st.per_class_objects.assign(static_cast<size_t>(ds.brand_map.num_classes()) + 1, 0);
  st.per_brand_images.assign(static_cast<size_t>(ds.brand_map.num_brands()), 0);
  st.num_images = static_cast<int>(ds.annotations.size());

  double sum_w = 0.0, sum_h = 0.0;
  for (const auto& ann : ds.annotations) {
    sum_w += ann.width;
    sum_h += ann.height;
    std::set<int> brands_here;
    for (const auto& obj : ann.objects) {
      ++st.num_objects;
      ++st.per_class_objects[static_cast<size_t>(obj.cls)];
      brands_here.insert(ds.brand_map.brand_of(obj.cls));
    }
    for (int b : brands_here) ++st.per_brand_images[static_cast<size_t>(b)];
  }
  if (st.num_images > 0) {
    st.mean_width = sum_w / st.num_images;
    st.mean_height = sum_h / st.num_images;
  }
  return st;
}

std::map<std::string, int> brand_labels(const Dataset& ds) {
  std::map<std::string, int> labels;
  for (const auto& ann : ds.annotations) {
    if (ann.objects.empty()) continue;
    int b = ds.brand_map.brand_of(ann.objects.front().cls);
    for (const auto& obj : ann.objects) {
      if (ds.brand_map.brand_of(obj.cls) != b)
        throw ValidationError("image '" + ann.image_path +
                              "' mixes brands; brand evaluation needs single-brand images");
    }
    labels[ann.image_path] = b;
  }
  return labels;
}

}  // namespace logodet
