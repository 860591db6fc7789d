#include "logodet/labels.hpp"

#include <algorithm>
#include <set>

#include "logodet/error.hpp"

namespace logodet {

void BrandMap::validate() const {
  if (class_names.empty() || class_names[0] != "__background__")
    throw ValidationError("brand map: class slot 0 must be __background__");
  if (class_to_brand.size() != class_names.size())
    throw ValidationError("brand map: class_to_brand size does not match class table");
  if (class_to_brand[0] != -1)
    throw ValidationError("brand map: background must be unmapped");
  if (num_classes() < 1) throw ValidationError("brand map: no logo classes");
  if (num_brands() < 1) throw ValidationError("brand map: no brands");

  std::vector<bool> brand_hit(brand_names.size(), false);
  for (int c = 1; c <= num_classes(); ++c) {
    int b = class_to_brand[static_cast<size_t>(c)];
    if (b < 0 || b >= num_brands())
      throw ValidationError("brand map: class '" + class_names[static_cast<size_t>(c)] +
                            "' maps to invalid brand index");
    brand_hit[static_cast<size_t>(b)] = true;
  }
  for (int b = 0; b < num_brands(); ++b)
    if (!brand_hit[static_cast<size_t>(b)])
      throw ValidationError("brand map: brand '" + brand_names[static_cast<size_t>(b)] +
                            "' owns no logo class");

  std::set<std::string> seen(class_names.begin() + 1, class_names.end());
  if (static_cast<int>(seen.size()) != num_classes())
    throw ValidationError("brand map: duplicate class names");
  std::set<std::string> bseen(brand_names.begin(), brand_names.end());
  if (static_cast<int>(bseen.size()) != num_brands())
    throw ValidationError("brand map: duplicate brand names");
}

int BrandMap::brand_of(int cls) const {
  if (cls < 1 || cls > num_classes())
    throw UnknownClass("class id " + std::to_string(cls) + " outside 1.." +
                       std::to_string(num_classes()));
  return class_to_brand[static_cast<size_t>(cls)];
}

std::optional<int> BrandMap::class_id(const std::string& name) const {
  for (size_t i = 1; i < class_names.size(); ++i)
    if (class_names[i] == name) return static_cast<int>(i);
  return std::nullopt;
}

std::optional<int> BrandMap::brand_id(const std::string& name) const {
  for (size_t i = 0; i < brand_names.size(); ++i)
    if (brand_names[i] == name) return static_cast<int>(i);
  return std::nullopt;
}

BrandMap make_brand_map(const std::vector<std::pair<std::string, std::string>>& rows) {
  BrandMap map;
  map.class_names.push_back("__background__");
  map.class_to_brand.push_back(-1);
  for (const auto& [cls_name, brand_name] : rows) {
    map.class_names.push_back(cls_name);
    auto existing = std::find(map.brand_names.begin(), map.brand_names.end(), brand_name);
    int b;
    if (existing == map.brand_names.end()) {
      b = static_cast<int>(map.brand_names.size());
      map.brand_names.push_back(brand_name);
    } else {
      b = static_cast<int>(existing - map.brand_names.begin());
    }
    map.class_to_brand.push_back(b);
  }
  map.validate();
  return map;
}

}  // namespace logodet
