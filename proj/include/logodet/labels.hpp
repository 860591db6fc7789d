#pragma once

#include <optional>
#include <string>
#include <vector>

namespace logodet {

// Logo class indices: 0 is background, 1..C are real classes.
constexpr int kBackgroundClass = 0;

// Class and brand name tables plus the class -> brand mapping.
// class_names[0] is the background slot and is never mapped to a brand.
// Every brand must own at least one logo class.
struct BrandMap {
  std::vector<std::string> class_names;    // size C+1, [0] == "__background__"
  std::vector<std::string> brand_names;    // size B
  std::vector<int> class_to_brand;         // size C+1, [0] == -1

  int num_classes() const { return static_cast<int>(class_names.size()) - 1; }
  int num_brands() const { return static_cast<int>(brand_names.size()); }

  // Throws ValidationError when tables are inconsistent: wrong sizes, an
  // unmapped class, a brand with no class, or duplicate names.
  void validate() const;

  // Brand of a logo class (1..C). Throws UnknownClass outside that range.
  int brand_of(int cls) const;

  std::optional<int> class_id(const std::string& name) const;
  std::optional<int> brand_id(const std::string& name) const;

  bool operator==(const BrandMap& o) const = default;
};

// Builds a map from parallel (class name, brand name) rows, assigning class
// ids 1..C in row order and brand ids in first-appearance order.
BrandMap make_brand_map(const std::vector<std::pair<std::string, std::string>>& rows);

}  // namespace logodet
