#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "orbseg/image.hpp"

namespace orbseg {

// Metadata echoing rendezvous intent. Nothing branches on it.
enum class RoleHint { background, fixate, avoid, neutral };

std::string_view to_string(RoleHint role);
RoleHint role_from_string(std::string_view text);  // throws ConfigError

struct ClassDef {
  ClassIndex index = 0;
  std::string name;
  Rgb8 display_color;
  RoleHint role = RoleHint::neutral;

  friend bool operator==(const ClassDef&, const ClassDef&) = default;
};

// Ordered, validated set of class labels. Index 0 is always the background
// class. Immutable once constructed.
class ClassTaxonomy {
 public:
  // Validates the invariants: K >= 2, indices contiguous from 0, exactly one
  // background class at index 0, names nonempty and unique, colors distinct.
  // `source` prefixes error messages.
  static ClassTaxonomy create(std::vector<ClassDef> classes, std::string_view source = "taxonomy");

  std::size_t size() const { return classes_.size(); }
  ClassIndex background_index() const { return 0; }
  const ClassDef& at(ClassIndex k) const { return classes_.at(k); }
  const std::vector<ClassDef>& classes() const { return classes_; }
  Rgb8 display_color(ClassIndex k) const { return classes_.at(k).display_color; }
  bool contains(ClassIndex k) const { return k < classes_.size(); }

  // Exact-match palette lookup. Throws PreconditionError naming the color when
  // it is not in the palette.
  ClassIndex color_to_index(Rgb8 color) const;
  // Index by class name, or throws ConfigError.
  ClassIndex index_of(std::string_view name) const;

  // Serialized form accepted by parse_taxonomy.
  std::string to_config_text() const;

  friend bool operator==(const ClassTaxonomy&, const ClassTaxonomy&) = default;

 private:
  explicit ClassTaxonomy(std::vector<ClassDef> classes) : classes_(std::move(classes)) {}
  std::vector<ClassDef> classes_;
};

// Eleven classes: background plus ten spacecraft components.
ClassTaxonomy default_taxonomy();

ClassTaxonomy parse_taxonomy(std::string_view text, std::string_view source);
ClassTaxonomy load_taxonomy(const std::string& path);

inline ClassIndex color_to_index(const ClassTaxonomy& taxonomy, Rgb8 color) {
  return taxonomy.color_to_index(color);
}

}  // namespace orbseg
