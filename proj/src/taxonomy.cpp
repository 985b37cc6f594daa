#include "orbseg/taxonomy.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "orbseg/config_text.hpp"
#include "orbseg/error.hpp"
#include "orbseg/util.hpp"

namespace orbseg {
namespace {

std::string rgb_text(Rgb8 c) {
  return "(" + std::to_string(c.r) + "," + std::to_string(c.g) + "," + std::to_string(c.b) + ")";
}

// Records carry the config line they came from so validation errors can point
// back at it.
struct SourcedClass {
  ClassDef def;
  int line = 0;
};

ClassTaxonomy validate(std::vector<SourcedClass> items, std::string_view source) {
  const auto ctx = [&](int line) {
    return line > 0 ? std::string(source) + ":" + std::to_string(line) + ": " : std::string(source) + ": ";
  };
  if (items.size() < 2) throw ConfigError(std::string(source) + ": taxonomy needs at least 2 classes");
  if (items.size() > 256) throw ConfigError(std::string(source) + ": taxonomy exceeds 256 classes");

  std::stable_sort(items.begin(), items.end(),
                   [](const SourcedClass& a, const SourcedClass& b) { return a.def.index < b.def.index; });
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].def.index != i) {
      throw ConfigError(ctx(items[i].line) + "non-contiguous indices: expected " + std::to_string(i) +
                        ", found " + std::to_string(items[i].def.index));
    }
  }

  std::map<std::string, int> names;
  std::map<Rgb8, int> colors;
  int backgrounds = 0;
  for (const SourcedClass& item : items) {
    const ClassDef& c = item.def;
    if (c.name.empty()) throw ConfigError(ctx(item.line) + "class " + std::to_string(c.index) + " has an empty name");
    if (auto [it, fresh] = names.emplace(c.name, item.line); !fresh) {
      throw ConfigError(ctx(item.line) + "duplicate class name '" + c.name + "' (first on line " +
                        std::to_string(it->second) + ")");
    }
    if (auto [it, fresh] = colors.emplace(c.display_color, item.line); !fresh) {
      throw ConfigError(ctx(item.line) + "duplicate display color " + rgb_text(c.display_color) +
                        " (first on line " + std::to_string(it->second) + ")");
    }
    if (c.role == RoleHint::background) {
      ++backgrounds;
      if (c.index != 0) throw ConfigError(ctx(item.line) + "background class must have index 0");
    }
  }
  if (backgrounds != 1 || items.front().def.role != RoleHint::background) {
    throw ConfigError(std::string(source) + ": exactly one background class is required, at index 0");
  }

  std::vector<ClassDef> defs;
  defs.reserve(items.size());
  for (SourcedClass& item : items) defs.push_back(std::move(item.def));
  return ClassTaxonomy::create(std::move(defs), source);
}

}  // namespace

std::string_view to_string(RoleHint role) {
  switch (role) {
    case RoleHint::background: return "background";
    case RoleHint::fixate: return "fixate";
    case RoleHint::avoid: return "avoid";
    case RoleHint::neutral: return "neutral";
  }
  return "neutral";
}

RoleHint role_from_string(std::string_view text) {
  if (text == "background") return RoleHint::background;
  if (text == "fixate") return RoleHint::fixate;
  if (text == "avoid") return RoleHint::avoid;
  if (text == "neutral") return RoleHint::neutral;
  throw ConfigError("unknown role hint '" + std::string(text) + "'");
}

ClassTaxonomy ClassTaxonomy::create(std::vector<ClassDef> classes, std::string_view source) {
  const auto fail = [&](const std::string& msg) { throw ConfigError(std::string(source) + ": " + msg); };
  if (classes.size() < 2) fail("taxonomy needs at least 2 classes");
  if (classes.size() > 256) fail("taxonomy exceeds 256 classes");
  std::set<std::string> names;
  std::set<Rgb8> colors;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const ClassDef& c = classes[i];
    if (c.index != i) fail("non-contiguous indices at position " + std::to_string(i));
    if (c.name.empty()) fail("class " + std::to_string(i) + " has an empty name");
    if (!names.insert(c.name).second) fail("duplicate class name '" + c.name + "'");
    if (!colors.insert(c.display_color).second) fail("duplicate display color " + rgb_text(c.display_color));
    if ((c.role == RoleHint::background) != (i == 0)) {
      fail("exactly one background class is required, at index 0");
    }
  }
  return ClassTaxonomy(std::move(classes));
}

ClassIndex ClassTaxonomy::color_to_index(Rgb8 color) const {
  for (const ClassDef& c : classes_) {
    if (c.display_color == color) return c.index;
  }
  throw PreconditionError("unknown color " + rgb_text(color) + " is not in the taxonomy palette");
}

ClassIndex ClassTaxonomy::index_of(std::string_view name) const {
  for (const ClassDef& c : classes_) {
    if (c.name == name) return c.index;
  }
  throw ConfigError("unknown class name '" + std::string(name) + "'");
}

std::string ClassTaxonomy::to_config_text() const {
  std::ostringstream out;
  out << "# class = <index> | <name> | <r> <g> <b> | <role: background|fixate|avoid|neutral>\n";
  for (const ClassDef& c : classes_) {
    out << "class = " << int(c.index) << " | " << c.name << " | " << int(c.display_color.r) << ' '
        << int(c.display_color.g) << ' ' << int(c.display_color.b) << " | " << to_string(c.role) << '\n';
  }
  return out.str();
}

ClassTaxonomy default_taxonomy() {
  // Palette: black background plus ten high-contrast colors. Classes 1-6 are
  // the components named in the reference work; 7-10 are placeholders meant to
  // be renamed from a config file.
  return ClassTaxonomy::create({
      {0, "background", {0, 0, 0}, RoleHint::background},
      {1, "main module", {230, 25, 75}, RoleHint::neutral},
      {2, "solar panel", {60, 180, 75}, RoleHint::neutral},
      {3, "sensor", {255, 225, 25}, RoleHint::avoid},
      {4, "thruster", {0, 130, 200}, RoleHint::avoid},
      {5, "parabolic reflector", {245, 130, 48}, RoleHint::neutral},
      {6, "launch vehicle adapter", {145, 30, 180}, RoleHint::fixate},
      {7, "antenna", {70, 240, 240}, RoleHint::neutral},
      {8, "radiator", {240, 50, 230}, RoleHint::neutral},
      {9, "boom", {210, 245, 60}, RoleHint::neutral},
      {10, "other component", {250, 190, 212}, RoleHint::neutral},
  });
}

ClassTaxonomy parse_taxonomy(std::string_view text, std::string_view source) {
  std::vector<SourcedClass> items;
  for (const ConfigEntry& e : parse_config_text(text, source)) {
    const std::string ctx = std::string(source) + ":" + std::to_string(e.line) + ": ";
    if (e.key != "class") throw ConfigError(ctx + "unknown key '" + e.key + "'");
    const std::vector<std::string> fields = split(e.value, '|');
    if (fields.size() != 4) throw ConfigError(ctx + "expected 'index | name | r g b | role'");

    SourcedClass item;
    item.line = e.line;
    const long long index = parse_int(fields[0], source, e.line);
    if (index < 0 || index > 255) throw ConfigError(ctx + "class index out of range 0..255");
    item.def.index = static_cast<ClassIndex>(index);
    item.def.name = std::string(trim(fields[1]));

    const std::vector<double> rgb = parse_doubles(fields[2], source, e.line);
    if (rgb.size() != 3) throw ConfigError(ctx + "display color needs three integers 0-255");
    std::uint8_t channel[3];
    for (int i = 0; i < 3; ++i) {
      if (rgb[i] < 0 || rgb[i] > 255 || rgb[i] != static_cast<int>(rgb[i])) {
        throw ConfigError(ctx + "display color channels must be integers 0-255");
      }
      channel[i] = static_cast<std::uint8_t>(rgb[i]);
    }
    item.def.display_color = {channel[0], channel[1], channel[2]};
    try {
      item.def.role = role_from_string(trim(fields[3]));
    } catch (const ConfigError& err) {
      throw ConfigError(ctx + err.what());
    }
    items.push_back(std::move(item));
  }
  return validate(std::move(items), source);
}

ClassTaxonomy load_taxonomy(const std::string& path) { return parse_taxonomy(read_text_file(path), path); }

}  // namespace orbseg
