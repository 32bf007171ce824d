#include "glosskit/class_mapping.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "glosskit/error.hpp"

namespace glosskit {

std::string_view source_name(MappingSource source) noexcept {
  switch (source) {
    case MappingSource::Heuristic: return "heuristic";
    case MappingSource::Override: return "override";
    case MappingSource::Fallback: return "fallback";
  }
  return "heuristic";
}

std::string ClassMapping::resolved_key() const {
  return synset ? *synset : "fallback:" + class_id;
}

std::string normalize_label(std::string_view label) {
  std::string out;
  bool pending_sep = false;
  for (const char raw : label) {
    const auto c = static_cast<unsigned char>(raw);
    if (std::isspace(c) || c == '-' || c == '_') {
      pending_sep = !out.empty();
      continue;
    }
    if (pending_sep) out.push_back('_');
    pending_sep = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  if (out.empty()) throw Error(ErrorCode::EmptyLabel, "label '" + std::string(label) + "'");
  return out;
}

ClassMapping map_class(const SkbGraph& graph, const ClassSpec& spec) {
  ClassMapping m;
  m.class_id = spec.class_id;
  m.label = spec.label;
  if (spec.override_synset) {
    if (!graph.contains(*spec.override_synset)) {
      throw Error(ErrorCode::UnknownOverride, spec.class_id + " -> " + *spec.override_synset);
    }
    m.synset = spec.override_synset;
    m.source = MappingSource::Override;
    return m;
  }
  const auto key = normalize_label(spec.label);
  if (const auto senses = graph.senses(key); !senses.empty()) {
    m.synset = senses.front();
    m.source = MappingSource::Heuristic;
    if (graph.frequency_unreliable()) m.warnings.emplace_back(kWarnFrequencyUnreliable);
    return m;
  }
  if (spec.manual_gloss) {
    m.manual_gloss = spec.manual_gloss;
    m.source = MappingSource::Fallback;
    return m;
  }
  throw Error(ErrorCode::UnresolvedClass, spec.class_id + " (label '" + spec.label + "')");
}

DatasetMapping map_dataset(const SkbGraph& graph, std::span<const ClassSpec> specs) {
  if (specs.empty()) throw Error(ErrorCode::EmptyClassSet, "no classes to map");
  std::set<std::string, std::less<>> ids;
  for (const auto& s : specs) {
    if (!ids.insert(s.class_id).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate class_id " + s.class_id);
    }
  }

  DatasetMapping out;
  auto& report = out.report;
  for (const auto& spec : specs) {
    try {
      auto m = map_class(graph, spec);
      switch (m.source) {
        case MappingSource::Heuristic: ++report.heuristic; break;
        case MappingSource::Override: ++report.override_count; break;
        case MappingSource::Fallback: ++report.fallback; break;
      }
      out.mappings.push_back(std::move(m));
    } catch (const Error& e) {
      report.failures.push_back({spec.class_id, e.what()});
    }
  }

  std::map<std::string, std::vector<std::string>> by_synset;
  for (const auto& m : out.mappings) {
    if (m.synset) by_synset[*m.synset].push_back(m.class_id);
  }
  for (auto& [synset, classes] : by_synset) {
    if (classes.size() < 2) continue;
    for (auto& m : out.mappings) {
      if (m.synset == synset) m.warnings.emplace_back(kWarnSharedSynset);
    }
    report.shared_synsets.emplace(synset, std::move(classes));
  }
  if (graph.frequency_unreliable() && report.heuristic > 0) {
    report.warnings.emplace_back(
        "sense order is derived from data order, not frequency; heuristic mappings may be wrong");
  }
  for (const auto& [synset, classes] : report.shared_synsets) {
    std::string line = "synset " + synset + " shared by";
    for (const auto& c : classes) line += " " + c;
    report.warnings.push_back(std::move(line));
  }
  return out;
}

std::vector<ClassSpec> read_class_specs(std::istream& in) {
  std::vector<ClassSpec> out;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fail = [&](const std::string& why) {
      return Error(ErrorCode::MalformedRecord, "class list line " + std::to_string(line_number) + ": " + why);
    };
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw fail(e.what());
    }
    if (!j.is_object()) throw fail("record is not an object");
    for (const auto& [key, value] : j.items()) {
      if (key != "class_id" && key != "label" && key != "synset" && key != "gloss") {
        throw fail("unknown field '" + key + "'");
      }
      if (!value.is_string()) throw fail("field '" + key + "' must be a string");
    }
    if (!j.contains("class_id") || j["class_id"].get<std::string>().empty()) throw fail("missing class_id");
    ClassSpec spec;
    spec.class_id = j["class_id"].get<std::string>();
    spec.label = j.value("label", std::string());
    if (j.contains("synset")) spec.override_synset = j["synset"].get<std::string>();
    if (j.contains("gloss")) spec.manual_gloss = j["gloss"].get<std::string>();
    out.push_back(std::move(spec));
  }
  return out;
}

void apply_overrides(std::vector<ClassSpec>& specs, std::span<const ClassSpec> overrides) {
  for (const auto& o : overrides) {
    const auto it = std::find_if(specs.begin(), specs.end(),
                                 [&](const ClassSpec& s) { return s.class_id == o.class_id; });
    if (it == specs.end()) throw Error(ErrorCode::UnknownClass, "override for " + o.class_id);
    if (o.override_synset) it->override_synset = o.override_synset;
    if (o.manual_gloss) it->manual_gloss = o.manual_gloss;
    if (!o.label.empty()) it->label = o.label;
  }
}

std::string format_mapping_record(const ClassMapping& m) {
  nlohmann::ordered_json j;
  j["class_id"] = m.class_id;
  j["label"] = m.label;
  j["resolved"] = m.resolved_key();
  j["source"] = source_name(m.source);
  if (m.synset) j["synset"] = *m.synset;
  if (m.manual_gloss) j["gloss"] = *m.manual_gloss;
  j["warnings"] = m.warnings;
  return j.dump();
}

ClassMapping parse_mapping_record(std::string_view line) {
  const auto j = nlohmann::json::parse(line);
  ClassMapping m;
  m.class_id = j.at("class_id").get<std::string>();
  m.label = j.at("label").get<std::string>();
  const auto source = j.at("source").get<std::string>();
  if (source == "heuristic") {
    m.source = MappingSource::Heuristic;
  } else if (source == "override") {
    m.source = MappingSource::Override;
  } else if (source == "fallback") {
    m.source = MappingSource::Fallback;
  } else {
    throw Error(ErrorCode::MalformedRecord, "unknown mapping source " + source);
  }
  if (j.contains("synset")) m.synset = j["synset"].get<std::string>();
  if (j.contains("gloss")) m.manual_gloss = j["gloss"].get<std::string>();
  m.warnings = j.value("warnings", std::vector<std::string>{});
  return m;
}

std::string render_mapping_summary(const MappingReport& r) {
  std::ostringstream out;
  out << "mapped classes: heuristic=" << r.heuristic << " override=" << r.override_count
      << " fallback=" << r.fallback << " failed=" << r.failures.size() << '\n';
  for (const auto& w : r.warnings) out << "warning: " << w << '\n';
  for (const auto& f : r.failures) out << "error: " << f.message << '\n';
  return out.str();
}

}  // namespace glosskit
