#include "seal/openapi_catalog.hpp"

#include "seal/error.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <regex>
#include <set>
#include <sstream>
#include <unordered_set>

namespace seal::openapi {

using ojson = nlohmann::ordered_json;

namespace {

constexpr std::array<std::pair<std::string_view, Verb>, 7> kVerbKeys{{
    {"get", Verb::GET},
    {"put", Verb::PUT},
    {"post", Verb::POST},
    {"delete", Verb::DELETE},
    {"options", Verb::OPTIONS},
    {"head", Verb::HEAD},
    {"patch", Verb::PATCH},
}};

std::optional<Verb> verb_from_key(std::string_view key) {
  for (const auto &[name, verb] : kVerbKeys) {
    if (name == key) {
      return verb;
    }
  }
  return std::nullopt;
}

[[noreturn]] void malformed(const std::string &message) {
  throw Error(ErrorCode::MalformedDocument, message);
}

// ---------------------------------------------------------------------------
// Loading

ojson yaml_scalar(const YAML::Node &node) {
  const std::string &text = node.Scalar();
  if (node.Tag() == "!") {
    return text; // quoted
  }
  static const std::regex kInt(R"([-+]?[0-9]+)");
  static const std::regex kFloat(R"([-+]?(\.[0-9]+|[0-9]+(\.[0-9]*)?)([eE][-+]?[0-9]+)?)");
  if (text.empty() || text == "~" || text == "null" || text == "Null" || text == "NULL") {
    return nullptr;
  }
  if (text == "true" || text == "True" || text == "TRUE") {
    return true;
  }
  if (text == "false" || text == "False" || text == "FALSE") {
    return false;
  }
  if (std::regex_match(text, kInt)) {
    try {
      return std::stoll(text);
    } catch (const std::out_of_range &) {
      return text;
    }
  }
  if (std::regex_match(text, kFloat)) {
    return std::stod(text);
  }
  return text;
}

bool under_paths_operation_level(const std::vector<std::string> &trail, const std::string &key) {
  // trail holds the keys leading to the current mapping.
  if (trail.size() == 1 && trail[0] == "paths") {
    return true; // duplicate path template
  }
  return trail.size() == 2 && trail[0] == "paths" && verb_from_key(key).has_value();
}

ojson yaml_to_json(const YAML::Node &node, std::vector<std::string> &trail) {
  switch (node.Type()) {
  case YAML::NodeType::Null:
  case YAML::NodeType::Undefined:
    return nullptr;
  case YAML::NodeType::Scalar:
    return yaml_scalar(node);
  case YAML::NodeType::Sequence: {
    ojson out = ojson::array();
    for (const auto &item : node) {
      trail.emplace_back("[]");
      out.push_back(yaml_to_json(item, trail));
      trail.pop_back();
    }
    return out;
  }
  case YAML::NodeType::Map: {
    ojson out = ojson::object();
    for (const auto &kv : node) {
      const std::string key = kv.first.Scalar();
      if (out.contains(key)) {
        if (under_paths_operation_level(trail, key)) {
          throw Error(ErrorCode::DuplicateOperation, "duplicate key '" + key + "' under paths");
        }
      }
      trail.push_back(key);
      out[key] = yaml_to_json(kv.second, trail);
      trail.pop_back();
    }
    return out;
  }
  }
  return nullptr;
}

ojson parse_json_checked(std::string_view text) {
  // Track keys per open object so duplicate paths / verbs are caught before
  // the parser silently keeps the last one.
  std::vector<std::set<std::string>> seen;
  std::vector<std::string> trail; // key leading into each open container
  std::string pending_key;
  auto callback = [&](int /*depth*/, ojson::parse_event_t event, ojson &parsed) {
    switch (event) {
    case ojson::parse_event_t::object_start:
    case ojson::parse_event_t::array_start:
      if (!seen.empty()) {
        trail.push_back(pending_key);
      }
      seen.emplace_back();
      pending_key = "[]";
      break;
    case ojson::parse_event_t::object_end:
    case ojson::parse_event_t::array_end:
      seen.pop_back();
      if (!trail.empty()) {
        trail.pop_back();
      }
      pending_key = "[]";
      break;
    case ojson::parse_event_t::key: {
      const auto key = parsed.get<std::string>();
      if (!seen.back().insert(key).second && under_paths_operation_level(trail, key)) {
        throw Error(ErrorCode::DuplicateOperation, "duplicate key '" + key + "' under paths");
      }
      pending_key = key;
      break;
    }
    case ojson::parse_event_t::value:
      break;
    }
    return true;
  };
  try {
    return ojson::parse(text.begin(), text.end(), callback);
  } catch (const ojson::parse_error &e) {
    malformed(std::string("invalid JSON: ") + e.what());
  }
}

ojson load_ordered(std::string_view text, std::optional<Format> hint) {
  Format format;
  if (hint) {
    format = *hint;
  } else {
    auto first = std::find_if_not(text.begin(), text.end(),
                                  [](unsigned char c) { return std::isspace(c) != 0; });
    format = (first != text.end() && (*first == '{' || *first == '[')) ? Format::json : Format::yaml;
  }
  if (format == Format::json) {
    return parse_json_checked(text);
  }
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::Exception &e) {
    malformed(std::string("invalid YAML: ") + e.what());
  }
  std::vector<std::string> trail;
  return yaml_to_json(root, trail);
}

// ---------------------------------------------------------------------------
// References

void check_all_refs(const ojson &root, const ojson &node);

const ojson &resolve_pointer(const ojson &root, const std::string &ref) {
  if (ref.empty() || ref[0] != '#') {
    throw Error(ErrorCode::UnresolvableRef, "external reference not supported: " + ref);
  }
  const std::string pointer = ref.substr(1);
  if (pointer.empty()) {
    return root;
  }
  try {
    return root.at(ojson::json_pointer(pointer));
  } catch (const ojson::exception &) {
    throw Error(ErrorCode::UnresolvableRef, "reference target not found: " + ref);
  }
}

/// Follows $ref chains until a concrete object.
const ojson &deref(const ojson &root, const ojson &node) {
  const ojson *current = &node;
  for (int hops = 0; current->is_object() && current->contains("$ref"); ++hops) {
    if (hops > 32) {
      throw Error(ErrorCode::UnresolvableRef, "reference cycle");
    }
    const auto &ref = (*current)["$ref"];
    if (!ref.is_string()) {
      malformed("$ref must be a string");
    }
    current = &resolve_pointer(root, ref.get<std::string>());
  }
  return *current;
}

void check_all_refs(const ojson &root, const ojson &node) {
  if (node.is_object()) {
    for (const auto &[key, value] : node.items()) {
      if (key == "$ref" && value.is_string()) {
        resolve_pointer(root, value.get<std::string>());
      } else {
        check_all_refs(root, value);
      }
    }
  } else if (node.is_array()) {
    for (const auto &item : node) {
      check_all_refs(root, item);
    }
  }
}

std::string ref_name(const std::string &ref) {
  auto slash = ref.find_last_of('/');
  return slash == std::string::npos ? ref : ref.substr(slash + 1);
}

std::string schema_type_name(const ojson &schema) {
  if (!schema.is_object()) {
    return "any";
  }
  if (auto it = schema.find("$ref"); it != schema.end() && it->is_string()) {
    return ref_name(it->get<std::string>());
  }
  auto type = schema.find("type");
  if (type != schema.end() && type->is_string()) {
    const auto name = type->get<std::string>();
    if (name == "array") {
      return "array<" + schema_type_name(schema.value("items", ojson::object())) + ">";
    }
    return name;
  }
  if (schema.contains("properties") || schema.contains("allOf") || schema.contains("oneOf") ||
      schema.contains("anyOf")) {
    return "object";
  }
  return "any";
}

std::optional<std::string> optional_string(const ojson &obj, const char *key) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    return std::nullopt;
  }
  return it->get<std::string>();
}

std::vector<std::string> string_list(const ojson &value) {
  std::vector<std::string> out;
  if (value.is_array()) {
    for (const auto &item : value) {
      if (item.is_string()) {
        out.push_back(item.get<std::string>());
      }
    }
  }
  return out;
}

void push_unique(std::vector<std::string> &list, const std::string &item) {
  if (std::find(list.begin(), list.end(), item) == list.end()) {
    list.push_back(item);
  }
}

ParamLocation location_from(const std::string &in, const std::string &where) {
  if (in == "path") return ParamLocation::path;
  if (in == "query") return ParamLocation::query;
  if (in == "header") return ParamLocation::header;
  // Cookies travel in a header; the catalog has no separate slot for them.
  if (in == "cookie") return ParamLocation::header;
  if (in == "body") return ParamLocation::body;
  if (in == "formData") return ParamLocation::form;
  malformed("unknown parameter location '" + in + "' at " + where);
}

Parameter parse_parameter(const ojson &root, const ojson &raw, SpecVersion version,
                          const std::string &where) {
  const ojson &p = deref(root, raw);
  if (!p.is_object()) {
    malformed("parameter is not an object at " + where);
  }
  Parameter param;
  param.name = p.value("name", std::string{});
  if (param.name.empty()) {
    malformed("parameter without name at " + where);
  }
  param.location = location_from(p.value("in", std::string{}), where);
  param.required = p.value("required", false);
  if (param.location == ParamLocation::path) {
    param.required = true;
  }
  if (p.contains("schema")) {
    param.schema_type = schema_type_name(p["schema"]);
  } else if (version == SpecVersion::swagger2 && p.contains("type")) {
    param.schema_type = schema_type_name(p);
  } else {
    param.schema_type = "any";
  }
  return param;
}

void merge_parameters(const ojson &root, const ojson &list, SpecVersion version,
                      const std::string &where, std::vector<Parameter> &out) {
  if (list.is_null()) {
    return;
  }
  if (!list.is_array()) {
    malformed("parameters must be an array at " + where);
  }
  for (const auto &raw : list) {
    auto param = parse_parameter(root, raw, version, where);
    auto same = std::find_if(out.begin(), out.end(), [&](const Parameter &existing) {
      return existing.name == param.name && existing.location == param.location;
    });
    if (same != out.end()) {
      *same = std::move(param);
    } else {
      out.push_back(std::move(param));
    }
  }
}

std::string first_content_schema(const ojson &root, const ojson &content) {
  if (!content.is_object() || content.empty()) {
    return "none";
  }
  const auto &media = deref(root, content.begin().value());
  return media.contains("schema") ? schema_type_name(media["schema"]) : "any";
}

Endpoint parse_operation(const ojson &root, SpecVersion version, const std::string &path, Verb verb,
                         const ojson &path_item, const ojson &op_raw) {
  const std::string where = std::string(to_string(verb)) + " " + path;
  const ojson &op = deref(root, op_raw);
  if (!op.is_object()) {
    malformed("operation is not an object at " + where);
  }
  Endpoint ep;
  ep.path = path;
  ep.verb = verb;
  if (auto tags = op.find("tags"); tags != op.end() && tags->is_array() && !tags->empty() &&
                                   (*tags)[0].is_string()) {
    ep.tag = (*tags)[0].get<std::string>();
  }
  ep.summary = optional_string(op, "summary");
  ep.description = optional_string(op, "description");
  ep.operation_id = optional_string(op, "operationId");

  merge_parameters(root, path_item.value("parameters", ojson()), version, where, ep.parameters);
  merge_parameters(root, op.value("parameters", ojson()), version, where, ep.parameters);

  const ojson &responses = op.value("responses", ojson::object());
  if (version == SpecVersion::swagger2) {
    ep.consumes = string_list(op.contains("consumes") ? op["consumes"] : root.value("consumes", ojson()));
    ep.produces = string_list(op.contains("produces") ? op["produces"] : root.value("produces", ojson()));
    if (responses.is_object()) {
      for (const auto &[code, raw] : responses.items()) {
        const auto &r = deref(root, raw);
        ep.responses[code] = r.is_object() && r.contains("schema") ? schema_type_name(r["schema"]) : "none";
      }
    }
  } else {
    if (auto body = op.find("requestBody"); body != op.end()) {
      const auto &rb = deref(root, *body);
      const auto &content = rb.value("content", ojson::object());
      for (const auto &[media, _] : content.items()) {
        push_unique(ep.consumes, media);
      }
      ep.parameters.push_back(Parameter{"body", ParamLocation::body,
                                        first_content_schema(root, content),
                                        rb.value("required", false)});
    }
    if (responses.is_object()) {
      for (const auto &[code, raw] : responses.items()) {
        const auto &r = deref(root, raw);
        const auto &content = r.is_object() ? r.value("content", ojson::object()) : ojson::object();
        for (const auto &[media, _] : content.items()) {
          push_unique(ep.produces, media);
        }
        ep.responses[code] = first_content_schema(root, content);
      }
    }
  }

  // Path-parameter closure.
  const auto vars = path_template_variables(path);
  std::set<std::string> var_set(vars.begin(), vars.end());
  std::set<std::string> path_params;
  for (const auto &p : ep.parameters) {
    if (p.location == ParamLocation::path) {
      path_params.insert(p.name);
    }
  }
  for (const auto &v : var_set) {
    if (!path_params.contains(v)) {
      malformed("path variable {" + v + "} has no path parameter at " + where);
    }
  }
  for (const auto &p : path_params) {
    if (!var_set.contains(p)) {
      malformed("path parameter '" + p + "' does not occur in the template at " + where);
    }
  }
  return ep;
}

SpecVersion detect_version(const ojson &doc) {
  if (auto s = doc.find("swagger"); s != doc.end()) {
    if ((s->is_string() && s->get<std::string>() == "2.0") || (s->is_number() && s->get<double>() == 2.0)) {
      return SpecVersion::swagger2;
    }
    throw Error(ErrorCode::UnsupportedVersion, "swagger version " + s->dump());
  }
  if (auto o = doc.find("openapi"); o != doc.end()) {
    if (o->is_string()) {
      const auto v = o->get<std::string>();
      if (v == "3.0" || v.rfind("3.0.", 0) == 0) {
        return SpecVersion::openapi3;
      }
    } else if (o->is_number() && o->get<double>() == 3.0) {
      return SpecVersion::openapi3;
    }
    throw Error(ErrorCode::UnsupportedVersion, "openapi version " + o->dump());
  }
  throw Error(ErrorCode::UnsupportedVersion, "document declares neither 'swagger' nor 'openapi'");
}

std::string collapse_ws(const std::string &text) {
  std::string out;
  bool space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = true;
    } else {
      if (space && !out.empty()) {
        out.push_back(' ');
      }
      space = false;
      out.push_back(c);
    }
  }
  return out;
}

std::string field_or_none(const std::optional<std::string> &value) {
  if (!value) {
    return "(none)";
  }
  auto collapsed = collapse_ws(*value);
  return collapsed.empty() ? "(none)" : collapsed;
}

std::string join(const std::vector<std::string> &items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

} // namespace

std::string_view to_string(Verb v) {
  switch (v) {
  case Verb::GET: return "GET";
  case Verb::POST: return "POST";
  case Verb::PUT: return "PUT";
  case Verb::DELETE: return "DELETE";
  case Verb::PATCH: return "PATCH";
  case Verb::HEAD: return "HEAD";
  case Verb::OPTIONS: return "OPTIONS";
  }
  return "GET";
}

std::string_view to_string(ParamLocation l) {
  switch (l) {
  case ParamLocation::path: return "path";
  case ParamLocation::query: return "query";
  case ParamLocation::header: return "header";
  case ParamLocation::body: return "body";
  case ParamLocation::form: return "form";
  }
  return "query";
}

std::string_view to_string(SpecVersion v) {
  return v == SpecVersion::swagger2 ? "swagger2" : "openapi3";
}

std::optional<Verb> parse_verb(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return verb_from_key(lower);
}

std::string EndpointKey::str() const { return std::string(to_string(verb)) + " " + path; }

std::vector<std::string> path_template_variables(std::string_view path) {
  std::vector<std::string> vars;
  std::size_t pos = 0;
  while ((pos = path.find('{', pos)) != std::string_view::npos) {
    auto close = path.find('}', pos);
    if (close == std::string_view::npos) {
      break;
    }
    vars.emplace_back(path.substr(pos + 1, close - pos - 1));
    pos = close + 1;
  }
  return vars;
}

json load_document(std::string_view document_text, std::optional<Format> format_hint) {
  return json::parse(load_ordered(document_text, format_hint).dump());
}

EndpointCatalog parse_spec(std::string_view document_text, std::optional<Format> format_hint,
                           std::string source_name) {
  const ojson doc = load_ordered(document_text, format_hint);
  if (!doc.is_object()) {
    malformed("document root is not an object");
  }
  EndpointCatalog catalog;
  catalog.source_name = std::move(source_name);
  catalog.spec_version = detect_version(doc);
  check_all_refs(doc, doc);

  auto paths = doc.find("paths");
  if (paths == doc.end() || !paths->is_object()) {
    malformed("missing 'paths' object");
  }
  std::set<EndpointKey> keys;
  std::map<std::string, std::string> operation_ids;
  for (const auto &[path, raw_item] : paths->items()) {
    if (path.empty() || path[0] != '/') {
      malformed("path '" + path + "' does not begin with '/'");
    }
    const ojson &item = deref(doc, raw_item);
    if (!item.is_object()) {
      malformed("path item for '" + path + "' is not an object");
    }
    for (const auto &[key, op] : item.items()) {
      auto verb = verb_from_key(key);
      if (!verb) {
        continue; // parameters, summary, servers, x-* ...
      }
      auto ep = parse_operation(doc, catalog.spec_version, path, *verb, item, op);
      if (!keys.insert(ep.key()).second) {
        throw Error(ErrorCode::DuplicateOperation, "repeated operation " + ep.key().str());
      }
      if (ep.operation_id) {
        auto [it, inserted] = operation_ids.emplace(*ep.operation_id, ep.key().str());
        if (!inserted) {
          throw Error(ErrorCode::DuplicateOperation, "operationId '" + *ep.operation_id +
                                                         "' used by " + it->second + " and " +
                                                         ep.key().str());
        }
      }
      catalog.endpoints.push_back(std::move(ep));
    }
  }
  return catalog;
}

std::string endpoint_digest(const EndpointCatalog &catalog) {
  std::ostringstream out;
  bool first = true;
  for (const auto &ep : catalog.endpoints) {
    if (!first) {
      out << '\n';
    }
    first = false;
    out << to_string(ep.verb) << ' ' << ep.path << '\n';
    out << "  tag: " << field_or_none(ep.tag) << '\n';
    out << "  summary: " << field_or_none(ep.summary) << '\n';
    out << "  description: " << field_or_none(ep.description) << '\n';
    out << "  operationId: " << field_or_none(ep.operation_id) << '\n';
    out << "  consumes: " << (ep.consumes.empty() ? "(none)" : join(ep.consumes, ", ")) << '\n';
    out << "  produces: " << (ep.produces.empty() ? "(none)" : join(ep.produces, ", ")) << '\n';
    std::vector<std::string> params;
    for (const auto &p : ep.parameters) {
      params.push_back(p.name + " (" + std::string(to_string(p.location)) + ", " + p.schema_type +
                       ", " + (p.required ? "required" : "optional") + ")");
    }
    out << "  parameters: " << (params.empty() ? "(none)" : join(params, "; ")) << '\n';
  }
  return out.str();
}

std::optional<Endpoint> lookup_endpoint(const EndpointCatalog &catalog, Verb verb,
                                        std::string_view path) {
  for (const auto &ep : catalog.endpoints) {
    if (ep.verb == verb && ep.path == path) {
      return ep;
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Serialization (session file)

json to_json(const EndpointCatalog &catalog) {
  json endpoints = json::array();
  for (const auto &ep : catalog.endpoints) {
    json params = json::array();
    for (const auto &p : ep.parameters) {
      params.push_back({{"name", p.name},
                        {"location", to_string(p.location)},
                        {"schema_type", p.schema_type},
                        {"required", p.required}});
    }
    json e{{"path", ep.path},
           {"verb", to_string(ep.verb)},
           {"consumes", ep.consumes},
           {"produces", ep.produces},
           {"parameters", params},
           {"responses", ep.responses}};
    auto put = [&](const char *key, const std::optional<std::string> &v) {
      e[key] = v ? json(*v) : json(nullptr);
    };
    put("tag", ep.tag);
    put("summary", ep.summary);
    put("description", ep.description);
    put("operation_id", ep.operation_id);
    endpoints.push_back(std::move(e));
  }
  return json{{"source_name", catalog.source_name},
              {"spec_version", to_string(catalog.spec_version)},
              {"endpoints", endpoints}};
}

EndpointCatalog catalog_from_json(const json &j) {
  EndpointCatalog catalog;
  catalog.source_name = j.at("source_name").get<std::string>();
  catalog.spec_version =
      j.at("spec_version").get<std::string>() == "swagger2" ? SpecVersion::swagger2 : SpecVersion::openapi3;
  for (const auto &e : j.at("endpoints")) {
    Endpoint ep;
    ep.path = e.at("path").get<std::string>();
    auto verb = parse_verb(e.at("verb").get<std::string>());
    if (!verb) {
      throw Error(ErrorCode::CorruptSession, "bad verb in stored catalog");
    }
    ep.verb = *verb;
    auto get = [&](const char *key) -> std::optional<std::string> {
      return e.contains(key) && e[key].is_string() ? std::optional(e[key].get<std::string>()) : std::nullopt;
    };
    ep.tag = get("tag");
    ep.summary = get("summary");
    ep.description = get("description");
    ep.operation_id = get("operation_id");
    ep.consumes = e.at("consumes").get<std::vector<std::string>>();
    ep.produces = e.at("produces").get<std::vector<std::string>>();
    ep.responses = e.at("responses").get<std::map<std::string, std::string>>();
    for (const auto &p : e.at("parameters")) {
      const auto loc = p.at("location").get<std::string>();
      ParamLocation location = ParamLocation::query;
      for (auto l : {ParamLocation::path, ParamLocation::query, ParamLocation::header,
                     ParamLocation::body, ParamLocation::form}) {
        if (to_string(l) == loc) location = l;
      }
      ep.parameters.push_back(Parameter{p.at("name").get<std::string>(), location,
                                        p.at("schema_type").get<std::string>(),
                                        p.at("required").get<bool>()});
    }
    catalog.endpoints.push_back(std::move(ep));
  }
  return catalog;
}

} // namespace seal::openapi
