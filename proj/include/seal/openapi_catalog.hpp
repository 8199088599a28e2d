#pragma once

#include "seal/util.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace seal::openapi {

enum class Verb { GET, POST, PUT, DELETE, PATCH, HEAD, OPTIONS };
enum class ParamLocation { path, query, header, body, form };
enum class SpecVersion { swagger2, openapi3 };
enum class Format { json, yaml };

std::string_view to_string(Verb v);
std::string_view to_string(ParamLocation l);
std::string_view to_string(SpecVersion v);
/// Case-insensitive; nullopt when the text is not one of the seven verbs.
std::optional<Verb> parse_verb(std::string_view text);

struct Parameter {
  std::string name;
  ParamLocation location = ParamLocation::query;
  std::string schema_type;
  bool required = false;

  friend bool operator==(const Parameter &, const Parameter &) = default;
};

/// Catalog key. Ordered so it can live in std::set / std::map.
struct EndpointKey {
  Verb verb = Verb::GET;
  std::string path;

  [[nodiscard]] std::string str() const;
  friend auto operator<=>(const EndpointKey &, const EndpointKey &) = default;
};

struct Endpoint {
  std::string path;
  Verb verb = Verb::GET;
  std::optional<std::string> tag;
  std::optional<std::string> summary;
  std::optional<std::string> description;
  std::optional<std::string> operation_id;
  std::vector<std::string> consumes;
  std::vector<std::string> produces;
  std::vector<Parameter> parameters;
  std::map<std::string, std::string> responses; ///< status code -> schema type

  [[nodiscard]] EndpointKey key() const { return {verb, path}; }
  friend bool operator==(const Endpoint &, const Endpoint &) = default;
};

struct EndpointCatalog {
  std::string source_name;
  SpecVersion spec_version = SpecVersion::swagger2;
  std::vector<Endpoint> endpoints; ///< document order

  friend bool operator==(const EndpointCatalog &, const EndpointCatalog &) = default;
};

/// Parses a Swagger 2.0 or OpenAPI 3.0 document (JSON or YAML). Without a
/// hint the format is sniffed from the first non-blank character.
///
/// Throws Error with MalformedDocument, UnsupportedVersion, UnresolvableRef or
/// DuplicateOperation.
EndpointCatalog parse_spec(std::string_view document_text,
                           std::optional<Format> format_hint = std::nullopt,
                           std::string source_name = "inline");

/// Plain-text listing fed to the mapping prompt: one block per endpoint in
/// catalog order, blank line between blocks, absent fields shown as "(none)".
std::string endpoint_digest(const EndpointCatalog &catalog);

/// Exact match on verb and path template.
std::optional<Endpoint> lookup_endpoint(const EndpointCatalog &catalog, Verb verb,
                                        std::string_view path);

/// Names of `{var}` tokens in a path template, in order of appearance.
std::vector<std::string> path_template_variables(std::string_view path);

/// Loads YAML or JSON text into a JSON value (YAML scalars typed by the usual
/// plain-scalar rules, quoted scalars stay strings).
json load_document(std::string_view document_text, std::optional<Format> format_hint);

json to_json(const EndpointCatalog &catalog);
EndpointCatalog catalog_from_json(const json &j);

} // namespace seal::openapi
