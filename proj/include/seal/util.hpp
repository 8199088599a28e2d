#pragma once

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace seal {

using json = nlohmann::json;

/// Canonical JSON text: sorted keys, two-space indent, trailing LF.
std::string canonical_dump(const json &value);

std::string sha256_hex(std::string_view data);

/// Reads a whole file; throws Error(IoFailure).
std::string read_file(const std::filesystem::path &path);

/// Writes via a sibling temp file and rename so readers never observe a
/// partially written file. Throws Error(IoFailure).
void write_file_atomic(const std::filesystem::path &path, std::string_view content);

/// ISO-8601 UTC, second precision.
std::string format_utc(std::int64_t epoch_seconds);

/// Exact ratio kept as integers so 7/12 compares exactly.
struct Ratio {
  std::int64_t numerator = 0;
  std::int64_t denominator = 0;

  /// Zero denominator is defined as coverage 0.
  [[nodiscard]] double value() const {
    return denominator == 0 ? 0.0 : static_cast<double>(numerator) / static_cast<double>(denominator);
  }
  friend bool operator==(const Ratio &, const Ratio &) = default;
};

json ratio_to_json(const Ratio &r);
Ratio ratio_from_json(const json &j);

} // namespace seal
