#include "seal/util.hpp"

#include "seal/error.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

namespace seal {

std::string_view to_string(ErrorCode code) {
  switch (code) {
  case ErrorCode::MalformedDocument: return "MalformedDocument";
  case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
  case ErrorCode::UnresolvableRef: return "UnresolvableRef";
  case ErrorCode::DuplicateOperation: return "DuplicateOperation";
  case ErrorCode::UnknownParent: return "UnknownParent";
  case ErrorCode::LowLevelParent: return "LowLevelParent";
  case ErrorCode::UnknownGoal: return "UnknownGoal";
  case ErrorCode::MissingReason: return "MissingReason";
  case ErrorCode::AlreadyDiscarded: return "AlreadyDiscarded";
  case ErrorCode::TransportFailure: return "TransportFailure";
  case ErrorCode::AuthFailure: return "AuthFailure";
  case ErrorCode::FixtureMiss: return "FixtureMiss";
  case ErrorCode::MalformedFixture: return "MalformedFixture";
  case ErrorCode::DuplicateEntry: return "DuplicateEntry";
  case ErrorCode::InvalidRequest: return "InvalidRequest";
  case ErrorCode::MissingContext: return "MissingContext";
  case ErrorCode::EmptyMappableSet: return "EmptyMappableSet";
  case ErrorCode::NoStructuredBlock: return "NoStructuredBlock";
  case ErrorCode::SchemaViolation: return "SchemaViolation";
  case ErrorCode::UnknownGoalIdInResponse: return "UnknownGoalIdInResponse";
  case ErrorCode::InvalidTemplate: return "InvalidTemplate";
  case ErrorCode::SessionNotReady: return "SessionNotReady";
  case ErrorCode::RoundIncomplete: return "RoundIncomplete";
  case ErrorCode::SuspendedForReview: return "SuspendedForReview";
  case ErrorCode::TaskBudgetExhausted: return "TaskBudgetExhausted";
  case ErrorCode::StageAlreadyDone: return "StageAlreadyDone";
  case ErrorCode::MapNotRun: return "MapNotRun";
  case ErrorCode::IoFailure: return "IoFailure";
  case ErrorCode::NotASession: return "NotASession";
  case ErrorCode::CorruptSession: return "CorruptSession";
  case ErrorCode::UnknownSession: return "UnknownSession";
  case ErrorCode::StageBusy: return "StageBusy";
  case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

std::string canonical_dump(const json &value) {
  // nlohmann::json objects are std::map backed, so keys come out sorted.
  return value.dump(2, ' ', false, json::error_handler_t::replace) + "\n";
}

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  EVP_Digest(data.data(), data.size(), digest.data(), &length, EVP_sha256(), nullptr);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string read_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::IoFailure, "cannot read " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file_atomic(const std::filesystem::path &path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error(ErrorCode::IoFailure, "cannot write " + tmp.string());
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      throw Error(ErrorCode::IoFailure, "short write to " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::IoFailure, "cannot rename into " + path.string());
  }
}

std::string format_utc(std::int64_t epoch_seconds) {
  std::time_t t = static_cast<std::time_t>(epoch_seconds);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json ratio_to_json(const Ratio &r) {
  return json{{"numerator", r.numerator}, {"denominator", r.denominator}, {"value", r.value()}};
}

Ratio ratio_from_json(const json &j) {
  return Ratio{j.at("numerator").get<std::int64_t>(), j.at("denominator").get<std::int64_t>()};
}

} // namespace seal
