#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace seal {

/// Every failure the pipeline can report. The enumerator name doubles as the
/// machine-readable code shown on the CLI and in HTTP error bodies.
enum class ErrorCode {
  // openapi_catalog
  MalformedDocument,
  UnsupportedVersion,
  UnresolvableRef,
  DuplicateOperation,
  // goal_model
  UnknownParent,
  LowLevelParent,
  UnknownGoal,
  MissingReason,
  AlreadyDiscarded,
  // llm_provider
  TransportFailure,
  AuthFailure,
  FixtureMiss,
  MalformedFixture,
  DuplicateEntry,
  InvalidRequest,
  // prompt_pipeline
  MissingContext,
  EmptyMappableSet,
  NoStructuredBlock,
  SchemaViolation,
  UnknownGoalIdInResponse,
  InvalidTemplate,
  // agent_loop
  SessionNotReady,
  RoundIncomplete,
  SuspendedForReview,
  TaskBudgetExhausted,
  StageAlreadyDone,
  // alignment
  MapNotRun,
  // session_store
  IoFailure,
  NotASession,
  CorruptSession,
  // http_service
  UnknownSession,
  StageBusy,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string &message, std::vector<std::string> details = {})
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code),
        message_(message), details_(std::move(details)) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }
  [[nodiscard]] const std::string &message() const noexcept { return message_; }
  /// Field-level detail, e.g. schema violations with their JSON location.
  [[nodiscard]] const std::vector<std::string> &details() const noexcept { return details_; }

private:
  ErrorCode code_;
  std::string message_;
  std::vector<std::string> details_;
};

} // namespace seal
