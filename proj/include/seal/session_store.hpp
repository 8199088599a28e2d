#pragma once

#include "seal/session.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace seal::store {

struct Event {
  std::int64_t sequence = 0;
  std::string timestamp;
  std::string kind;
  json payload;
};

json to_json(const Event &e);

/// Writes <dir>/{session.json, spec.<fmt>, report.json, report.txt,
/// transcript/NNN.json}. session.json is written last and is the commit
/// point. Report files are written only once the map stage has run.
/// Returns the paths written. Throws IoFailure.
std::vector<std::filesystem::path> save_session(const Session &session, const std::filesystem::path &dir);

/// Throws NotASession or CorruptSession.
Session load_session(const std::filesystem::path &dir);

[[nodiscard]] bool is_session_dir(const std::filesystem::path &dir);

/// Appends one JSON line to <dir>/events.log with the next gap-free sequence
/// number. Throws IoFailure when the session directory does not exist.
std::int64_t append_event(const std::filesystem::path &dir, const std::string &kind, const json &payload);

/// Events with sequence > after, in order.
std::vector<Event> read_events(const std::filesystem::path &dir, std::int64_t after = 0);

/// Advisory exclusive lock on <dir>/.lock held for the object's lifetime.
class SessionLock {
public:
  explicit SessionLock(const std::filesystem::path &dir);
  ~SessionLock();
  SessionLock(const SessionLock &) = delete;
  SessionLock &operator=(const SessionLock &) = delete;

private:
  int fd_ = -1;
};

} // namespace seal::store
