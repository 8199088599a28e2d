#pragma once

#include "seal/agent_loop.hpp"
#include "seal/llm_provider.hpp"
#include "seal/prompt_pipeline.hpp"

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace seal::http {

struct ServiceOptions {
  std::filesystem::path session_root;
  std::optional<std::filesystem::path> ui_dir; ///< static assets served at "/"
  /// Called once per run request; each run gets a fresh provider.
  std::function<std::unique_ptr<llm::Provider>()> provider_factory;
  std::optional<prompts::TemplateSet> templates; ///< builtin when empty
  loop::Clock clock;                             ///< system clock when empty
  loop::Limits limits;
  std::string model_id;
};

/// HTTP status for a module error code.
int status_for(ErrorCode code);

/// JSON API over a directory of sessions, one sub-directory per session id.
class Service {
public:
  explicit Service(ServiceOptions options);
  ~Service();
  Service(const Service &) = delete;
  Service &operator=(const Service &) = delete;

  /// Binds and starts serving on a background thread. Port 0 picks a free
  /// port. Returns the bound port. Throws IoFailure.
  int start(const std::string &host = "127.0.0.1", int port = 0);
  /// Blocks serving on the calling thread until stop().
  void serve(const std::string &host, int port);
  /// Stops the listener and joins outstanding runs.
  void stop();
  /// Waits for every active run to finish.
  void wait_idle();
  [[nodiscard]] bool running(const std::string &session_id) const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

} // namespace seal::http
