#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>

#include "natflow/composite.hpp"

namespace httplib {
class Server;
}

namespace natflow {

struct Reply {
  int status = 200;
  std::string body;  // JSON
};

/// The chat protocol without the transport. Sessions are isolated; calls
/// for one session are serialized, distinct sessions run in parallel.
/// Session k (counting from 0) is seeded with root_seed + k.
class ChatService {
 public:
  ChatService(std::shared_ptr<const CompositeFlow> system, std::uint64_t root_seed,
              std::shared_ptr<ErrorLog> log = nullptr);

  // POST /api/session
  Reply create_session();
  // POST /api/chat  {"session_id", "text", "turn"?}; a "turn" that is not
  // the session's current turn index is out of turn (409).
  Reply chat(std::string_view body);
  // GET /api/session/{id}
  Reply session_info(const std::string& id);

  const ErrorLog& error_log() const noexcept { return *log_; }

 private:
  struct Entry {
    Entry(std::uint64_t s, Conversation c) : seed(s), conversation(std::move(c)) {}
    std::mutex mutex;
    std::uint64_t seed;
    Conversation conversation;
  };

  std::shared_ptr<Entry> find(const std::string& id);

  std::shared_ptr<const CompositeFlow> system_;
  std::uint64_t root_seed_;
  std::shared_ptr<ErrorLog> log_;
  std::mutex mutex_;
  std::uint64_t created_ = 0;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
};

/// HTTP binding of a ChatService, optionally serving static files at `/`.
class HttpServer {
 public:
  HttpServer(std::shared_ptr<ChatService> service, std::optional<std::filesystem::path> ui_dir = std::nullopt);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Port 0 picks a free port. Returns the bound port, or -1.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  bool listen();
  /// listen() on a background thread; returns once accepting.
  void start();
  void stop();

 private:
  std::shared_ptr<ChatService> service_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace natflow
