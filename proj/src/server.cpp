#include "natflow/server.hpp"

#include <random>

#include <httplib.h>
#include <json.hpp>

namespace natflow {

using json = nlohmann::ordered_json;

namespace {

Reply reply(int status, const json& body) { return {status, body.dump(-1, ' ', false, json::error_handler_t::replace)}; }

Reply failure(int status, std::string_view code, std::string_view message = {}) {
  json body;
  body["error"] = code;
  if (!message.empty()) body["message"] = message;
  return reply(status, body);
}

std::string opaque_id(std::uint64_t counter) {
  static thread_local std::mt19937_64 gen{std::random_device{}()};
  char buf[40];
  std::snprintf(buf, sizeof buf, "%016llx%04llx", static_cast<unsigned long long>(gen()),
                static_cast<unsigned long long>(counter & 0xffff));
  return buf;
}

json variables_json(const Session& s) {
  json vars = json::object();
  for (const auto& [k, v] : s.variables.entries()) vars[k] = v;
  return vars;
}

}  // namespace

ChatService::ChatService(std::shared_ptr<const CompositeFlow> system, std::uint64_t root_seed,
                         std::shared_ptr<ErrorLog> log)
    : system_(std::move(system)), root_seed_(root_seed), log_(log ? std::move(log) : std::make_shared<ErrorLog>()) {}

std::shared_ptr<ChatService::Entry> ChatService::find(const std::string& id) {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

Reply ChatService::create_session() {
  std::uint64_t seed = 0;
  std::string id;
  {
    std::lock_guard lock(mutex_);
    seed = root_seed_ + created_;
    do {
      id = opaque_id(created_);
    } while (sessions_.contains(id));
    ++created_;
  }
  auto entry = std::make_shared<Entry>(seed, Conversation(system_, seed, log_));
  Exchange opening;
  try {
    opening = entry->conversation.open();
  } catch (const std::exception& e) {
    return failure(500, "dialogue_error", e.what());
  }
  {
    std::lock_guard lock(mutex_);
    sessions_.emplace(id, entry);
  }
  const Session& s = entry->conversation.session();
  json body;
  body["session_id"] = id;
  body["text"] = opening.text;
  body["state"] = s.qualified_state();
  body["turn"] = s.turn;
  body["ended"] = s.ended;
  return reply(200, body);
}

Reply ChatService::chat(std::string_view raw) {
  const json request = json::parse(raw, nullptr, false);
  if (request.is_discarded() || !request.is_object()) return failure(400, "bad_request", "body must be a JSON object");
  if (!request.contains("session_id") || !request["session_id"].is_string()) {
    return failure(400, "bad_request", "\"session_id\" must be a string");
  }
  if (!request.contains("text") || !request["text"].is_string()) {
    return failure(400, "bad_request", "\"text\" must be a string");
  }
  if (request.contains("turn") && !request["turn"].is_number_integer()) {
    return failure(400, "bad_request", "\"turn\" must be an integer");
  }
  const std::string id = request["session_id"].get<std::string>();
  auto entry = find(id);
  if (!entry) return failure(404, "unknown_session");

  std::lock_guard lock(entry->mutex);
  Conversation& conversation = entry->conversation;
  const Session& s = conversation.session();
  if (request.contains("turn") && request["turn"].get<std::int64_t>() != s.turn) {
    return failure(409, "out_of_turn", "expected turn " + std::to_string(s.turn));
  }
  if (!conversation.awaiting_user()) {
    return failure(409, "out_of_turn", s.ended ? "the conversation has ended" : "a system turn is pending");
  }
  Exchange result;
  try {
    result = conversation.reply(request["text"].get<std::string>());
  } catch (const std::exception& e) {
    return failure(500, "dialogue_error", e.what());
  }
  json body;
  body["session_id"] = id;
  body["text"] = result.text;
  body["state"] = s.qualified_state();
  body["fired_rules"] = result.fired_rules;
  body["outcome"] = to_string(result.kind);
  body["turn"] = s.turn;
  body["ended"] = s.ended;
  return reply(200, body);
}

Reply ChatService::session_info(const std::string& id) {
  auto entry = find(id);
  if (!entry) return failure(404, "unknown_session");
  std::lock_guard lock(entry->mutex);
  const Session& s = entry->conversation.session();
  json body;
  body["session_id"] = id;
  body["state"] = s.qualified_state();
  body["variables"] = variables_json(s);
  body["turn"] = s.turn;
  body["seed"] = entry->seed;
  body["ended"] = s.ended;
  return reply(200, body);
}

HttpServer::HttpServer(std::shared_ptr<ChatService> service, std::optional<std::filesystem::path> ui_dir)
    : service_(std::move(service)), server_(std::make_unique<httplib::Server>()) {
  auto send = [](httplib::Response& res, const Reply& r) {
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  server_->Post("/api/session", [this, send](const httplib::Request&, httplib::Response& res) {
    send(res, service_->create_session());
  });
  server_->Post("/api/chat", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, service_->chat(req.body));
  });
  server_->Get(R"(/api/session/([^/]+))", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, service_->session_info(req.matches[1]));
  });
  server_->Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("ok", "text/plain");
  });
  if (ui_dir && !server_->set_mount_point("/", ui_dir->string())) {
    throw std::runtime_error("cannot serve static files from " + ui_dir->string());
  }
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return server_->bind_to_any_port(host);
  return server_->bind_to_port(host, port) ? port : -1;
}

bool HttpServer::listen() { return server_->listen_after_bind(); }

void HttpServer::start() {
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void HttpServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace natflow
