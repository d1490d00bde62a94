#include <unistd.h>

#include <csignal>
#include <iostream>

#include <CLI11.hpp>

#include "natflow/cli.hpp"
#include "natflow/document.hpp"
#include "natflow/server.hpp"
#include "natflow/validate.hpp"

using namespace natflow;

namespace {

// Loads a system, printing validation errors. Null on failure.
std::shared_ptr<const CompositeFlow> load_checked(const std::string& path) {
  const ValidationReport report = validate_file(path);
  if (!report.ok()) {
    for (const Issue& issue : report.issues) std::cerr << describe(issue) << '\n';
    std::cerr << report.errors() << " error(s), " << report.warnings() << " warning(s)\n";
    return nullptr;
  }
  return load_system(path);
}

HttpServer* running = nullptr;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pattern-matching dialogue manager"};
  app.require_subcommand(1);

  std::string flow_path;
  std::uint64_t seed = 0;
  std::string log_file;
  auto* chat = app.add_subcommand("chat", "Converse in the terminal");
  chat->add_option("flow", flow_path, "Flow document or composite manifest")->required()->check(CLI::ExistingFile);
  chat->add_option("--seed", seed, "Random seed");
  chat->add_option("--log", log_file, "Append unmatched inputs here as JSON lines");

  bool emit_regex = false;
  auto* validate = app.add_subcommand("validate", "Check a flow without running it");
  validate->add_option("flow", flow_path, "Flow document or composite manifest")->required()->check(CLI::ExistingFile);
  validate->add_flag("--emit-regex", emit_regex, "Print the regex of each function-free pattern");

  int port = 8080;
  std::string host = "127.0.0.1";
  std::string ui;
  auto* serve = app.add_subcommand("serve", "Run the HTTP chat service");
  serve->add_option("flow", flow_path, "Flow document or composite manifest")->required()->check(CLI::ExistingFile);
  serve->add_option("--port", port, "Port, 0 for any free one");
  serve->add_option("--host", host, "Address to bind");
  serve->add_option("--seed", seed, "Root seed; session k uses seed + k");
  serve->add_option("--ui", ui, "Directory of static files served at /")->check(CLI::ExistingDirectory);
  serve->add_option("--log", log_file, "Append unmatched inputs here as JSON lines");

  CLI11_PARSE(app, argc, argv);

  try {
    auto log = log_file.empty() ? std::make_shared<ErrorLog>() : std::make_shared<ErrorLog>(log_file);

    if (*validate) return run_validate(flow_path, emit_regex, std::cout);

    auto system = load_checked(flow_path);
    if (!system) return 1;

    if (*chat) {
      const bool tty = isatty(STDIN_FILENO) != 0;
      ChatOptions options{seed, !tty, tty};
      return run_chat(system, options, log, std::cin, std::cout, std::cerr);
    }

    auto service = std::make_shared<ChatService>(system, seed, log);
    std::optional<std::filesystem::path> ui_dir;
    if (!ui.empty()) ui_dir = ui;
    HttpServer server(service, ui_dir);
    const int bound = server.bind(host, port);
    if (bound < 0) {
      std::cerr << "cannot bind " << host << ":" << port << '\n';
      return 1;
    }
    std::cout << "listening on http://" << host << ":" << bound << std::endl;
    running = &server;
    std::signal(SIGINT, [](int) {
      if (running) running->stop();
    });
    std::signal(SIGTERM, [](int) {
      if (running) running->stop();
    });
    server.listen();
    return 0;
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return 1;
  }
}
