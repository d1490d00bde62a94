#include "natflow/cli.hpp"

#include <string>

namespace natflow {

namespace {

void say(std::ostream& out, const std::string& text) { out << "S: " << text << '\n'; }

}  // namespace

int run_chat(std::shared_ptr<const CompositeFlow> system, const ChatOptions& options,
             std::shared_ptr<ErrorLog> log, std::istream& in, std::ostream& out, std::ostream& err) {
  try {
    Conversation conversation(std::move(system), options.seed, std::move(log));
    say(out, conversation.open().text);
    std::string line;
    while (conversation.awaiting_user()) {
      if (options.prompt) out << "> " << std::flush;
      if (!std::getline(in, line)) break;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line == ":quit") break;
      const Session& s = conversation.session();
      if (line == ":state") {
        out << "state " << s.qualified_state() << " turn " << s.turn << '\n';
        continue;
      }
      if (line == ":vars") {
        for (const auto& [k, v] : s.variables.entries()) out << "$" << k << " = " << v << '\n';
        continue;
      }
      if (options.echo_input) out << "U: " << line << '\n';
      const Exchange ex = conversation.reply(line);
      if (!ex.text.empty() || !conversation.session().ended) say(out, ex.text);
    }
    for (const auto& w : conversation.session().warnings) err << describe(w) << '\n';
  } catch (const std::exception& e) {
    out << std::flush;
    err << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace natflow
