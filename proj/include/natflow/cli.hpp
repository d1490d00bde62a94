#pragma once

#include <cstdint>
#include <istream>
#include <memory>
#include <ostream>

#include "natflow/composite.hpp"

namespace natflow {

struct ChatOptions {
  std::uint64_t seed = 0;
  bool echo_input = true;  // print "U: ..." lines (scripted stdin)
  bool prompt = false;     // print "> " before reading (terminal)
};

/// The terminal conversation: "S: ..." for system turns, `:quit`, `:state`
/// and `:vars` as commands. Returns the process exit code.
int run_chat(std::shared_ptr<const CompositeFlow> system, const ChatOptions& options,
             std::shared_ptr<ErrorLog> log, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace natflow
