#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "natflow/composite.hpp"

namespace natflow {

struct Issue {
  Severity severity = Severity::Error;
  std::string code;  // DiagCode or FlowError kind name
  std::string location;
  std::string message;
  std::optional<Span> span;
};

std::string describe(const Issue& issue);

struct ValidationReport {
  std::vector<Issue> issues;
  // (location, regex) for matcher patterns free of functions and variables.
  std::vector<std::pair<std::string, std::string>> regexes;

  std::size_t errors() const;
  std::size_t warnings() const;
  bool ok() const { return errors() == 0; }
  bool has(std::string_view code) const;
};

/// Static checks over every NATEX of a loaded system: unknown functions,
/// unassigned variables (including `$NS.VAR` across modules), and a probe
/// call of each user function whose arguments are literals to catch
/// raising functions and results of the wrong type for their position.
ValidationReport validate_system(const CompositeFlow& system);

/// Loads and validates; load failures become error issues.
ValidationReport validate_file(const std::filesystem::path& path);

/// Prints the report and returns the process exit code (0 iff no errors).
int run_validate(const std::filesystem::path& path, bool emit_regex, std::ostream& out);

}  // namespace natflow
