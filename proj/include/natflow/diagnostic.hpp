#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace natflow {

/// Half-open byte range [begin, end) into a NATEX source string.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  bool contains(const Span& other) const noexcept {
    return begin <= other.begin && other.end <= end;
  }
  friend bool operator==(const Span&, const Span&) = default;
};

enum class Severity { Error, Warning };

enum class DiagCode {
  SyntaxError,
  UnknownFunction,
  UnboundVariable,
  TypeMismatch,
  FunctionFailure,
};

std::string_view to_string(Severity severity) noexcept;
std::string_view to_string(DiagCode code) noexcept;

struct Diagnostic {
  Severity severity = Severity::Error;
  DiagCode code = DiagCode::SyntaxError;
  std::string message;
  Span span;
  // Where the NATEX came from (JSON path, rule id); empty for bare expressions.
  std::string location;
};

Diagnostic make_error(DiagCode code, std::string message, Span span = {});
Diagnostic make_warning(DiagCode code, std::string message, Span span = {});

/// One-line rendering, e.g. `error[UnknownFunction] /hi 1..8: ...`.
std::string describe(const Diagnostic& diagnostic);

/// Raised by the NATEX parser and evaluator. Carries exactly one diagnostic.
class NatexError : public std::runtime_error {
 public:
  explicit NatexError(Diagnostic diagnostic);

  const Diagnostic& diagnostic() const noexcept { return diagnostic_; }
  DiagCode code() const noexcept { return diagnostic_.code; }

  /// Copy of this error with `location` filled in (JSON path, rule id).
  NatexError located(std::string location) const;

 private:
  Diagnostic diagnostic_;
};

/// Structural failures in flow documents, manifests, ontologies and at runtime.
class FlowError : public std::runtime_error {
 public:
  enum class Kind {
    Schema,
    CycleDetected,
    DanglingGoto,
    SpeakerMismatch,
    Natex,
    NoErrorTransition,
    DeadEnd,
    OutOfTurn,
    DuplicateNamespace,
    UnknownState,
  };

  FlowError(Kind kind, std::string path, const std::string& message);
  FlowError(std::string path, const NatexError& cause);

  Kind kind() const noexcept { return kind_; }
  const std::string& path() const noexcept { return path_; }
  // The message without the kind and path prefix of what().
  const std::string& message() const noexcept { return message_; }
  const std::optional<Diagnostic>& natex_diagnostic() const noexcept { return natex_; }

 private:
  Kind kind_;
  std::string path_;
  std::string message_;
  std::optional<Diagnostic> natex_;
};

std::string_view to_string(FlowError::Kind kind) noexcept;

}  // namespace natflow
