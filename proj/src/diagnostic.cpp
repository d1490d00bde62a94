#include "natflow/diagnostic.hpp"

#include <utility>

namespace natflow {

std::string_view to_string(Severity severity) noexcept {
  return severity == Severity::Error ? "error" : "warning";
}

std::string_view to_string(DiagCode code) noexcept {
  switch (code) {
    case DiagCode::SyntaxError: return "SyntaxError";
    case DiagCode::UnknownFunction: return "UnknownFunction";
    case DiagCode::UnboundVariable: return "UnboundVariable";
    case DiagCode::TypeMismatch: return "TypeMismatch";
    case DiagCode::FunctionFailure: return "FunctionFailure";
  }
  return "Unknown";
}

Diagnostic make_error(DiagCode code, std::string message, Span span) {
  return Diagnostic{Severity::Error, code, std::move(message), span, {}};
}

Diagnostic make_warning(DiagCode code, std::string message, Span span) {
  return Diagnostic{Severity::Warning, code, std::move(message), span, {}};
}

std::string describe(const Diagnostic& d) {
  std::string out;
  out += to_string(d.severity);
  out += '[';
  out += to_string(d.code);
  out += ']';
  if (!d.location.empty()) {
    out += ' ';
    out += d.location;
  }
  out += ' ';
  out += std::to_string(d.span.begin);
  out += "..";
  out += std::to_string(d.span.end);
  out += ": ";
  out += d.message;
  return out;
}

NatexError::NatexError(Diagnostic diagnostic)
    : std::runtime_error(describe(diagnostic)), diagnostic_(std::move(diagnostic)) {}

NatexError NatexError::located(std::string location) const {
  Diagnostic d = diagnostic_;
  d.location = std::move(location);
  return NatexError(std::move(d));
}

std::string_view to_string(FlowError::Kind kind) noexcept {
  using K = FlowError::Kind;
  switch (kind) {
    case K::Schema: return "SchemaError";
    case K::CycleDetected: return "CycleDetected";
    case K::DanglingGoto: return "DanglingGoto";
    case K::SpeakerMismatch: return "SpeakerMismatch";
    case K::Natex: return "NatexError";
    case K::NoErrorTransition: return "NoErrorTransition";
    case K::DeadEnd: return "DeadEnd";
    case K::OutOfTurn: return "OutOfTurn";
    case K::DuplicateNamespace: return "DuplicateNamespace";
    case K::UnknownState: return "UnknownState";
  }
  return "Unknown";
}

namespace {
std::string flow_message(FlowError::Kind kind, const std::string& path, const std::string& message) {
  std::string out(to_string(kind));
  if (!path.empty()) out += " at " + path;
  out += ": " + message;
  return out;
}
}  // namespace

FlowError::FlowError(Kind kind, std::string path, const std::string& message)
    : std::runtime_error(flow_message(kind, path, message)), kind_(kind), path_(std::move(path)), message_(message) {}

FlowError::FlowError(std::string path, const NatexError& cause)
    : std::runtime_error(flow_message(Kind::Natex, path, cause.what())),
      kind_(Kind::Natex),
      path_(std::move(path)),
      message_(cause.diagnostic().message),
      natex_(cause.diagnostic()) {
  natex_->location = path_;
}

}  // namespace natflow
