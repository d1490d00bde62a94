#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>

#include "natflow/composite.hpp"

namespace natflow {

/// A flow document may carry, next to its transitions:
///   "rules":     update rules, precondition -> postcondition
///   "functions": NAME -> ["phrase", ...]      phrase set
///                NAME -> "file.json"          phrase set read from a JSON array
///                NAME -> {"text": "..."}      fixed Text
///                NAME -> {"bool": true}       fixed Bool
///                NAME -> {"fail": "message"}  always raises
///   "ontology":  {"parent": ["child", ...]} or a path to an ontology file
/// Relative paths resolve against `base_dir`.
Module load_module(std::string_view document, const std::filesystem::path& base_dir, std::string ns = {},
                   std::string source = {});

/// True for `{"start": ..., "modules": {...}, "cross": [...]}`.
bool is_manifest(std::string_view document);

/// Reads a flow document or a composite manifest. Throws FlowError for
/// anything that prevents building the system.
CompositeFlow load_system_text(std::string_view document, const std::filesystem::path& base_dir,
                               std::string source = {});
std::shared_ptr<const CompositeFlow> load_system(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

}  // namespace natflow
