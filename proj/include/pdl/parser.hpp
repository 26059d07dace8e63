#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pdl/ast.hpp"
#include "pdl/diagnostic.hpp"
#include "pdl/yaml.hpp"

namespace pdl {

struct ParseResult {
  std::optional<Program> program;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return program.has_value(); }
};

/// Checks a YAML tree against the meta-schema. `marks` supplies source
/// positions when available.
std::vector<Diagnostic> validate_meta_schema(const Value& document, const YamlDocument* marks = nullptr);

/// YAML text -> validated, desugared Program. Include blocks are left
/// unresolved; see resolve_includes.
ParseResult parse_program(std::string_view source_text);
ParseResult parse_document(const YamlDocument& document);

/// Wraps block lists in body positions (if/for/repeat bodies, function
/// return, defs entries, model input, code source, object fields) in an
/// explicit lastOf block. Idempotent.
Program desugar(const Program& program);

/// Loads, parses and desugars the file named by `include`, relative to
/// `base_dir`, recursively resolving its own includes. `stack` holds the
/// canonical paths of the files being included, for cycle detection.
/// Throws ProgramError.
Program resolve_include(const IncludeBody& include, const std::filesystem::path& base_dir,
                        std::vector<std::filesystem::path>& stack);

/// Fills IncludeBody::resolved throughout `program`.
Program resolve_includes(const Program& program, const std::filesystem::path& base_dir,
                         std::vector<std::filesystem::path>& stack);

/// Reads, parses and resolves includes. Throws Error when the file cannot
/// be read and ProgramError when it is invalid; a failure inside an
/// included file names that file in the message.
Program load_program_file(const std::filesystem::path& file);

/// Canonical block-style YAML for the program.
std::string serialize_program(const Program& program);

}  // namespace pdl
