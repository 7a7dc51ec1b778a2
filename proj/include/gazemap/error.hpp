#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace gazemap {

enum class ErrorKind {
  argument,
  degenerate_geometry,
  no_intersection,
  parse,
  schema,
  validation,
  training_diverged,
  ill_conditioned,
  optimization,
  singular_design,
  projection,
  io,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::argument: return "argument";
    case ErrorKind::degenerate_geometry: return "degenerate-geometry";
    case ErrorKind::no_intersection: return "no-intersection";
    case ErrorKind::parse: return "parse";
    case ErrorKind::schema: return "schema";
    case ErrorKind::validation: return "validation";
    case ErrorKind::training_diverged: return "training-diverged";
    case ErrorKind::ill_conditioned: return "ill-conditioned";
    case ErrorKind::optimization: return "optimization";
    case ErrorKind::singular_design: return "singular-design";
    case ErrorKind::projection: return "projection";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

/// Single exception type for the library; `kind()` tells callers what failed.
/// Parse errors additionally carry the 1-based line number of the bad row.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::optional<std::size_t> line = std::nullopt)
      : std::runtime_error(message), kind_(kind), line_(line) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  ErrorKind kind_;
  std::optional<std::size_t> line_;
};

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) throw Error(kind, message);
}

}  // namespace gazemap
