#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace csma {

// Every failure raised by the library carries one of these kinds. The CLI
// maps each kind to a distinct process exit code.
enum class ErrorKind {
  parameter,      // invalid argument or configuration value
  io,             // file missing, unreadable or unwritable
  format,         // malformed file contents
  shape,          // matrix or dataset dimensions disagree
  divergence,     // training loss blew up or became non-finite
  numeric,        // a non-finite value was produced
  consistency,    // paired inputs disagree in length or count
  validation,     // a value lies outside its documented domain
  insufficient,   // empty class, single-class labels, too few samples
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace csma
