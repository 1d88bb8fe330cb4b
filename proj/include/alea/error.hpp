#pragma once

#include <stdexcept>
#include <string>

namespace alea {

enum class ErrorKind {
  invalid_input,     // precondition violated by the caller
  malformed_stream,  // sample stream inconsistent (mixed key lengths, bad order)
  parse,             // text/JSON input could not be parsed
  overlap,           // block map ranges overlap
  empty_map,         // block map or symbol table has no entries
  source,            // power source could not be opened or read
  attach,            // target could not be spawned, attached or controlled
  io,                // file could not be written
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace alea
