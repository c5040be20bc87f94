#pragma once

#include <stdexcept>
#include <string>

namespace plf {

// Coarse failure classes; the message carries the specific condition.
enum class Errc {
  invalid_argument,  // bad parameters or misuse of an interface
  io,                // file system failures
  format,            // malformed or truncated on-disk artifacts
  data,              // inputs that are well-formed but unusable
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

}  // namespace plf
