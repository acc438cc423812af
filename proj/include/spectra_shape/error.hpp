#pragma once

#include <stdexcept>
#include <string>

namespace spectra_shape {

// Thrown when an input violates an operation's precondition or a numerical
// safeguard trips.  The tag names the subsystem that rejected the request.
class Rejection : public std::runtime_error {
  public:
    Rejection(std::string tag, const std::string& what)
        : std::runtime_error(tag + ": " + what), tag_(std::move(tag)) {}

    const std::string& tag() const noexcept { return tag_; }

  private:
    std::string tag_;
};

[[noreturn]] inline void reject(const std::string& tag, const std::string& what) { throw Rejection(tag, what); }

}  // namespace spectra_shape
