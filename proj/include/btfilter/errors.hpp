#ifndef BTFILTER_ERRORS_HPP
#define BTFILTER_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace btf {

// Exit-code convention: usage 1, data 2, transport 3.
struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct TransportError : std::runtime_error {
  explicit TransportError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace btf

#endif
