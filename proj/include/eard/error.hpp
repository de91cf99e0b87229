#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace eard {

// Every failure carries a short machine-readable category ("schema",
// "config", "io", "transport", "parse") plus a human-readable message.
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& message)
      : std::runtime_error(message), category_(std::move(category)) {}

  const std::string& category() const { return category_; }

 private:
  std::string category_;
};

}  // namespace eard
