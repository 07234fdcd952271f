#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace khoplab {

/// Runtime failure tagged with the subsystem that raised it. The CLI relays
/// these verbatim so a bad config or an oversized enumeration names its
/// origin.
class Error : public std::runtime_error {
 public:
  Error(std::string subsystem, const std::string& message)
      : std::runtime_error(subsystem + ": " + message),
        subsystem_(std::move(subsystem)) {}

  const std::string& subsystem() const { return subsystem_; }

 private:
  std::string subsystem_;
};

}  // namespace khoplab
