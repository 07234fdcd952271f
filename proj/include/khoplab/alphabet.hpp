#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace khoplab {

/// Finite ordered symbol set. Code addresses symbols by index; labels exist
/// for configuration files and reports.
class Alphabet {
 public:
  /// One-symbol placeholder; useful as a default member before assignment.
  Alphabet() : symbols_{"0"} {}
  explicit Alphabet(std::vector<std::string> symbols);

  static Alphabet binary();
  /// {prefix0, prefix1, ...,} with `size` symbols.
  static Alphabet indexed(int size, std::string_view prefix = "a");

  int size() const { return static_cast<int>(symbols_.size()); }
  const std::string& label(int i) const { return symbols_[static_cast<std::size_t>(i)]; }
  const std::vector<std::string>& labels() const { return symbols_; }

  bool operator==(const Alphabet& other) const = default;

 private:
  std::vector<std::string> symbols_;
};

}  // namespace khoplab
