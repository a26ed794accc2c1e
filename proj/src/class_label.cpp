#include "slipnet/class_label.hpp"

#include <charconv>

#include "slipnet/error.hpp"

namespace slipnet {

std::string ClassLabel::str() const {
  if (!valid()) return "none";
  return (is_pseudo() ? "U" : "S") + std::to_string(number());
}

ClassLabel ClassLabel::parse(const std::string& text) {
  if (text == "none") return none();
  if (text.size() < 2 || (text[0] != 'S' && text[0] != 'U'))
    throw InvalidArgument("malformed class label '" + text + "'");
  std::int32_t n = 0;
  const char* first = text.data() + 1;
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, n);
  if (ec != std::errc() || ptr != last || n < 0)
    throw InvalidArgument("malformed class label '" + text + "'");
  if (text[0] == 'U') {
    if (n < 1) throw InvalidArgument("pseudo-class labels count from U1");
    return pseudo(n);
  }
  return annotated(n);
}

}  // namespace slipnet
