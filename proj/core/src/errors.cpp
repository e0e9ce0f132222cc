#include "slm/errors.hpp"

#include <sstream>

namespace slm {

namespace {

std::string bracket_message(const std::string& what, double lo, double hi) {
  std::ostringstream os;
  os.precision(17);
  os << what << " (last bracket [" << lo << ", " << hi << "])";
  return os.str();
}

std::string monotonicity_message(const std::string& what, int outer, double prev, double cur) {
  std::ostringstream os;
  os.precision(17);
  os << what << " at outer iteration " << outer << ": " << prev << " -> " << cur;
  return os.str();
}

}  // namespace

IterationLimitError::IterationLimitError(const std::string& what, double lo, double hi)
    : Error(bracket_message(what, lo, hi)), lo_(lo), hi_(hi) {}

MonotonicityError::MonotonicityError(const std::string& what, int outer, double previous,
                                     double current)
    : Error(monotonicity_message(what, outer, previous, current)),
      outer_(outer),
      previous_(previous),
      current_(current) {}

}  // namespace slm
