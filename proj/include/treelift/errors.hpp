#ifndef TREELIFT_ERRORS_HPP
#define TREELIFT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace treelift {

// Problems with user-supplied data or files (CLI exit code 2), as opposed
// to usage errors (1) and internal errors (3).
class data_error : public std::runtime_error {
 public:
  explicit data_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace treelift

#endif  // TREELIFT_ERRORS_HPP
