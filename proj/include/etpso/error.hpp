#pragma once

#include <stdexcept>
#include <string>

namespace etpso {

// Precondition broken by the caller.
class contract_violation : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

// Invalid algorithm, problem, or campaign parameters.
class config_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Malformed input document.
class parse_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Well-formed document whose contents are inconsistent.
class validation_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// The problem's evaluate() failed for a candidate.
class evaluation_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

namespace detail {

  inline void expects(bool condition, char const* message) {
    if (!condition) {
      throw contract_violation{message};
    }
  }

  inline void expects(bool condition, std::string const& message) {
    if (!condition) {
      throw contract_violation{message};
    }
  }

} // namespace detail
} // namespace etpso
