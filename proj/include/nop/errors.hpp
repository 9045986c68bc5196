#pragma once

#include <stdexcept>
#include <string>

namespace nop {

/// Input outside an operation's domain (bad ticks, NaN angle, length mismatch).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

}  // namespace nop
