#pragma once

#include <stdexcept>
#include <string>

namespace srload {

//! Invalid configuration or domain value; `where` is a dotted key path.
class ValidationError : public std::runtime_error
{
  public:
    ValidationError(std::string where, const std::string& what)
        : std::runtime_error(where.empty() ? what : where + ": " + what)
        , where_(std::move(where))
    {
    }

    const std::string& where() const noexcept { return where_; }

  private:
    std::string where_;
};

}  // namespace srload
