#ifndef SPN_ERROR_HPP
#define SPN_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spn {

// Malformed model or dataset text; carries the 1-based source position.
class ParseError : public std::runtime_error {
public:
    ParseError(std::string source, std::size_t line, std::size_t col, const std::string& message)
        : std::runtime_error(source + ":" + std::to_string(line) + ":" + std::to_string(col) +
                             ": " + message),
          source_(std::move(source)), line_(line), col_(col) {}

    const std::string& source() const { return source_; }
    std::size_t line() const { return line_; }
    std::size_t col() const { return col_; }

private:
    std::string source_;
    std::size_t line_;
    std::size_t col_;
};

// A training instance with f_S(x|w) = 0: the log-likelihood is -inf and no
// update rule is defined for it.
class ZeroProbabilityError : public std::runtime_error {
public:
    explicit ZeroProbabilityError(std::size_t instance)
        : std::runtime_error("instance " + std::to_string(instance) +
                             " has zero probability under the current weights"),
          instance_(instance) {}

    std::size_t instance() const { return instance_; }

private:
    std::size_t instance_;
};

}  // namespace spn

#endif
