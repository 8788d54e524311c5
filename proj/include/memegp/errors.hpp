#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace memegp {

/// Raised when a tier-1 operator receives an image smaller than its window.
/// Evolution treats this as an evaluation failure (fitness 0), not a crash.
class ImageTooSmall : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EmptyWindow : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
public:
    ParseError(std::string const& what, std::size_t position)
        : std::runtime_error(what + " at offset " + std::to_string(position))
        , position_(position)
    {
    }

    [[nodiscard]] auto position() const noexcept -> std::size_t { return position_; }

private:
    std::size_t position_;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EmptyClass : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class TooFewItems : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace memegp
