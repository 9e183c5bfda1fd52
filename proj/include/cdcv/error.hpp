#pragma once

#include <stdexcept>
#include <string>

namespace cdcv {

/// Base exception for every failure raised by the toolkit. `code()` is the
/// stable error name (e.g. "UnresolvedModule") used by tests and the CLI.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

/// Error tied to a position in an input file.
class ParseError : public Error {
public:
    ParseError(std::string code, std::string origin, int line, int column, const std::string& message)
        : Error(std::move(code), origin + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + message),
          origin_(std::move(origin)), line_(line), column_(column) {}

    const std::string& origin() const noexcept { return origin_; }
    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    std::string origin_;
    int line_;
    int column_;
};

} // namespace cdcv
