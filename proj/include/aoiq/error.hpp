#pragma once

#include <stdexcept>
#include <string>

namespace aoiq {

// Bad distribution or system parameter (nonpositive rate, p outside (0,1], ...).
class InvalidParameter : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Argument outside the domain where a transform is defined.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Steady-state quantity requested for a load at or above the stability limit.
class Unstable : public std::runtime_error {
public:
    explicit Unstable(double rho)
        : std::runtime_error("unstable system: rho = " + std::to_string(rho) + " >= 1"),
          rho_(rho) {}
    double rho() const noexcept { return rho_; }

private:
    double rho_;
};

// Malformed configuration text. line is 1-based; 0 when not tied to a line.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& key, int line, const std::string& what)
        : std::runtime_error(format(key, line, what)), key_(key), line_(line) {}
    const std::string& key() const noexcept { return key_; }
    int line() const noexcept { return line_; }

private:
    static std::string format(const std::string& key, int line, const std::string& what) {
        std::string msg = "parse error";
        if (line > 0) msg += " at line " + std::to_string(line);
        if (!key.empty()) msg += " (key '" + key + "')";
        return msg + ": " + what;
    }
    std::string key_;
    int line_;
};

}  // namespace aoiq
