#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hlda {

// Raised when inputs violate one or more named constraints. Every violation
// is collected; what() joins them with "; ".
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(std::vector<std::string> problems)
        : std::invalid_argument(join(problems)), problems_(std::move(problems)) {}

    const std::vector<std::string>& problems() const noexcept { return problems_; }

private:
    static std::string join(const std::vector<std::string>& items) {
        std::string out;
        for (const auto& s : items) {
            if (!out.empty()) out += "; ";
            out += s;
        }
        return out;
    }

    std::vector<std::string> problems_;
};

// Argument outside the set where a formula is defined (outside an effective
// domain, complex square roots, moment explosion, series range).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// A numerical routine failed where its own guarantees say it cannot.
class InternalError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace hlda
