#pragma once
#include <stdexcept>
#include <string>

namespace minforge {

// Every recoverable failure carries a short machine-readable code (kebab-case)
// so the CLI can map it onto an exit status without string-matching prose.
class forge_error : public std::runtime_error {
public:
    forge_error(std::string code, const std::string& what)
        : std::runtime_error(code + ": " + what), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

[[noreturn]] inline void fail(const std::string& code, const std::string& what) {
    throw forge_error(code, what);
}

inline void require(bool cond, const std::string& code, const std::string& what) {
    if (!cond) fail(code, what);
}

} // namespace minforge
