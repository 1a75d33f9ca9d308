#pragma once

#include <stdexcept>
#include <string>

namespace homeostat {

// Error taxonomy shared by all modules. The CLI maps Config -> exit 2 and
// Integrity -> exit 3; everything else is a programming error surfacing in tests.
enum class ErrorKind {
    Structural,  // dimension/length mismatch between values that must agree
    Config,      // invalid parameter or scenario content
    Lookup,      // unknown id
    Query,       // malformed query (e.g. empty history)
    Range,       // index outside a stated range
    Routing,     // expectation addressed to a nonexistent hvar/subsystem
    Integrity,   // runtime state violated an invariant mid-run
    Io,          // file system trouble
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& msg) {
    throw Error(kind, msg);
}

} // namespace homeostat
