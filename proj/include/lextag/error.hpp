#pragma once

#include <functional>
#include <iostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace lextag {

enum class ErrorKind {
    usage,
    data,
    io,
    config,
    parse,
    numeric,
    training,
    invalid_label,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string &what) : std::runtime_error(what), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct UsageError : Error {
    explicit UsageError(const std::string &what) : Error(ErrorKind::usage, what) {}
};
struct DataError : Error {
    explicit DataError(const std::string &what) : Error(ErrorKind::data, what) {}
};
struct IoError : Error {
    explicit IoError(const std::string &what) : Error(ErrorKind::io, what) {}
};
struct ConfigError : Error {
    explicit ConfigError(const std::string &what) : Error(ErrorKind::config, what) {}
};
struct ParseError : Error {
    explicit ParseError(const std::string &what) : Error(ErrorKind::parse, what) {}
};
struct NumericError : Error {
    explicit NumericError(const std::string &what) : Error(ErrorKind::numeric, what) {}
};
struct TrainingError : Error {
    explicit TrainingError(const std::string &what) : Error(ErrorKind::training, what) {}
};
struct InvalidLabelError : Error {
    explicit InvalidLabelError(const std::string &what) : Error(ErrorKind::invalid_label, what) {}
};

/// Process exit code for an error class: usage 1, I/O 3, everything else is a data problem (2).
[[nodiscard]] inline int exit_code(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::usage:
            return 1;
        case ErrorKind::io:
            return 3;
        default:
            return 2;
    }
}

// ---------------------------------------------------------------------------
// Warnings. Library code never writes to std::cerr directly; it reports through
// a replaceable sink so tests and the CLI can capture or redirect diagnostics.

using WarningSink = std::function<void(std::string_view)>;

namespace detail {
inline WarningSink &warning_sink() {
    static WarningSink sink = [](std::string_view msg) { std::cerr << "warning: " << msg << '\n'; };
    return sink;
}
}  // namespace detail

inline void warn(std::string_view msg) {
    if (const auto &sink = detail::warning_sink()) {
        sink(msg);
    }
}

/// Installs `sink` for the lifetime of the guard and restores the previous one afterwards.
class ScopedWarningSink {
public:
    explicit ScopedWarningSink(WarningSink sink) : previous_(std::exchange(detail::warning_sink(), std::move(sink))) {}
    ~ScopedWarningSink() { detail::warning_sink() = std::move(previous_); }
    ScopedWarningSink(const ScopedWarningSink &) = delete;
    ScopedWarningSink &operator=(const ScopedWarningSink &) = delete;

private:
    WarningSink previous_;
};

}  // namespace lextag
