// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace samosa {

/// Base class for every typed error thrown by the toolkit.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// --- configuration / document errors -------------------------------------

class SyntaxError : public Error {
public:
    using Error::Error;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

// --- generic host errors ---------------------------------------------------

class IoError : public Error {
public:
    using Error::Error;
};

class ExecTimeout : public Error {
public:
    using Error::Error;
};

class SpawnError : public Error {
public:
    using Error::Error;
};

// --- network emulator ------------------------------------------------------

class BindError : public Error {
public:
    BindError(std::uint16_t port, const std::string& msg)
        : Error(msg), port_(port) {}
    std::uint16_t port() const { return port_; }

private:
    std::uint16_t port_;
};

class MalformedQuery : public Error {
public:
    using Error::Error;
};

class MalformedRequest : public Error {
public:
    using Error::Error;
};

// --- VM driver ---------------------------------------------------------------

class MissingBaseImage : public Error {
public:
    using Error::Error;
};

class BootTimeout : public Error {
public:
    using Error::Error;
};

class TransferError : public Error {
public:
    using Error::Error;
};

class GuestPathError : public Error {
public:
    using Error::Error;
};

class SshError : public Error {
public:
    using Error::Error;
};

class GuestToolMissing : public Error {
public:
    using Error::Error;
};

class UnsupportedArch : public Error {
public:
    using Error::Error;
};

// --- collectors --------------------------------------------------------------

class BadMagic : public Error {
public:
    using Error::Error;
};

class TruncatedFile : public Error {
public:
    using Error::Error;
};

// --- pipeline ----------------------------------------------------------------

class HookFailed : public Error {
public:
    using Error::Error;
};

// --- analysis ----------------------------------------------------------------

class MissingArtifact : public Error {
public:
    MissingArtifact(std::vector<std::string> missing, const std::string& msg)
        : Error(msg), missing_(std::move(missing)) {}
    const std::vector<std::string>& missing() const { return missing_; }

private:
    std::vector<std::string> missing_;
};

} // namespace samosa
