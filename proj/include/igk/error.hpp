// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace igk {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or missing dataset files.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Synthetic corpus request that cannot be satisfied.
class InvalidSpec : public Error {
public:
    using Error::Error;
};

/// Kernel evaluated deeper than the refinement that produced the colorings.
class DepthError : public Error {
public:
    using Error::Error;
};

/// Self-kernel of zero, normalization undefined.
class DegenerateKernel : public Error {
public:
    DegenerateKernel(const std::string& what, std::size_t graph_index)
        : Error(what), graph_index_(graph_index) {}

    std::size_t graph_index() const noexcept { return graph_index_; }

private:
    std::size_t graph_index_;
};

/// Analysis applied to a series it is not defined for.
class InvalidInput : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class InvalidConfig : public Error {
public:
    using Error::Error;
};

class InvalidPair : public Error {
public:
    using Error::Error;
};

class InvalidK : public Error {
public:
    using Error::Error;
};

}  // namespace igk
