#pragma once

#include <stdexcept>
#include <string>

namespace subterra {

// Malformed input document (JSON syntax or field type).
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Well-formed input violating a semantic rule.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class OutOfBoundsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UntraversableError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UnreachableError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Behavior-tree configuration problems (unbound leaves, malformed nodes).
class ConfigurationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Action library rejected at load: cycles, ambiguous solvers, duplicates.
class LibraryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ExpansionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace subterra
