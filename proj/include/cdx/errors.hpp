#ifndef CDX_ERRORS_HPP
#define CDX_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace cdx {

/* Common base so callers can catch everything from this library at once. */
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/* Algebra layer. */
class DivisionByZero : public Error {
public:
    explicit DivisionByZero(const std::string& what) : Error(what) {}
};

class RangeError : public Error {
public:
    explicit RangeError(const std::string& what) : Error(what) {}
};

class ShapeMismatch : public Error {
public:
    explicit ShapeMismatch(const std::string& what) : Error(what) {}
};

/* Grid / differential layer. */
class UnmappedAxis : public Error {
public:
    explicit UnmappedAxis(const std::string& what) : Error(what) {}
};

class GridTooSmall : public Error {
public:
    explicit GridTooSmall(const std::string& what) : Error(what) {}
};

class BadGrouping : public Error {
public:
    explicit BadGrouping(const std::string& what) : Error(what) {}
};

/* Line-integral layer. */
class IncompatibleDirection : public Error {
public:
    explicit IncompatibleDirection(const std::string& what) : Error(what) {}
};

class TailNotDecayed : public Error {
public:
    explicit TailNotDecayed(const std::string& what) : Error(what) {}
};

/* Scenario / solver layer. */
class NoDispersionSolution : public Error {
public:
    explicit NoDispersionSolution(const std::string& what) : Error(what) {}
};

class SingularOperator : public Error {
public:
    explicit SingularOperator(const std::string& what) : Error(what) {}
};

class PreconditionViolated : public Error {
public:
    explicit PreconditionViolated(const std::string& what) : Error(what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what) {}
};

} // namespace cdx

#endif
