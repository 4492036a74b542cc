// error.hpp - exception types shared by the gjn library.
//
// Numerical failures and input failures are kept apart so front ends can map
// them onto different exit codes.

#ifndef GJN_ERROR_HPP
#define GJN_ERROR_HPP

#include <stdexcept>
#include <string>
#include <utility>

namespace gjn {

enum class ErrorKind {
    Input,      // bad configuration, failed validation, wrong variant
    Numerical,  // root bracketing, non-convergence, singular systems
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string name, const std::string& what)
        : std::runtime_error(name + ": " + what), kind_(kind), name_(std::move(name)) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& name() const noexcept { return name_; }

private:
    ErrorKind kind_;
    std::string name_;
};

#define GJN_DEFINE_ERROR(Type, Kind)                                              \
    class Type : public Error {                                                   \
    public:                                                                       \
        explicit Type(const std::string& what) : Error(ErrorKind::Kind, #Type, what) {} \
    }

GJN_DEFINE_ERROR(DivergentMgf, Input);
GJN_DEFINE_ERROR(InvalidDistribution, Input);
GJN_DEFINE_ERROR(ValidationError, Input);
GJN_DEFINE_ERROR(ConfigError, Input);
GJN_DEFINE_ERROR(UnstableNetwork, Input);
GJN_DEFINE_ERROR(UnsupportedTilt, Input);
GJN_DEFINE_ERROR(InsufficientData, Input);
GJN_DEFINE_ERROR(EmptyRay, Numerical);
GJN_DEFINE_ERROR(BracketFailure, Numerical);
GJN_DEFINE_ERROR(NonConvergence, Numerical);
GJN_DEFINE_ERROR(SingularSystem, Numerical);
GJN_DEFINE_ERROR(SingularGeometry, Numerical);

#undef GJN_DEFINE_ERROR

}  // namespace gjn

#endif  // GJN_ERROR_HPP
