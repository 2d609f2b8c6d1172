// Exception hierarchy shared by all sg modules.
//
// ValidationError covers bad user input (rejected spectral data, inadmissible
// polynomials); NumericError covers machinery that ran out of road
// (quadrature stalls, lost branches, step failures). The CLI maps them to
// exit codes 2 and 3 respectively.

#ifndef SG_ERRORS_HPP
#define SG_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sg {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

#define SG_DEFINE_ERROR(Name, Base)                                     \
    class Name : public Base {                                          \
    public:                                                             \
        explicit Name(const std::string& what) : Base(#Name ": " + what) {} \
    }

// spectral_curve
SG_DEFINE_ERROR(NonRealNegativeViolation, ValidationError);
SG_DEFINE_ERROR(UnpairedComplexPoint, ValidationError);
SG_DEFINE_ERROR(DegenerateBranchPoints, ValidationError);
SG_DEFINE_ERROR(PathThroughBranchPoint, NumericError);
SG_DEFINE_ERROR(LostBranch, NumericError);

// admissibility
SG_DEFINE_ERROR(NotAdmissible, ValidationError);
SG_DEFINE_ERROR(PairingAmbiguity, NumericError);
SG_DEFINE_ERROR(CoincidentProjections, NumericError);
SG_DEFINE_ERROR(WitnessSearchFailed, NumericError);

// periods
SG_DEFINE_ERROR(GeometryFailure, NumericError);
SG_DEFINE_ERROR(QuadratureStall, NumericError);
SG_DEFINE_ERROR(SingularPeriodMatrix, NumericError);

// dynamics
SG_DEFINE_ERROR(NearCollision, NumericError);
SG_DEFINE_ERROR(StepFailure, NumericError);
SG_DEFINE_ERROR(SingularApproach, NumericError);

// averaging
SG_DEFINE_ERROR(FitIllConditioned, NumericError);
SG_DEFINE_ERROR(NotGenusOne, ValidationError);

#undef SG_DEFINE_ERROR

}  // namespace sg

#endif
