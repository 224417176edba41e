#pragma once

#include <stdexcept>
#include <string>

namespace gpe {

/// Base class of the mathematical failures raised by the solver. Callers
/// distinguish them from configuration errors (std::invalid_argument).
class SpectralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define GPE_DECLARE_ERROR(Name)                  \
  class Name : public SpectralError {            \
   public:                                       \
    explicit Name(const std::string& what)       \
        : SpectralError(#Name ": " + what) {}    \
  };

GPE_DECLARE_ERROR(ResonantContour)
GPE_DECLARE_ERROR(SeriesDiverging)
GPE_DECLARE_ERROR(NoEigenvalueInWindow)
GPE_DECLARE_ERROR(MultipleEigenvaluesInWindow)
GPE_DECLARE_ERROR(NoAdmissiblePoint)
GPE_DECLARE_ERROR(NotConverged)
GPE_DECLARE_ERROR(IndexDrift)
GPE_DECLARE_ERROR(NewtonDiverged)
GPE_DECLARE_ERROR(NoRootInInterval)

#undef GPE_DECLARE_ERROR

}  // namespace gpe
