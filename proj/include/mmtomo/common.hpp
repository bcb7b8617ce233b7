#ifndef MMTOMO_COMMON_HPP
#define MMTOMO_COMMON_HPP

#include <complex>
#include <stdexcept>
#include <string>

namespace mmt {

using cplx = std::complex<double>;
using cplxf = std::complex<float>;

enum class ErrorKind {
  config,        // bad configuration / schema violation
  validation,    // domain invariant violated
  sizing,        // dimension cap exceeded
  conditioning,  // numerically ill-conditioned system
  registration,  // point-cloud registration failed
  io,            // file read/write problem
  stage,         // pipeline stage dependency / execution failure
  internal       // should-not-happen guard
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace mmt

#endif
