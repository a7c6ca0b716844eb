#ifndef CONCENTRA_ERRORS_HPP
#define CONCENTRA_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace concentra {

/// Broad failure categories. `validation` covers bad inputs and contract
/// violations detectable before any computation starts; everything else is
/// raised mid-solve.
enum class ErrorKind {
  validation,
  resource,
  domain,
  placement,
  solver,
  convergence,
  degenerate,
  refinement,
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, std::string what) : std::runtime_error(std::move(what)), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

struct ValidationError : Error {
  explicit ValidationError(const std::string& w) : Error(ErrorKind::validation, w) {}
};
struct ResourceError : Error {
  explicit ResourceError(const std::string& w) : Error(ErrorKind::resource, w) {}
};
struct DomainError : Error {
  explicit DomainError(const std::string& w) : Error(ErrorKind::domain, w) {}
};
struct PlacementError : Error {
  explicit PlacementError(const std::string& w) : Error(ErrorKind::placement, w) {}
};
struct SolverError : Error {
  explicit SolverError(const std::string& w) : Error(ErrorKind::solver, w) {}
};
struct ConvergenceError : Error {
  explicit ConvergenceError(const std::string& w) : Error(ErrorKind::convergence, w) {}
};
struct DegenerateError : Error {
  explicit DegenerateError(const std::string& w) : Error(ErrorKind::degenerate, w) {}
};
struct RefinementError : Error {
  explicit RefinementError(const std::string& w) : Error(ErrorKind::refinement, w) {}
};

const char* to_string(ErrorKind k);

} // namespace concentra

#endif
