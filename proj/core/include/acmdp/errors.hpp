#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace acmdp {

/// A model violates one of its structural invariants (bad row sum, empty
/// action set, cost below the declared bound, index out of range, ...).
class ValidationError : public std::runtime_error {
public:
    ValidationError(std::string what, int state = -1, int action = -1)
        : std::runtime_error(std::move(what)), state(state), action(action) {}

    int state;   ///< offending state index, -1 if not applicable
    int action;  ///< offending action index within the state, -1 if not applicable
};

/// A numerical routine failed (non-convergence, cap exceeded, singularity).
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A staged pipeline failed; `stage` names the first failing stage.
class PipelineError : public SolverError {
public:
    PipelineError(std::string stage_name, const std::string& what)
        : SolverError(stage_name + ": " + what), stage(std::move(stage_name)) {}

    std::string stage;
};

/// An iterative solver hit its iteration cap before meeting its tolerance.
/// Carries the last iterate so callers can inspect how far it got.
class NonConvergenceError : public SolverError {
public:
    NonConvergenceError(std::string what, std::vector<double> last_values,
                        long long iterations, double residual)
        : SolverError(std::move(what)),
          last_values(std::move(last_values)),
          iterations(iterations),
          residual(residual) {}

    std::vector<double> last_values;
    long long iterations;
    double residual;
};

}  // namespace acmdp
