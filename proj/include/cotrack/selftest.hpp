#pragma once

// Randomized property suites over the solver, the network gradients and the
// part lifecycle. Shared by the `selftest` command and the acceptance tests.

#include <cstdint>
#include <string>
#include <vector>

namespace cotrack::selftest {

struct SuiteResult {
    std::string name;
    bool passed = false;
    int trials = 0;
    double worst = 0.0;  // largest observed error measure
    double bound = 0.0;  // pass threshold on `worst`
    double seconds = 0.0;
    std::string detail;
};

/// Weighted vs unweighted one-vs-all solutions: collinearity and the exact rescale.
SuiteResult rescale_suite(int trials = 1000, std::uint64_t seed = 1);

/// Primal and dual banks agree in max-norm.
SuiteResult primal_dual_suite(int trials = 200, std::uint64_t seed = 2);

/// Analytic vs central-difference gradients, per layer kind, in double precision.
SuiteResult gradient_suite(int coords_per_kind = 24, std::uint64_t seed = 3);

/// One fixed sample, `steps` Adam steps: final loss must drop below a tenth.
SuiteResult overfit_suite(int steps = 200, std::uint64_t seed = 4);

/// Randomized lifecycle simulation checking the state-machine rules.
SuiteResult lifecycle_suite(int frames = 500, int runs = 4, std::uint64_t seed = 5);

std::vector<SuiteResult> run_all();

/// One line: "PASS name worst=... bound=... (n trials, s)".
std::string format(const SuiteResult& r);

}  // namespace cotrack::selftest
