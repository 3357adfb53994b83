#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace strongsde::params {

/// Raised for malformed exponent input (non-finite, out of declared range).
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when an exponent system has no solution. `constraint()` names the
/// first inequality that could not be met.
class Infeasible : public std::runtime_error {
public:
    Infeasible(std::string constraint, const std::string& detail)
        : std::runtime_error("infeasible exponent system: " + constraint + " (" + detail + ")"),
          constraint_(std::move(constraint)) {}
    const std::string& constraint() const noexcept { return constraint_; }

private:
    std::string constraint_;
};

/// Margin used for strict inequalities on floating point input.
inline constexpr double kStrictMargin = 1e-9;

struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;
};

enum class Regime { Subcritical, Critical, Supercritical };

struct RegimeLabel {
    Regime label = Regime::Subcritical;
    double lhs = 0.0;  // d/p + 2/q
};

const char* to_string(Regime r);

RegimeLabel classify_lps(int d, double p, double q);
/// Exact variant: lhs is compared with 1 in rational arithmetic.
RegimeLabel classify_lps(int d, Rational p, Rational q);

/// Which iterated order the mixed norm of the drift uses.
enum class NormOrder { SpaceFirst, TimeFirst };
const char* to_string(NormOrder o);

struct UniquenessCheck {
    bool holds = false;  // d/frp + 1/frq <= 1
    double lhs = 0.0;
    NormOrder order = NormOrder::SpaceFirst;
};

UniquenessCheck check_uniqueness_hypothesis(int d, double frp_b, double frq_b);

struct ExponentProfile {
    int d = 3;
    int d1 = 3;
    double p_b = 0, p_dsigma = 0;
    double frp_b = 0, frq_b = 0;
    double p0 = 0, q0 = 0;
    double alpha = 0;
    double beta0 = 0, beta0p = 0;
    double sfp = 0, sfq = 0;
};

/// One step of the sequential solve: the open/closed window a free exponent
/// was drawn from and the value chosen.
struct TraceStep {
    std::string name;
    double lo = 0, hi = 0;
    bool hi_inclusive = false;
    double value = 0;
};

struct SolveResult {
    ExponentProfile profile;
    std::vector<TraceStep> trace;
};

SolveResult solve_exponents(int d, double p_b, double p_dsigma, double frp_b, double frq_b);

/// Every inequality of the exponent system, evaluated on a finished profile.
/// Returns the names of violated constraints (empty when the profile is valid).
std::vector<std::string> violated_constraints(const ExponentProfile& p,
                                              double margin = kStrictMargin);

/// The constraints a Morrey-scale exponent must satisfy given p0, q0.
bool beta_admissible(double beta, double p0, double q0, double frp_b, double frq_b,
                     double margin = kStrictMargin);

}  // namespace strongsde::params
