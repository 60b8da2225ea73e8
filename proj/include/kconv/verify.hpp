#pragma once

#include <string>
#include <utility>
#include <vector>

#include "kconv/flow.hpp"
#include "kconv/space.hpp"
#include "kconv/transport.hpp"

namespace kconv {

// ============================================================================
// Reports
// ============================================================================

/// One inequality check. Margins are signed and normalized per check (see the
/// individual functions); pass means margin >= -tolerance. Witnesses carry
/// the quantities behind the verdict and are always populated on failure.
struct VerificationReport {
    std::string check_id;
    double K = 0.0;
    double tolerance = 0.0;
    double margin = 0.0;
    bool pass = false;
    std::vector<std::pair<std::string, double>> witnesses;
    std::string note;
};

VerificationReport finalize_report(VerificationReport report);

// ============================================================================
// Scenario building blocks
// ============================================================================

/// Gaussian bump truncated at 4 sigma and normalized against the reference
/// weights; keeps supports compact and off the boundary by construction.
Density gaussian_bump(const MetricMeasureSpace& space, std::span<const double> center, double sigma);

struct PointPair {
    std::vector<double> x;
    std::vector<double> y;
};

// ============================================================================
// Individual checks
// ============================================================================

/// Weak K-convexity of U(mu) = int u dmu along the displacement geodesic:
/// margin = min over ts of [(1-t)U0 + tU1 - (K/2)t(1-t)W2^2 - U(mu_t)],
/// normalized by max(1, W2^2).
VerificationReport check_weak_convexity(const MetricMeasureSpace& space, const ScalarField& u,
                                        double K, const Density& mu0, const Density& mu1,
                                        const std::vector<double>& ts, double tolerance = 1e-3);

/// K-monotonicity integral inequality over the exact Kantorovich pair:
/// margin = [int <b, grad phi> dmu0 + int <b, grad phi^c> dmu1 - K W2^2],
/// normalized by max(1, W2^2).
VerificationReport check_k_monotone(const MetricMeasureSpace& space, const VectorField& b, double K,
                                    const Density& mu0, const Density& mu1, double tolerance = 5e-3);

/// Wasserstein contraction of two particle flows driven by velocity b
/// (callers pass -grad u for potential flows): margin = min over ts of
/// 1 - e^{Kt} W2(mu_t, nu_t) / W2(mu_0, nu_0).
VerificationReport check_w2_contraction(const MetricMeasureSpace& space, const VectorField& b,
                                        double K, const Density& mu0, const Density& nu0, double T,
                                        const std::vector<double>& ts, double flow_dt,
                                        double tolerance = 2e-2);

/// Pointwise flow contraction d(F_t x, F_t y) <= e^{-Kt} d(x, y):
/// margin = min over pairs and ts of (e^{-Kt} d0 - d_t) / max(1, d0).
VerificationReport check_pointwise_contraction(const MetricMeasureSpace& space, const VectorField& b,
                                               double K, const std::vector<PointPair>& pairs,
                                               double T, const std::vector<double>& ts,
                                               double flow_dt, double tolerance = 1e-6);

/// Gradient estimate |D(f o F_t)| <= e^{-Kt} |Df| o F_t with F_t realized as
/// the grid-point flow map; margin = min over interior points and ts of the
/// slack.
VerificationReport check_gradient_estimate(const MetricMeasureSpace& space, const VectorField& b,
                                           double K, const ScalarField& f, double T,
                                           const std::vector<double>& ts, double flow_dt,
                                           double tolerance = 1e-4);

/// EVI_K along the flow of -grad u: margin = min over sampled t of
/// [U(nu) - U(mu_t) - d/dt(W2^2/2) - (K/2) W2^2] / max(1, W2^2), derivative
/// by central differences with step dt.
VerificationReport check_evi(const MetricMeasureSpace& space, const ScalarField& u, double K,
                             const Density& mu0, const Density& nu, double T, double flow_dt,
                             int samples = 10, double t_min = 0.1, double tolerance = 1e-3);

/// Geodesic interpolation schedule from the contraction argument:
/// delta(r) = (e^{2Krt}-1)/(e^{2Kt}-1) and R_K(t) = 2Kt/(e^{2Kt}-1), with
/// (r, 1) at K = 0. expm1 keeps small |2Kt| exact, so no series branch is
/// needed.
std::pair<double, double> interpolation_schedule(double r, double K, double t);

/// k-convexity of Ent(mu) = int rho log rho dm along the geodesic
/// (regularized by rho + 1e-12 before the log); absolute margin.
VerificationReport check_entropy_convexity(const MetricMeasureSpace& space, const Density& mu0,
                                           const Density& mu1, double k,
                                           const std::vector<double>& ts, double tolerance = 5e-3);

// ============================================================================
// Equivalence suite
// ============================================================================

struct Scenario {
    std::vector<double> times{0.25, 0.5, 1.0};
    double horizon = 1.0;
    double flow_dt = 1e-3;
    int evi_samples = 10;
    double evi_t_min = 0.1;
    std::vector<std::vector<double>> bump_centers;  // exactly two measures are used
    std::vector<double> bump_widths;
    std::vector<PointPair> point_pairs;
    int gradient_test_axis = 0;
    double tol_scale = 1.0;
};

struct SuiteResult {
    std::vector<VerificationReport> reports;  // sorted by check_id
    bool all_pass = false;
    bool all_fail = false;
    bool coherent = false;  // unanimous verdict
};

/// Run the seven equivalence checks for the potential u at modulus K:
/// infinitesimal certification, weak convexity, K-monotonicity of grad u,
/// W2 contraction, pointwise contraction, gradient estimate, and EVI.
SuiteResult run_equivalence_suite(const MetricMeasureSpace& space, const ScalarField& u, double K,
                                  const Scenario& scenario);

// ============================================================================
// Rigidity demos
// ============================================================================

enum class RigidityMode { splitting, cone };

struct RigidityCheck {
    std::string name;
    double worst = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct RigidityReport {
    std::string mode;
    std::vector<RigidityCheck> checks;
    bool pass = false;
    std::string note;
    double flow_ratio = 0.0;  // cone: measured d_t/d_0 at t = 1
};

/// Splitting: u(x,y) = x has vanishing Hessian and unit gradient, so the flow
/// is an isometry translating fibers at unit speed. Cone: u = |x|^2/2 has
/// identity Hessian, Laplacian = dim and |Du|^2 = 2u, so the flow dilates
/// distances at rate e^{-t}.
RigidityReport demo_rigidity(const MetricMeasureSpace& space, RigidityMode mode,
                             unsigned rng_seed = 20240, int pair_count = 6);

}  // namespace kconv
