#include "kconv/flow.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "kconv/interp.hpp"

namespace kconv {

namespace {

void require_grid(const MetricMeasureSpace& M, const char* who) {
    if (M.backend() != Backend::grid)
        throw std::domain_error(std::string(who) + ": grid backend required");
}

struct Box {
    std::vector<double> lo, hi;
    double h;
};

Box domain_box(const MetricMeasureSpace& M) {
    const auto& L = M.layout();
    Box box;
    box.h = L.spacing;
    box.lo = L.origin;
    box.hi.resize(L.dim);
    for (int a = 0; a < L.dim; ++a) box.hi[a] = L.origin[a] + (L.extent[a] - 1) * L.spacing;
    return box;
}

// One RK4 step in place; clamps to the box and flags escapes beyond one cell.
void rk4_step(const MetricMeasureSpace& M, const VectorField& b, const Box& box, double dt,
              std::span<double> x, long& clamp_events) {
    const int d = M.dim();
    double k1[8], k2[8], k3[8], k4[8], tmp[8];
    interpolate_vector(M, b, x, {k1, static_cast<std::size_t>(d)});
    for (int a = 0; a < d; ++a) tmp[a] = x[a] + 0.5 * dt * k1[a];
    interpolate_vector(M, b, {tmp, static_cast<std::size_t>(d)}, {k2, static_cast<std::size_t>(d)});
    for (int a = 0; a < d; ++a) tmp[a] = x[a] + 0.5 * dt * k2[a];
    interpolate_vector(M, b, {tmp, static_cast<std::size_t>(d)}, {k3, static_cast<std::size_t>(d)});
    for (int a = 0; a < d; ++a) tmp[a] = x[a] + dt * k3[a];
    interpolate_vector(M, b, {tmp, static_cast<std::size_t>(d)}, {k4, static_cast<std::size_t>(d)});
    for (int a = 0; a < d; ++a) {
        const double v = (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]) / 6.0;
        if (!std::isfinite(v)) throw std::runtime_error("lagrangian_flow: non-finite velocity");
        x[a] += dt * v;
        if (x[a] < box.lo[a] - box.h || x[a] > box.hi[a] + box.h)
            throw std::runtime_error(
                "lagrangian_flow: particle escaped the domain by more than one cell "
                "(domain too small for this field/horizon)");
        if (x[a] < box.lo[a]) {
            x[a] = box.lo[a];
            ++clamp_events;
        } else if (x[a] > box.hi[a]) {
            x[a] = box.hi[a];
            ++clamp_events;
        }
    }
}

int step_count(double T, double dt) {
    if (!(T > 0.0) || !(dt > 0.0)) throw std::invalid_argument("flow: T and dt must be positive");
    return std::max(1, static_cast<int>(std::llround(T / dt)));
}

double max_compression(const MetricMeasureSpace& M, const ParticleEnsemble& pe) {
    const std::vector<double> raw = tsc_deposit(M, pe.positions, pe.masses);
    double c = 0.0;
    for (int i = 0; i < M.size(); ++i) c = std::max(c, raw[i] / M.weight(i));
    return c;
}

}  // namespace

void validate_ensemble(const MetricMeasureSpace& M, const ParticleEnsemble& pe) {
    require_grid(M, "validate_ensemble");
    if (pe.dim != M.dim()) throw std::invalid_argument("ensemble: dimension mismatch");
    if (pe.positions.size() != pe.masses.size() * static_cast<std::size_t>(pe.dim))
        throw std::invalid_argument("ensemble: positions/masses size mismatch");
    double total = 0.0;
    for (double m : pe.masses) {
        if (!(m > 0.0)) throw std::invalid_argument("ensemble: masses must be positive");
        total += m;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument("ensemble: masses must sum to 1 (got " + std::to_string(total) + ")");
    const Box box = domain_box(M);
    for (int k = 0; k < pe.count(); ++k)
        for (int a = 0; a < pe.dim; ++a) {
            const double x = pe.position(k)[a];
            if (x < box.lo[a] - 1e-12 || x > box.hi[a] + 1e-12)
                throw std::invalid_argument("ensemble: particle outside domain bounds");
        }
}

ParticleEnsemble ensemble_from_density(const MetricMeasureSpace& M, const Density& mu,
                                       std::string provenance) {
    require_grid(M, "ensemble_from_density");
    ParticleEnsemble pe;
    pe.dim = M.dim();
    pe.provenance = std::move(provenance);
    for (int i = 0; i < M.size(); ++i) {
        if (mu[i] <= 0.0) continue;
        const auto p = M.point(i);
        pe.positions.insert(pe.positions.end(), p.begin(), p.end());
        pe.masses.push_back(mu[i] * M.weight(i));
    }
    // renormalize away summation round-off so downstream validation is exact
    double total = 0.0;
    for (double m : pe.masses) total += m;
    for (double& m : pe.masses) m /= total;
    return pe;
}

FlowTrajectory lagrangian_flow(const MetricMeasureSpace& M, const VectorField& b,
                               const ParticleEnsemble& particles, double T, double dt, int stride) {
    require_grid(M, "lagrangian_flow");
    validate_ensemble(M, particles);
    if (stride < 1) throw std::invalid_argument("lagrangian_flow: stride must be >= 1");
    const int nsteps = step_count(T, dt);
    const double step = T / nsteps;
    const Box box = domain_box(M);

    FlowTrajectory traj;
    traj.dt = step;
    traj.stride = stride;
    ParticleEnsemble current = particles;
    traj.times.push_back(0.0);
    traj.particles.push_back(current);
    traj.compression_series.push_back(max_compression(M, current));

    const int d = M.dim();
    for (int s = 1; s <= nsteps; ++s) {
        for (int k = 0; k < current.count(); ++k)
            rk4_step(M, b, box, step,
                     {current.positions.data() + static_cast<std::size_t>(k) * d,
                      static_cast<std::size_t>(d)},
                     traj.clamp_events);
        if (s % stride == 0 || s == nsteps) {
            traj.times.push_back(s * step);
            traj.particles.push_back(current);
            traj.compression_series.push_back(max_compression(M, current));
        }
    }
    return traj;
}

std::vector<double> flow_map(const MetricMeasureSpace& M, const VectorField& b,
                             std::vector<double> positions, double t, double dt) {
    require_grid(M, "flow_map");
    if (t == 0.0) return positions;
    const int nsteps = step_count(t, dt);
    const double step = t / nsteps;
    const Box box = domain_box(M);
    const int d = M.dim();
    long clamps = 0;
    const std::size_t count = positions.size() / static_cast<std::size_t>(d);
    for (int s = 0; s < nsteps; ++s)
        for (std::size_t k = 0; k < count; ++k)
            rk4_step(M, b, box, step,
                     {positions.data() + k * d, static_cast<std::size_t>(d)}, clamps);
    return positions;
}

FlowTrajectory solve_continuity(const MetricMeasureSpace& M, const VectorField& b, const Density& mu0,
                                double T, double dt, int stride) {
    require_grid(M, "solve_continuity");
    if (stride < 1) throw std::invalid_argument("solve_continuity: stride must be >= 1");
    const auto& L = M.layout();
    const int d = L.dim;
    const double h = L.spacing;

    // axis-summed CFL bound implies positivity of the upwind update
    double speed = 0.0;
    for (int a = 0; a < d; ++a) {
        double ba = 0.0;
        for (int i = 0; i < M.size(); ++i) ba = std::max(ba, std::abs(b.component(i, a)));
        speed += ba;
    }
    if (speed > 0.0 && dt * speed / h > 0.9)
        throw std::invalid_argument("solve_continuity: CFL violated, need dt <= " +
                                    std::to_string(0.9 * h / speed));

    const int nsteps = step_count(T, dt);
    const double step = T / nsteps;

    FlowTrajectory traj;
    traj.dt = step;
    traj.stride = stride;
    std::vector<double> rho(mu0.rho());
    std::vector<double> next(rho.size());
    auto snapshot = [&](double time) {
        traj.times.push_back(time);
        traj.densities.push_back(rho);
        double c = 0.0;
        for (double x : rho) c = std::max(c, x);
        traj.compression_series.push_back(c);
    };
    snapshot(0.0);

    for (int s = 1; s <= nsteps; ++s) {
        next = rho;
        for (int a = 0; a < d; ++a) {
            const int str = L.stride[a];
            for (int i = 0; i < M.size(); ++i) {
                const int ia = (i / str) % L.extent[a];
                if (ia == L.extent[a] - 1) continue;  // faces between i and i+str only
                const double v = 0.5 * (b.component(i, a) + b.component(i + str, a));
                const double flux = v > 0.0 ? v * rho[i] : v * rho[i + str];
                next[i] -= step / h * flux;
                next[i + str] += step / h * flux;
            }
        }
        rho.swap(next);
        if (s % stride == 0 || s == nsteps) snapshot(s * step);
    }
    return traj;
}

FlowDiagnostics flow_diagnostics(const MetricMeasureSpace& M, const FlowTrajectory& traj,
                                 const VectorField& b) {
    require_grid(M, "flow_diagnostics");
    if (traj.particles.size() < 3)
        throw std::invalid_argument("flow_diagnostics: need at least three particle snapshots");
    const int d = M.dim();

    FlowDiagnostics report;
    report.compression_series = traj.compression_series;
    for (double c : traj.compression_series) report.max_compression = std::max(report.max_compression, c);

    // (a) metric speed vs |b| along the flow, centered differences over snapshots
    double tmp[8];
    for (std::size_t s = 1; s + 1 < traj.particles.size(); ++s) {
        const double span = traj.times[s + 1] - traj.times[s - 1];
        const auto& prev = traj.particles[s - 1];
        const auto& here = traj.particles[s];
        const auto& next = traj.particles[s + 1];
        for (int k = 0; k < here.count(); ++k) {
            double fd2 = 0.0;
            for (int a = 0; a < d; ++a) {
                const double dx = next.position(k)[a] - prev.position(k)[a];
                fd2 += dx * dx;
            }
            interpolate_vector(M, b, here.position(k), {tmp, static_cast<std::size_t>(d)});
            double speed2 = 0.0;
            for (int a = 0; a < d; ++a) speed2 += tmp[a] * tmp[a];
            report.speed_defect =
                std::max(report.speed_defect, std::abs(std::sqrt(fd2) / span - std::sqrt(speed2)));
        }
    }

    // (b) semigroup defect at s = t near the midpoint of the horizon
    const double total = traj.times.back();
    std::size_t mid = 0;
    for (std::size_t i = 0; i < traj.times.size(); ++i)
        if (std::abs(traj.times[i] - 0.5 * total) < std::abs(traj.times[mid] - 0.5 * total)) mid = i;
    const double s_time = traj.times[mid];
    const double t_time = std::min(s_time, total - s_time);
    report.sampled_s = s_time;
    report.sampled_t = t_time;
    if (t_time > 0.0) {
        std::vector<double> via = flow_map(M, b, traj.particles[mid].positions, t_time, traj.dt);
        std::vector<double> direct =
            flow_map(M, b, traj.particles.front().positions, s_time + t_time, traj.dt);
        for (std::size_t k = 0; k < traj.particles.front().masses.size(); ++k) {
            double d2 = 0.0;
            for (int a = 0; a < d; ++a) {
                const double dx = via[k * d + a] - direct[k * d + a];
                d2 += dx * dx;
            }
            report.semigroup_defect = std::max(report.semigroup_defect, std::sqrt(d2));
        }
    }
    return report;
}

}  // namespace kconv
