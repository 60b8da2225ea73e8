#include "kconv/interp.hpp"

#include <cmath>
#include <stdexcept>

namespace kconv {

namespace {

struct Cell {
    // base grid index per axis plus fractional offset in [0,1]
    int base[8];
    double frac[8];
};

Cell locate(const GridLayout& L, std::span<const double> pos) {
    if (L.dim > 8) throw std::invalid_argument("interp: dimension too large");
    Cell c;
    for (int a = 0; a < L.dim; ++a) {
        const double s = (pos[a] - L.origin[a]) / L.spacing;
        int b = static_cast<int>(std::floor(s));
        if (b < 0) b = 0;
        if (b > L.extent[a] - 2) b = L.extent[a] - 2;
        double f = s - b;
        if (f < 0.0) f = 0.0;
        if (f > 1.0) f = 1.0;
        if (L.extent[a] < 2) {  // degenerate axis
            b = 0;
            f = 0.0;
        }
        c.base[a] = b;
        c.frac[a] = f;
    }
    return c;
}

template <typename Fn>
void for_each_corner(const GridLayout& L, const Cell& c, Fn&& fn) {
    const int corners = 1 << L.dim;
    for (int mask = 0; mask < corners; ++mask) {
        int flat = 0;
        double w = 1.0;
        for (int a = 0; a < L.dim; ++a) {
            const bool hi = mask & (1 << a);
            const int ia = c.base[a] + (hi ? 1 : 0);
            flat += (L.extent[a] < 2 ? 0 : ia) * L.stride[a];
            w *= hi ? c.frac[a] : 1.0 - c.frac[a];
        }
        fn(flat, w);
    }
}

}  // namespace

double interpolate_scalar(const MetricMeasureSpace& M, const ScalarField& f,
                          std::span<const double> pos) {
    const auto& L = M.layout();
    const Cell c = locate(L, pos);
    double v = 0.0;
    for_each_corner(L, c, [&](int flat, double w) { v += w * f[flat]; });
    return v;
}

void interpolate_vector(const MetricMeasureSpace& M, const VectorField& b,
                        std::span<const double> pos, std::span<double> out) {
    const auto& L = M.layout();
    const Cell c = locate(L, pos);
    for (int a = 0; a < L.dim; ++a) out[a] = 0.0;
    for_each_corner(L, c, [&](int flat, double w) {
        for (int a = 0; a < L.dim; ++a) out[a] += w * b.component(flat, a);
    });
}

std::vector<double> cic_deposit(const MetricMeasureSpace& M, std::span<const double> positions,
                                std::span<const double> masses) {
    const auto& L = M.layout();
    const int d = L.dim;
    std::vector<double> raw(static_cast<std::size_t>(M.size()), 0.0);
    const std::size_t p = masses.size();
    if (positions.size() != p * static_cast<std::size_t>(d))
        throw std::invalid_argument("cic_deposit: positions/masses size mismatch");
    for (std::size_t k = 0; k < p; ++k) {
        const Cell c = locate(L, positions.subspan(k * d, d));
        for_each_corner(L, c, [&](int flat, double w) { raw[flat] += w * masses[k]; });
    }
    return raw;
}

std::vector<double> tsc_deposit(const MetricMeasureSpace& M, std::span<const double> positions,
                                std::span<const double> masses) {
    const auto& L = M.layout();
    const int d = L.dim;
    if (d > 8) throw std::invalid_argument("tsc_deposit: dimension too large");
    std::vector<double> raw(static_cast<std::size_t>(M.size()), 0.0);
    const std::size_t p = masses.size();
    if (positions.size() != p * static_cast<std::size_t>(d))
        throw std::invalid_argument("tsc_deposit: positions/masses size mismatch");

    int centre[8];
    double weight[8][3];
    for (std::size_t k = 0; k < p; ++k) {
        for (int a = 0; a < d; ++a) {
            const double s = (positions[k * d + a] - L.origin[a]) / L.spacing;
            int c = static_cast<int>(std::lround(s));
            if (c < 0) c = 0;
            if (c > L.extent[a] - 1) c = L.extent[a] - 1;
            const double xi = s - c;
            centre[a] = c;
            weight[a][0] = 0.5 * (0.5 - xi) * (0.5 - xi);
            weight[a][1] = 0.75 - xi * xi;
            weight[a][2] = 0.5 * (0.5 + xi) * (0.5 + xi);
        }
        int radix[8];
        for (int a = 0; a < d; ++a) radix[a] = 0;
        while (true) {
            double w = 1.0;
            int flat = 0;
            for (int a = 0; a < d; ++a) {
                int ia = centre[a] + radix[a] - 1;
                // clamp boundary spill inward so mass is conserved
                if (ia < 0) ia = 0;
                if (ia > L.extent[a] - 1) ia = L.extent[a] - 1;
                flat += ia * L.stride[a];
                w *= weight[a][radix[a]];
            }
            raw[flat] += w * masses[k];
            int a = 0;
            while (a < d && ++radix[a] == 3) radix[a++] = 0;
            if (a == d) break;
        }
    }
    return raw;
}

}  // namespace kconv
