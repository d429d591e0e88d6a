#include "groklab/dynamics.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace groklab {

ReducedDerivative derivative(const ReducedState& s, int delta) {
    if (delta != 0 && delta != 1) throw std::invalid_argument("derivative: delta must be 0 or 1");
    const double err = s.x * s.w * s.u - static_cast<double>(delta);
    return {-err * s.w * s.u, -err * s.x * s.u, -err * s.x * s.w};
}

namespace {

constexpr double kCubeEps = 1e-6;

bool inside_cube(const ReducedState& s) {
    auto ok = [](double v) { return v >= -kCubeEps && v <= 1.0 + kCubeEps; };
    return ok(s.x) && ok(s.w) && ok(s.u);
}

ReducedState advance_rk4(const ReducedState& s, int delta, double h) {
    auto at = [&](const ReducedState& base, const ReducedDerivative& d, double scale) {
        return ReducedState{base.x + scale * d.dx, base.w + scale * d.dw, base.u + scale * d.du};
    };
    const ReducedDerivative k1 = derivative(s, delta);
    const ReducedDerivative k2 = derivative(at(s, k1, h / 2.0), delta);
    const ReducedDerivative k3 = derivative(at(s, k2, h / 2.0), delta);
    const ReducedDerivative k4 = derivative(at(s, k3, h), delta);
    return {s.x + h / 6.0 * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx),
            s.w + h / 6.0 * (k1.dw + 2.0 * k2.dw + 2.0 * k3.dw + k4.dw),
            s.u + h / 6.0 * (k1.du + 2.0 * k2.du + 2.0 * k3.du + k4.du)};
}

}  // namespace

Trajectory integrate(const ReducedState& start, int delta, double step_h, double t_end) {
    if (!(step_h > 0.0)) throw std::invalid_argument("integrate: step_h must be > 0");
    if (!(t_end >= 0.0)) throw std::invalid_argument("integrate: t_end must be >= 0");

    const auto steps = static_cast<long long>(std::llround(t_end / step_h));
    Trajectory trajectory;
    trajectory.points.reserve(static_cast<size_t>(steps) + 1);

    ReducedState s = start;
    auto record = [&](double t) {
        trajectory.points.push_back({t, s.x, s.w, s.u, lyapunov(s).v});
        if (!inside_cube(s)) trajectory.left_cube = true;
    };
    record(0.0);
    for (long long k = 1; k <= steps; ++k) {
        s = advance_rk4(s, delta, step_h);
        record(static_cast<double>(k) * step_h);
    }
    return trajectory;
}

LyapunovValues lyapunov(const ReducedState& s) {
    LyapunovValues out;
    out.v = (s.x - 1.0) * (s.x - 1.0) + (s.w - 1.0) * (s.w - 1.0) + (s.u - 1.0) * (s.u - 1.0);
    const double xwu = s.x * s.w * s.u;
    out.v_dot = 2.0 * (3.0 * xwu - s.w * s.u - s.x * s.u - s.x * s.w) * (1.0 - xwu);
    return out;
}

void save_trajectory_csv(const std::string& path, const Trajectory& trajectory) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_trajectory_csv: cannot open " + path);
    out << "t,x,w,u,V\n";
    out.precision(17);
    for (const auto& p : trajectory.points)
        out << p.t << "," << p.x << "," << p.w << "," << p.u << "," << p.v << "\n";
    if (!out) throw std::runtime_error("save_trajectory_csv: write failed for " + path);
}

}  // namespace groklab
