#pragma once

#include <string>
#include <vector>

namespace groklab {

// Three-scalar reduction of the per-sample training flow. delta is the
// 0/1 indicator of whether the integrated sample carries the target class.
struct ReducedState {
    double x = 0.0;
    double w = 0.0;
    double u = 0.0;
};

struct ReducedDerivative {
    double dx = 0.0;
    double dw = 0.0;
    double du = 0.0;
};

// dx = -(xwu - delta) wu,  dw = -(xwu - delta) xu,  du = -(xwu - delta) xw.
ReducedDerivative derivative(const ReducedState& s, int delta);

struct TrajectoryPoint {
    double t = 0.0;
    double x = 0.0;
    double w = 0.0;
    double u = 0.0;
    double v = 0.0;  // Lyapunov value at the point
};

struct Trajectory {
    std::vector<TrajectoryPoint> points;  // includes t=0; one point per step
    bool left_cube = false;               // any state outside [-1e-6, 1+1e-6]^3
};

// Classic fixed-step RK4; states leaving the unit cube (epsilon 1e-6) are
// flagged, never clipped.
Trajectory integrate(const ReducedState& start, int delta, double step_h, double t_end);

// V = (x-1)^2 + (w-1)^2 + (u-1)^2 and its time derivative along the delta=1
// flow: V_dot = 2 (3xwu - wu - xu - xw)(1 - xwu), i.e. grad(V) . f.
struct LyapunovValues {
    double v = 0.0;
    double v_dot = 0.0;
};
LyapunovValues lyapunov(const ReducedState& s);

// CSV with header t,x,w,u,V.
void save_trajectory_csv(const std::string& path, const Trajectory& trajectory);

}  // namespace groklab
