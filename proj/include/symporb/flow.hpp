#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "symporb/dynamics.hpp"

// High-accuracy propagation of trajectories and state-transition matrices
// with event detection on dense output. The stepper is an adaptive
// Dormand-Prince 8(5,3) scheme with the classical 7th-order interpolant.

namespace symporb {

struct CollisionDuringFlow : std::runtime_error {
    double time;
    double distance;
    CollisionDuringFlow(double t, double d)
        : std::runtime_error("trajectory entered collision radius at t = " +
                             std::to_string(t)),
          time(t), distance(d) {}
};

struct StepSizeUnderflow : std::runtime_error {
    double time;
    explicit StepSizeUnderflow(double t)
        : std::runtime_error("integrator step size underflow at t = " + std::to_string(t)),
          time(t) {}
};

struct EventNotFound : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Tolerances {
    double rel = 1e-12;
    double abs = 1e-12;
    double max_step = 0.0;        // 0 = span of integration
    long max_steps = 10'000'000;
};

struct FlowResult {
    Vec6 state = Vec6::Zero();    // position-velocity
    double time = 0.0;
    // State-transition matrix in canonical coordinates (symplectic w.r.t.
    // the constant J); present when requested.
    std::optional<Mat6> stm;
    // Uniform dense samples (t, state), present when sample_dt > 0.
    std::vector<std::pair<double, Vec6>> samples;

    Mat6 stm_pv() const { return stm_from_canonical(stm.value()); }
};

struct EventSpec {
    std::function<double(const Vec6&)> value;  // scalar of the pv state
    int direction = 0;                         // +1 up-crossings, -1 down, 0 any
    int count = 1;                             // stop at this crossing

    static EventSpec coordinate_zero(int index, int direction = 0, int count = 1);
};

struct FlowOptions {
    Tolerances tol;
    bool with_stm = false;
    double sample_dt = 0.0;
    // Called after every accepted step with (t, state, stm_pv-or-null).
    std::function<void(double, const Vec6&, const Mat6*)> observer;
};

FlowResult flow(const Model& m, const Vec6& s0, double t, const FlowOptions& opts = {});

inline FlowResult flow_with_stm(const Model& m, const Vec6& s0, double t,
                                const FlowOptions& opts = {}) {
    FlowOptions o = opts;
    o.with_stm = true;
    return flow(m, s0, t, o);
}

struct EventResult {
    double time = 0.0;
    FlowResult flow;
};

// Propagates until the count-th crossing of the event function, refined on
// dense output to |value| below the event tolerance. Throws EventNotFound if
// t_max is reached first. t_max may be negative for backward integration.
EventResult flow_to_event(const Model& m, const Vec6& s0, const EventSpec& ev,
                          double t_max, const FlowOptions& opts = {});

// All event crossings in (0, t_max], each refined; does not throw when none
// are found. Returns (time, state) pairs in time order.
std::vector<std::pair<double, Vec6>> find_crossings(const Model& m, const Vec6& s0,
                                                    const EventSpec& ev, double t_max,
                                                    const FlowOptions& opts = {});

}  // namespace symporb
