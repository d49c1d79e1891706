#pragma once

// Event-driven hybrid simulation of hopping on the full 4-coordinate model:
// fixed-step RK4 in each phase, bisection event localization for touchdown /
// liftoff / apex / compression reversal, plastic impact map at touchdown,
// tank update at the deepest compression of each stance.

#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "hopper/pneumatics.hpp"
#include "hopper/rigid_body.hpp"
#include "hopper/rng.hpp"

namespace hopper {

struct SimConfig {
  double dt_s = 1e-4;
  double event_time_tol_s = 1e-9;
  int max_cycles = 1000;
  double max_time_s = 120.0;
  double ground_height_m = 0.0;
  double fall_z_m = 0.05;  // hip below ground+this ends the run
  double contact_flip_probability = 0.0;  // sensor-noise shim on measured alpha
  uint64_t seed = 0;

  void validate() const;
};

struct ControlCommand {
  Vec2 tau_motor = Vec2::Zero();  // motor-side torques (hip, knee)
  bool valve_open = false;
};

struct World;

class Controller {
 public:
  virtual ~Controller() = default;
  virtual ControlCommand command(const World& w) = 0;
};

struct World {
  RobotModel model;
  PneumaticConfig pneu;
  SimConfig config;
  TankState tank;
  TankState tank_at_trigger;  // frozen for the actuator while the valve is open
  TransientState transient;
  RobotState state;
  double time_s = 0.0;
  int cycle = 0;

  // stance bookkeeping
  double stance_min_attachment = std::numeric_limits<double>::infinity();
  bool tank_updated_this_stance = false;

  // controller-facing measurements
  double last_apex_xdot = 0.0;
  double prev_apex_xdot = 0.0;
  bool alpha_measured = false;  // contact indicator after the optional noise shim

  Rng rng{0};

  double foot_height() const;
  double attachment_length() const;
  double attachment_rate() const;
  double pneumatic_force() const;  // net force at the current state/valve
};

World make_world(const RobotModel& model, const PneumaticConfig& pneu,
                 const SimConfig& config, const RobotState& initial,
                 const TankState& tank);

struct TraceRow {
  double t = 0;
  Vec4 q = Vec4::Zero();
  Vec4 qdot = Vec4::Zero();
  Vec2 tau = Vec2::Zero();
  double f_pneu = 0;
  Vec2 f_contact = Vec2::Zero();
  double tank_pa = 0;
  double delta = 0;
  int mode = 0;  // 0 aerial, 1 stance
  int valve = 0;
};

enum class EventKind { Touchdown, Liftoff, Apex, ValveTrigger, ValveClose,
                       CompressionReversal, Fall };

const char* event_name(EventKind k);

struct SimEvent {
  EventKind kind;
  double t = 0;
  int cycle = 0;
  double value = 0;  // apex z, impact loss, tank pressure... event-dependent
};

struct CycleSummary {
  int cycle = 0;
  double touchdown_t = 0;
  double liftoff_t = 0;
  double apex_z = 0;
  double apex_height = 0;   // above the fully extended standing height
  double tank_pa_start = 0;
  double tank_pa_end = 0;
  double impact_loss_j = 0;
  double min_attachment_m = 0;
};

struct SimTrace {
  std::vector<TraceRow> rows;
  std::vector<SimEvent> events;
  std::vector<CycleSummary> cycles;
  bool diverged = false;
  bool fell = false;
  std::string message;
};

struct SimDivergedError : std::runtime_error {
  SimDivergedError(const std::string& msg, const RobotState& last, double t)
      : std::runtime_error(msg), last_state(last), time_s(t) {}
  RobotState last_state;
  double time_s;
};

// One fixed-step RK4 integration of the active phase (no event handling).
// Throws SimDivergedError on non-finite state.
World step(const World& w, const ControlCommand& cmd, double dt);

// Bisection localization of an event inside (0, dt]. Requires a sign change
// of the event function across the step; throws std::runtime_error otherwise.
double locate_event(const World& w, const ControlCommand& cmd, EventKind kind,
                    double dt);

// Run n_cycles touchdown-delimited hop cycles (or until fall / divergence /
// time cap) under the controller. Deterministic for a fixed config and seed.
SimTrace run_cycles(World& w, Controller& controller, int n_cycles);

// Event function value used by locate_event (exposed for tests).
double event_value(const World& w, const ControlCommand& cmd, EventKind kind);

}  // namespace hopper
