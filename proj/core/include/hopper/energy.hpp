#pragma once

// Energy accounting across the mechanical-pneumatic pipeline: pump work,
// tank energy, actuator work, liftoff kinetic energy, and a per-cycle
// conservation audit.

#include <vector>

#include "hopper/point_mass.hpp"
#include "hopper/sim.hpp"

namespace hopper {

// Trapezoidal work integral along a logged path (signed: sum F * dL).
double path_work(const std::vector<double>& leg_m, const std::vector<double>& force_n);

// Work absorbed by the pump over a compression segment (positive magnitude).
double pump_work(const std::vector<double>& leg_m, const std::vector<double>& force_n);

// Work delivered by the actuator over a powered extension segment.
double actuator_work(const std::vector<double>& leg_m,
                     const std::vector<double>& force_n);

// Energy added to the tank between two pressures: V * (P_now - P_prev).
double tank_energy_delta(double p_prev_pa, double p_now_pa, double v_tank_m3);

// Stored energy above atmosphere: V * (P - P0).
double tank_energy(double p_pa, double v_tank_m3, double p0_pa = kAtmospherePa);

// Optional isothermal available-work metric: V * (P ln(P/P0) - (P - P0)).
double tank_energy_isothermal(double p_pa, double v_tank_m3,
                              double p0_pa = kAtmospherePa);

struct EnergyCycle {
  int cycle = 0;
  double w_pump_j = 0;        // negative work done by the pump (magnitude)
  double delta_e_tank_j = 0;  // V * (P_end - P_start)
  double e_tank_j = 0;        // stored above atmosphere at cycle end
  double w_pa_j = 0;          // actuator work on enhanced hops
  double ke_liftoff_j = 0;
  double w_motor_j = 0;       // signed motor work over the cycle
  double impact_loss_j = 0;   // plastic impact + joint-stop losses
  double audit_residual_j = 0;
  double throughput_j = 0;
  bool released = false;
  bool complete = true;
};

struct EnergyLedger {
  std::vector<EnergyCycle> cycles;
  double total_w_pump_j = 0;
  double total_delta_e_tank_j = 0;
  double total_w_pa_j = 0;
  double final_e_tank_j = 0;
};

EnergyLedger ledger_from_point_trace(const PointTrace& trace,
                                     const PointMassConfig& cfg,
                                     double tank_volume_m3);

EnergyLedger ledger_from_sim_trace(const SimTrace& trace, const RobotModel& model,
                                   const PneumaticConfig& pneu, double tank_volume_m3);

}  // namespace hopper
