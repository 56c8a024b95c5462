"""
A closed loop in joint space does not close for the base attitude.

Starting at rest with zero momentum, the two joints trace a loop and come
back exactly to where they started.  The system CoM never moves, yet the
base ends up yawed.  Tracing the same loop forward and then backward
undoes the rotation.
"""
import numpy as np

from freeflyer import scenarios, sim

model = scenarios.planar_two_link()

loop = sim.experiment_nonholonomy(model, scenarios.reference_cycle())
print(f"net base yaw after one loop : {np.degrees(loop['net_rotation']):.4f} deg")
print(f"joint closure error         : {loop['joint_closure_error']:.1e} rad")
print(f"max CoM drift               : {loop['com_drift']:.1e} m")

there_and_back = sim.experiment_nonholonomy(model, scenarios.reference_cycle(reverse=True))
print(f"net yaw, forward then back  : {there_and_back['net_rotation']:.1e} rad")

# The arm can reorient the base without any external torque.
state = loop["log"].states[-1]
print("base quaternion after loop  :", np.round(state[3:7], 6))
