"""
Holding the base still while the arm moves.

An attitude PD loop alone reacts only after the base has started to turn.
Feeding forward the moment the arm is about to exert on the mount cancels
most of the disturbance before it shows up.  A weak actuator cannot supply
that moment, which is where saturation appears.
"""
import numpy as np

from freeflyer import scenarios, sim

cfg = scenarios.reference_reach()
res = sim.experiment_attitude_compensation(cfg, torque_limits=(0.2, 0.5, 1.0, 5.0))

print(f"peak attitude error, PD only     : {np.degrees(res['pd_only_peak']) * 3600:.1f} arcsec")
print(f"peak attitude error, PD + ff     : {np.degrees(res['feedforward_peak']) * 3600:.1f} arcsec")
print()
print("actuator limit [N m]  saturated ticks  peak error [arcsec]")
for row in res["sweep"]:
    print(f"{row['torque_limit']:>20.1f}  {row['saturation_fraction']:>15.1%}  "
          f"{np.degrees(row['peak_attitude_error']) * 3600:>19.1f}")

ff = res["logs"]["feedforward"].ticks["feedforward"]
print()
print(f"largest feedforward torque: {np.abs(ff).max():.3f} N m")
