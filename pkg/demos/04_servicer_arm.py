"""
A 7-DOF arm with a 500 kg payload on a 1.5 t servicer.

The canned scenario caps the end-effector speed at 0.1 m/s and runs the
controllers at 100 Hz.  The log is written as CSV plus a JSON summary.
"""
import sys
import tempfile

from freeflyer import scenarios, sim

cfg = scenarios.canned("esa-dextrous")
print(f"{cfg.model.n} joints, payload {cfg.model.payload.mass:.0f} kg, base {cfg.model.base.mass:.0f} kg")
print(f"total mass {cfg.model.total_mass:.0f} kg, control rate {cfg.control_rate:.0f} Hz")

log = sim.run(cfg)
s = log.summary
print(f"final position error : {s['final_error'] * 1e3:.4f} mm")
print(f"peak attitude error  : {s['peak_attitude_error']:.2e} rad")
print(f"max CoM drift        : {s['max_com_drift']:.1e} m")

out = sys.argv[1] if len(sys.argv) > 1 else tempfile.mkdtemp()
for path in log.write(out, cfg.name):
    print(path)
