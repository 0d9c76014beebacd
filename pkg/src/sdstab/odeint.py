"""Fixed-step explicit integration of controlled ODEs.

Classical 4th-order Runge-Kutta on a uniform grid: runs are bit-reproducible,
which the certificate regression tests rely on. Blow-up (norm above a
threshold, or non-finite values) truncates the trajectory and sets the
escape flag; it is a reported outcome, not an exception.
"""

from dataclasses import dataclass

import numpy as np

from .sysmodel import Trajectory, state_vector


@dataclass(frozen=True)
class IntegrationConfig:
    step: float = 1e-3
    blowup_norm: float = 1e6

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError("integration step must be positive")
        if self.blowup_norm <= 1:
            raise ValueError("blow-up threshold must exceed 1")


def integrate(sys, x0, u, window, cfg=IntegrationConfig()):
    """Integrate dx/dt = rhs(x, u(t - t0)) over window = (t0, t1).

    The control's clock starts at 0 at the window's left edge. The final
    grid point lands on t1 exactly (a shorter last step is taken when the
    window is not an integer number of steps).
    """
    t0, t1 = float(window[0]), float(window[1])
    if not t1 > t0:
        raise ValueError("integration window must have positive length")
    x = state_vector(x0)
    if x.size != sys.dim_state:
        raise ValueError("initial state dimension mismatch")

    h = cfg.step
    span = t1 - t0
    n_steps = int(np.ceil(span / h - 1e-12))
    record_u = u is not None

    times = [t0]
    states = [x.copy()]
    inputs = [u.value(0.0)] if record_u else None
    escaped = False
    escape_time = None

    def f(tau, xx):
        uu = u.value(tau) if u is not None else np.zeros(sys.dim_input)
        return sys.rhs(xx, uu), uu

    tau = 0.0
    for k in range(n_steps):
        hk = min(h, span - tau)
        if hk <= 0:
            break
        k1, _ = f(tau, x)
        u_half = u.value(tau + hk / 2) if u is not None else None
        uu_mid = u_half if u is not None else np.zeros(sys.dim_input)
        k2 = sys.rhs(x + (hk / 2) * k1, uu_mid)
        k3 = sys.rhs(x + (hk / 2) * k2, uu_mid)
        k4, u_end = f(tau + hk, x + hk * k3)
        x_new = x + (hk / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        tau += hk
        if tau >= span - 1e-12:
            tau = span
        if not np.all(np.isfinite(x_new)) or float(np.linalg.norm(x_new)) > cfg.blowup_norm:
            escaped = True
            escape_time = t0 + tau
            break
        x = x_new
        times.append(t0 + tau)
        states.append(x.copy())
        if record_u:
            inputs.append(u_end)

    return Trajectory(
        times=np.array(times),
        states=np.array(states),
        inputs=np.array(inputs) if record_u else None,
        escaped=escaped,
        escape_time=escape_time,
    )


def rk4_autonomous_step(f, x, h):
    """One classical RK4 step of size h for an autonomous field f."""
    k1 = f(x)
    k2 = f(x + (h / 2) * k1)
    k3 = f(x + (h / 2) * k2)
    k4 = f(x + h * k3)
    return x + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


def max_excursion(traj, x_ref):
    """Largest distance of the trajectory from a reference point."""
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    x_ref = state_vector(x_ref)
    return float(np.max(np.linalg.norm(traj.states - x_ref[None, :], axis=1)))
