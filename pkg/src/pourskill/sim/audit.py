"""Self-checks of the plant against independent references."""
from __future__ import annotations

import numpy as np

from ..core import ContainerSpec
from .geometry import MAX_TILT_DEG, max_retained_volume, oracle_max_retained_volume
from .plant import FlowModel, initial_state, step

GRID_ANGLES = tuple(float(a) for a in np.linspace(0.0, 85.0, 18))


def geometry_audit(containers, angles=GRID_ANGLES, resolution: int = 2000) -> float:
    """Largest relative gap between the closed form and the slicing oracle over a grid."""
    worst = 0.0
    for c in containers:
        for a in angles:
            exact = max_retained_volume(c, a)
            ref = oracle_max_retained_volume(c, a, resolution)
            worst = max(worst, abs(exact - ref) / max(ref, 1e-9 * c.capacity_ml))
    return worst


def conservation_audit(n_traj: int, n_steps: int = 600, seed: int = 0, flow: FlowModel = FlowModel()):
    """Random tilt trajectories. Returns (max |sum of volumes - total| in mL, receiver monotone?)."""
    rng = np.random.default_rng(seed)
    worst, monotone = 0.0, True
    for _ in range(n_traj):
        c = ContainerSpec("audit", rng.uniform(60, 300), rng.uniform(40, 130))
        total = rng.uniform(0.05, 1.0) * c.capacity_ml
        state = initial_state(c, total, rng.uniform(0, 10))
        omegas = rng.uniform(-90, 90, n_steps)
        prev = state.v_recv_ml
        for w in omegas:
            state = step(state, float(w), flow)
            worst = max(worst, abs(state.total_ml - total))
            if state.v_recv_ml < prev:
                monotone = False
            prev = state.v_recv_ml
    return worst, monotone


__all__ = ["GRID_ANGLES", "MAX_TILT_DEG", "conservation_audit", "geometry_audit"]
