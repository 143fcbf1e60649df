from .geometry import critical_angle, max_retained_volume, oracle_max_retained_volume
from .plant import (
    FlowModel,
    ForceSensor,
    SensorModel,
    SimState,
    dump_trajectory,
    initial_state,
    read_force,
    run_to_equilibrium,
    step,
)
