from .mpc import (
    LtiModel,
    MpcConfig,
    Trajectory,
    afti16_setup,
    condense_mpc,
    mpc_step,
    simulate_closed_loop,
    zoh_discretize,
)
from .rkf import (
    KfState,
    RkfConfig,
    kf_predict,
    rkf_update,
    rms_error,
    three_tank_setup,
)

__all__ = [
    "LtiModel", "MpcConfig", "Trajectory", "afti16_setup", "condense_mpc",
    "mpc_step", "simulate_closed_loop", "zoh_discretize",
    "KfState", "RkfConfig", "kf_predict", "rkf_update", "rms_error",
    "three_tank_setup",
]
