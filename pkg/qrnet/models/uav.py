# SPDX-License-Identifier: MIT
# Copyright 2026 The qrnet Authors

"""Six degree-of-freedom fixed-wing UAV.

State `x = (p_n, p_e, p_d, u, v, w, q_0, q_1, q_2, q_3, p, q, r)`: NED position (m), body velocity (m/s), scalar-first
attitude quaternion rotating inertial into body axes, and body rates (rad/s). Controls
`(delta_t, delta_a, delta_e, delta_r)`: throttle in [0, 1] and aileron, elevator, rudder deflections (rad).

The dynamics do not depend on `p_n`, `p_e`, and `q_0` is fixed by the unit norm, so LQR design and the learned
policies work in the ten reduced coordinates `(p_d, u, v, w, q_1, q_2, q_3, p, q, r)`.
"""
import dataclasses
import math
import os
from dataclasses import dataclass
from logging import getLogger
from pathlib import Path
from typing import List, Optional, Tuple, Union

import draccus
import numpy as np
from scipy.optimize import root
from scipy.special import expit

from qrnet.models.base import ControlBounds, CostQuadratic, DynamicsModel, EquilibriumPair
from qrnet.models.config import ModelConfig
from qrnet.models.sampling import SamplingDomain
from qrnet.utils import ConfigError, ConvergenceError, DimensionError, NumericalError, as_batch, check_finite

logger = getLogger(__name__)

DATA_DIR = Path(__file__).resolve().parent.parent / "data"

STATE_NAMES = ("p_n", "p_e", "p_d", "u", "v", "w", "q_0", "q_1", "q_2", "q_3", "p", "q", "r")
CONTROL_NAMES = ("delta_t", "delta_a", "delta_e", "delta_r")

POSITION = slice(0, 3)
VELOCITY = slice(3, 6)
QUATERNION = slice(6, 10)
RATES = slice(10, 13)
REDUCED_INDICES = np.array([2, 3, 4, 5, 7, 8, 9, 10, 11, 12])


@dataclass(frozen=True)
class UavParams:
    """Airframe, propulsion and aerodynamic constants. Units: kg, m, s, rad; coefficients are dimensionless."""

    name: str = "aerosonde"
    mass: float = 13.5
    Jx: float = 0.8244
    Jy: float = 1.135
    Jz: float = 1.759
    Jxz: float = 0.1204
    S_wing: float = 0.55
    b: float = 2.8956
    c: float = 0.18994
    rho: float = 1.2682
    g: float = 9.81
    e: float = 0.9
    R_prop: float = 0.254
    C_prop: float = 1.0
    k_motor: float = 80.0
    C_L0: float = 0.23
    C_L_alpha: float = 5.61
    C_L_q: float = 7.95
    C_L_delta_e: float = 0.13
    C_D0: float = 0.043
    C_D_q: float = 0.0
    C_D_delta_e: float = 0.0135
    C_m0: float = 0.0135
    C_m_alpha: float = -2.74
    C_m_q: float = -38.21
    C_m_delta_e: float = -0.99
    C_m_inf: float = 0.5
    alpha_stall: float = 0.4712
    blend_sharpness: float = 50.0
    C_Y_beta: float = -0.98
    C_Y_p: float = 0.0
    C_Y_r: float = 0.0
    C_Y_delta_a: float = 0.075
    C_Y_delta_r: float = 0.19
    C_ell_beta: float = -0.13
    C_ell_p: float = -0.51
    C_ell_r: float = 0.25
    C_ell_delta_a: float = 0.17
    C_ell_delta_r: float = 0.0024
    C_n_beta: float = 0.073
    C_n_p: float = 0.069
    C_n_r: float = -0.095
    C_n_delta_a: float = -0.011
    C_n_delta_r: float = -0.069
    delta_a_max: float = math.radians(30.0)
    delta_e_max: float = math.radians(30.0)
    delta_r_max: float = math.radians(30.0)

    def __post_init__(self):
        for field in ("mass", "S_wing", "b", "c", "rho", "g", "e", "R_prop", "C_prop", "k_motor"):
            if getattr(self, field) <= 0:
                raise ConfigError(f"UAV parameter {field} must be positive, got {getattr(self, field)}")
        if not 0.0 < self.alpha_stall < math.pi / 2:
            raise ConfigError(f"alpha_stall must lie in (0, pi/2), got {self.alpha_stall}")
        for field in ("delta_a_max", "delta_e_max", "delta_r_max"):
            if getattr(self, field) <= 0:
                raise ConfigError(f"{field} must be positive")
        try:
            np.linalg.cholesky(self.inertia)
        except np.linalg.LinAlgError as e:
            raise ConfigError("inertia matrix must be positive definite") from e

    @property
    def inertia(self) -> np.ndarray:
        return np.array([[self.Jx, 0.0, -self.Jxz], [0.0, self.Jy, 0.0], [-self.Jxz, 0.0, self.Jz]])

    @property
    def prop_gain(self) -> float:
        """`rho pi R_prop^2 C_prop / 2`, the factor in front of the propeller force."""
        return 0.5 * self.rho * math.pi * self.R_prop**2 * self.C_prop


# values that replace the airframe defaults in every experiment
FLIGHT_OVERRIDES = {"C_prop": 0.45, "k_motor": 32.0, "alpha_stall": math.radians(20.0), "C_m_inf": 0.8}


def load_uav_params(path: Union[str, os.PathLike, None] = None, apply_overrides: bool = True) -> UavParams:
    """Loads a parameter file (JSON, YAML or TOML). Bare file names are looked up in the packaged data directory."""
    path = resolve_params_file(path or "aerosonde.json")
    params = draccus.load(UavParams, str(path))
    if apply_overrides:
        params = dataclasses.replace(params, **FLIGHT_OVERRIDES)
    return params


def resolve_params_file(path: Union[str, os.PathLike], base_dir: Optional[Path] = None) -> Path:
    candidate = Path(path)
    if candidate.is_absolute() and candidate.exists():
        return candidate
    search = ([base_dir] if base_dir is not None else []) + [Path.cwd(), DATA_DIR]
    for directory in search:
        if (directory / candidate).exists():
            return (directory / candidate).resolve()
    raise ConfigError(f"UAV parameter file {path} not found in {[str(d) for d in search]}")


# kinematics


def rotation_matrix(q: np.ndarray) -> np.ndarray:
    """Body-to-inertial rotation for scalar-first quaternions, shape (..., 3, 3). Its transpose maps inertial to body."""
    q0, q1, q2, q3 = np.moveaxis(np.asarray(q, dtype=float), -1, 0)
    rows = [
        [q0**2 + q1**2 - q2**2 - q3**2, 2 * (q1 * q2 - q3 * q0), 2 * (q1 * q3 + q2 * q0)],
        [2 * (q1 * q2 + q3 * q0), q0**2 - q1**2 + q2**2 - q3**2, 2 * (q2 * q3 - q1 * q0)],
        [2 * (q1 * q3 - q2 * q0), 2 * (q2 * q3 + q1 * q0), q0**2 - q1**2 - q2**2 + q3**2],
    ]
    return np.stack([np.stack(row, axis=-1) for row in rows], axis=-2)


def omega_matrix(omega: np.ndarray) -> np.ndarray:
    p, q, r = np.moveaxis(np.asarray(omega, dtype=float), -1, 0)
    zero = np.zeros_like(p)
    rows = [[zero, -p, -q, -r], [p, zero, r, -q], [q, -r, zero, p], [r, q, -p, zero]]
    return np.stack([np.stack(row, axis=-1) for row in rows], axis=-2)


def quat_kinematics(q: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """`q' = 1/2 Omega(omega) q`. Omega is skew-symmetric, so the norm of `q` is a first integral.

    >>> quat_kinematics(np.array([1.0, 0.0, 0.0, 0.0]), np.array([0.4, 0.0, 0.0])).tolist()
    [0.0, 0.2, 0.0, 0.0]
    """
    return 0.5 * np.einsum("...ij,...j->...i", omega_matrix(omega), q)


def euler_to_quaternion(psi, theta, phi) -> np.ndarray:
    """Z-Y-X (yaw, pitch, roll) angles to a unit quaternion on the `q_0 >= 0` hemisphere.

    >>> euler_to_quaternion(0.0, 0.0, 0.0).tolist()
    [1.0, 0.0, 0.0, 0.0]
    """
    cy, sy = np.cos(np.asarray(psi) / 2), np.sin(np.asarray(psi) / 2)
    cp, sp = np.cos(np.asarray(theta) / 2), np.sin(np.asarray(theta) / 2)
    cr, sr = np.cos(np.asarray(phi) / 2), np.sin(np.asarray(phi) / 2)
    q = np.stack(
        [
            cy * cp * cr + sy * sp * sr,
            cy * cp * sr - sy * sp * cr,
            cy * sp * cr + sy * cp * sr,
            sy * cp * cr - cy * sp * sr,
        ],
        axis=-1,
    )
    return canonical_quaternion(q)


def quaternion_to_euler(q: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    q0, q1, q2, q3 = np.moveaxis(np.asarray(q, dtype=float), -1, 0)
    phi = np.arctan2(2 * (q0 * q1 + q2 * q3), q0**2 + q3**2 - q1**2 - q2**2)
    theta = np.arcsin(np.clip(2 * (q0 * q2 - q1 * q3), -1.0, 1.0))
    psi = np.arctan2(2 * (q0 * q3 + q1 * q2), q0**2 + q1**2 - q2**2 - q3**2)
    return psi, theta, phi


def canonical_quaternion(q: np.ndarray) -> np.ndarray:
    """Unit norm and `q_0 >= 0`; `q` and `-q` describe the same attitude."""
    q = np.asarray(q, dtype=float)
    q = q / np.linalg.norm(q, axis=-1, keepdims=True)
    return np.where(q[..., :1] < 0.0, -q, q)


# forces and moments


def blend(params: UavParams, alpha):
    """Stall blend `sigma_b`: about 0 below the stall angle and about 1 beyond it."""
    m, a0 = params.blend_sharpness, params.alpha_stall
    return 1.0 - expit(m * (a0 - alpha)) * expit(m * (a0 + alpha))


def aero_coefficients(params: UavParams, alpha):
    """Lift, drag and pitching-moment coefficients at angle of attack `alpha`, plus the blend weight."""
    alpha = np.asarray(alpha, dtype=float)
    sigma = blend(params, alpha)
    linear_lift = params.C_L0 + params.C_L_alpha * alpha
    flat_plate_lift = 2.0 * np.sign(alpha) * np.sin(alpha) ** 2 * np.cos(alpha)
    C_L = (1.0 - sigma) * linear_lift + sigma * flat_plate_lift

    aspect_ratio = params.b**2 / params.S_wing
    C_D = (1.0 - sigma) * (params.C_D0 + linear_lift**2 / (math.pi * params.e * aspect_ratio))
    C_D = C_D + sigma * 2.0 * np.sin(alpha) ** 2

    C_m = (1.0 - sigma) * np.tanh(params.C_m0 + params.C_m_alpha * alpha) + sigma * params.C_m_inf * np.sin(-alpha)
    return C_L, C_D, C_m, sigma


def air_data(V: np.ndarray):
    """Regularized airspeed `max(|V|, 1)`, angle of attack and sideslip."""
    u, v, w = np.moveaxis(V, -1, 0)
    speed = np.maximum(np.linalg.norm(V, axis=-1), 1.0)
    alpha = np.arctan2(w, u)
    beta = np.arcsin(np.clip(v / speed, -1.0, 1.0))
    return speed, alpha, beta


def forces_moments(params: UavParams, x: np.ndarray, u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Body-frame force (N) and moment (N m) from gravity, propeller and aerodynamics."""
    V, q, omega = x[..., VELOCITY], x[..., QUATERNION], x[..., RATES]
    p_rate, q_rate, r_rate = np.moveaxis(omega, -1, 0)
    delta_t, delta_a, delta_e, delta_r = np.moveaxis(u, -1, 0)
    speed, alpha, beta = air_data(V)
    dynamic = 0.5 * params.rho * speed**2 * params.S_wing

    gravity = params.mass * params.g * rotation_matrix(q)[..., 2, :]
    thrust = params.prop_gain * (params.k_motor**2 * delta_t - np.sum(V * V, axis=-1))

    C_L, C_D, C_m, _ = aero_coefficients(params, alpha)
    pitch_scale = params.c / (2.0 * speed)
    lift = dynamic * (C_L + params.C_L_q * pitch_scale * q_rate + params.C_L_delta_e * delta_e)
    drag = dynamic * (C_D + params.C_D_q * pitch_scale * q_rate + params.C_D_delta_e * delta_e)
    ca, sa = np.cos(alpha), np.sin(alpha)

    lateral_scale = params.b / (2.0 * speed)
    side = dynamic * (
        params.C_Y_beta * beta
        + params.C_Y_p * lateral_scale * p_rate
        + params.C_Y_r * lateral_scale * r_rate
        + params.C_Y_delta_a * delta_a
        + params.C_Y_delta_r * delta_r
    )
    force = gravity + np.stack([thrust - ca * drag + sa * lift, side, -sa * drag - ca * lift], axis=-1)

    roll = dynamic * params.b * (
        params.C_ell_beta * beta
        + params.C_ell_p * lateral_scale * p_rate
        + params.C_ell_r * lateral_scale * r_rate
        + params.C_ell_delta_a * delta_a
        + params.C_ell_delta_r * delta_r
    )
    pitch = dynamic * params.c * (C_m + params.C_m_q * pitch_scale * q_rate + params.C_m_delta_e * delta_e)
    yaw = dynamic * params.b * (
        params.C_n_beta * beta
        + params.C_n_p * lateral_scale * p_rate
        + params.C_n_r * lateral_scale * r_rate
        + params.C_n_delta_a * delta_a
        + params.C_n_delta_r * delta_r
    )
    return force, np.stack([roll, pitch, yaw], axis=-1)


def uav_rhs(params: UavParams, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    V, q, omega = x[..., VELOCITY], x[..., QUATERNION], x[..., RATES]
    force, moment = forces_moments(params, x, u)
    J = params.inertia
    position_rate = np.einsum("...ij,...j->...i", rotation_matrix(q), V)
    velocity_rate = np.cross(V, omega) + force / params.mass
    rate_rate = (moment - np.cross(omega, omega @ J.T)) @ np.linalg.inv(J).T
    return np.concatenate([position_rate, velocity_rate, quat_kinematics(q, omega), rate_rate], axis=-1)


def compute_trim(params: UavParams, airspeed: float, tol: float = 1e-12) -> EquilibriumPair:
    """Straight and level trim at `airspeed`: solves for angle of attack, throttle and elevator.

    The trim attitude has zero yaw and roll and pitch equal to the angle of attack.
    """
    if not 0.0 < airspeed < 100.0:
        raise ConfigError(f"airspeed must lie in (0, 100) m/s, got {airspeed}")

    def trim_state(alpha):
        x = np.zeros(13)
        x[VELOCITY] = airspeed * np.array([math.cos(alpha), 0.0, math.sin(alpha)])
        x[QUATERNION] = [math.cos(alpha / 2), 0.0, math.sin(alpha / 2), 0.0]
        return x

    def residual(unknowns):
        alpha, delta_t, delta_e = unknowns
        rates = uav_rhs(params, trim_state(alpha), np.array([delta_t, 0.0, delta_e, 0.0]))
        return np.array([rates[3], rates[5], rates[11]])

    solution = root(residual, np.array([0.05, 0.5, 0.0]), method="hybr", tol=tol)
    final = float(np.max(np.abs(residual(solution.x))))
    if not solution.success or final > 1e-8:
        raise ConvergenceError(f"trim did not converge at {airspeed} m/s: {solution.message}", residual=final)
    alpha, delta_t, delta_e = solution.x
    x_f = trim_state(alpha)
    u_f = np.array([delta_t, 0.0, delta_e, 0.0])
    logger.info(
        f"Trim at {airspeed} m/s: alpha={math.degrees(alpha):.3f} deg, delta_t={delta_t:.4f}, "
        f"delta_e={math.degrees(delta_e):.3f} deg, residual={final:.2e}"
    )
    return EquilibriumPair(x_f, u_f)


def uav_bounds(params: UavParams) -> ControlBounds:
    limits = np.array([params.delta_a_max, params.delta_e_max, params.delta_r_max])
    return ControlBounds(np.concatenate([[0.0], -limits]), np.concatenate([[1.0], limits]))


# sampling


@SamplingDomain.register_subclass("uav")
@dataclass
class UavDomain(SamplingDomain):
    """Uniform draws of altitude, velocity, Euler angles and rates about trim. Angles in degrees.

    `scale` shrinks every interval about its center (0.5 gives the half-scale domain).
    """

    altitude: float = 150.0
    velocity: float = 5.0
    yaw: float = 180.0
    pitch: float = 90.0
    roll: float = 180.0
    rates: float = 30.0
    scale: float = 1.0

    def validate(self) -> None:
        if not 0.0 < self.scale <= 1.0:
            raise ConfigError(f"domain scale must lie in (0, 1], got {self.scale}")

    def draw(self, rng, count, model):
        s = self.scale
        x_f = model.equilibrium.x_f
        x = np.zeros((count, 13))
        x[:, 2] = x_f[2] + rng.uniform(-self.altitude * s, self.altitude * s, count)
        x[:, VELOCITY] = x_f[VELOCITY] + rng.uniform(-self.velocity * s, self.velocity * s, (count, 3))
        psi = np.radians(rng.uniform(-self.yaw * s, self.yaw * s, count))
        theta = np.radians(rng.uniform(-self.pitch * s, self.pitch * s, count))
        phi = np.radians(rng.uniform(-self.roll * s, self.roll * s, count))
        x[:, QUATERNION] = euler_to_quaternion(psi, theta, phi)
        x[:, RATES] = np.radians(rng.uniform(-self.rates * s, self.rates * s, (count, 3)))
        return x


# the model


@ModelConfig.register_subclass("uav")
@dataclass
class UavConfig(ModelConfig):
    params_file: str = "aerosonde.json"
    airspeed: float = 20.0
    apply_overrides: bool = True
    h_ceil: float = 50.0
    Q_h: Optional[float] = None  # defaults to 1 / h_ceil^2
    Q_V: Optional[List[float]] = None  # diagonal; defaults to (10 / airspeed^2, 1, 1)
    Q_q: float = 5.0
    omega_scale_deg: float = 30.0  # Q_omega = I / omega_scale^2
    R_diag: Optional[List[float]] = None  # defaults to (0.1, 0.1 / da^2, 1 / de^2, 1 / dr^2)
    envelope: float = 300.0  # altitude band (m) beyond which simulations abort
    horizon: float = 5.0
    t_max: float = 120.0

    def resolve_paths(self, base_dir: Path) -> None:
        self.params_file = str(resolve_params_file(self.params_file, base_dir))

    def build(self) -> "UavModel":
        return UavModel(self)


class UavModel(DynamicsModel):
    name = "uav"

    def __init__(self, config: UavConfig, params: Optional[UavParams] = None):
        self.config = config
        self.params = params or load_uav_params(config.params_file, config.apply_overrides)
        p = self.params
        self.h_ceil = config.h_ceil
        self.Q_h = 1.0 / config.h_ceil**2 if config.Q_h is None else config.Q_h
        self.Q_V = np.diag(config.Q_V if config.Q_V is not None else [10.0 / config.airspeed**2, 1.0, 1.0])
        self.Q_q = config.Q_q * np.eye(3)
        self.Q_omega = np.eye(3) / math.radians(config.omega_scale_deg) ** 2
        if config.R_diag is not None:
            R = np.diag(config.R_diag)
        else:
            R = np.diag([0.1, 0.1 / p.delta_a_max**2, 1.0 / p.delta_e_max**2, 1.0 / p.delta_r_max**2])
        super().__init__(compute_trim(p, config.airspeed), uav_bounds(p), R)

    @property
    def n_states(self) -> int:
        return 13

    @property
    def n_controls(self) -> int:
        return 4

    @property
    def reduced_indices(self) -> np.ndarray:
        return REDUCED_INDICES

    @property
    def residual_mask(self) -> np.ndarray:
        mask = np.ones(13, dtype=bool)
        mask[:2] = False
        return mask

    @property
    def horizon(self) -> float:
        return self.config.horizon

    @property
    def t_max(self) -> float:
        return self.config.t_max

    def dynamics_rhs(self, x, u):
        x = check_finite("x", as_batch(x, 13))
        drift = np.max(self.constraint_drift(x), initial=0.0)
        if drift > 1e-3:
            raise DimensionError(f"quaternion norm is off by {drift:.2e}; states must satisfy |q| = 1")
        return super().dynamics_rhs(x, u)

    def rhs(self, x, u):
        return uav_rhs(self.params, np.asarray(x, dtype=float), np.asarray(u, dtype=float))

    def control_matrix(self, x):
        # the dynamics are affine in u, so columns are exact differences
        x = np.asarray(x, dtype=float)
        base = self.rhs(x, np.zeros(x.shape[:-1] + (4,)))
        columns = [self.rhs(x, np.broadcast_to(unit, x.shape[:-1] + (4,))) - base for unit in np.eye(4)]
        return np.stack(columns, axis=-1)

    def state_cost(self, x):
        x = np.asarray(x, dtype=float)
        x_f = self.equilibrium.x_f
        altitude = self.h_ceil * np.tanh((x[..., 2] - x_f[2]) / self.h_ceil)
        dV = x[..., VELOCITY] - x_f[VELOCITY]
        dq = x[..., 7:10] - x_f[7:10]
        dw = x[..., RATES] - x_f[RATES]
        return (
            self.Q_h * altitude**2
            + np.einsum("...i,ij,...j->...", dV, self.Q_V, dV)
            + np.einsum("...i,ij,...j->...", dq, self.Q_q, dq)
            + np.einsum("...i,ij,...j->...", dw, self.Q_omega, dw)
        )

    def cost_state_gradient(self, x):
        x = np.asarray(x, dtype=float)
        x_f = self.equilibrium.x_f
        grad = np.zeros_like(x)
        t = np.tanh((x[..., 2] - x_f[2]) / self.h_ceil)
        grad[..., 2] = 2.0 * self.Q_h * self.h_ceil * t * (1.0 - t * t)
        grad[..., VELOCITY] = 2.0 * (x[..., VELOCITY] - x_f[VELOCITY]) @ self.Q_V
        grad[..., 7:10] = 2.0 * (x[..., 7:10] - x_f[7:10]) @ self.Q_q
        grad[..., RATES] = 2.0 * (x[..., RATES] - x_f[RATES]) @ self.Q_omega
        return grad

    def cost_quadratic(self) -> CostQuadratic:
        Q = np.zeros((10, 10))
        Q[0, 0] = self.Q_h
        Q[1:4, 1:4] = self.Q_V
        Q[4:7, 4:7] = self.Q_q
        Q[7:10, 7:10] = self.Q_omega
        return CostQuadratic(Q, self.control_weight.copy())

    # reduced coordinates

    def from_reduced(self, z):
        z = np.asarray(z, dtype=float)
        x = np.zeros(z.shape[:-1] + (13,))
        x[..., :2] = self.equilibrium.x_f[:2]
        x[..., REDUCED_INDICES] = z
        vector_part = z[..., 4:7]
        x[..., 6] = np.sqrt(np.maximum(0.0, 1.0 - np.sum(vector_part**2, axis=-1)))
        return x

    def embedding_jacobian(self, x):
        x = np.asarray(x, dtype=float)
        if abs(x[6]) < 1e-8:
            # the reduced chart ends at a half-turn rotation
            raise NumericalError(f"no reduced-coordinate Jacobian at q_0 = {x[6]:.1e}, a half turn from level")
        E = np.eye(13)[:, REDUCED_INDICES]
        # q_0 = sqrt(1 - |q_bar|^2)
        E[6, 4:7] = -x[7:10] / x[6]
        return E

    def project(self, x):
        x = np.array(x, dtype=float)
        x[..., QUATERNION] = canonical_quaternion(x[..., QUATERNION])
        return x

    def constraint_drift(self, x):
        return np.abs(np.linalg.norm(np.asarray(x, dtype=float)[..., QUATERNION], axis=-1) - 1.0)

    def envelope_violated(self, x) -> bool:
        return bool(abs(x[2] - self.equilibrium.x_f[2]) > self.config.envelope)

    def default_domain(self) -> UavDomain:
        return UavDomain()

    def describe(self) -> dict:
        return {**super().describe(), "airspeed": self.config.airspeed, "params": self.params.name}
