"""Backtracking reference governor for the tethered UAV.

A far reference can drag the closed loop through transients that slacken
the cable.  The governor replaces it with a chain of intermediate setpoints
along the attainable interpolation path, each paired with an
invariant-ball radius pair ``(dx_alpha, dx_theta)``: starting inside a
waypoint's ball guarantees convergence to that waypoint with positive
tension throughout.  The chain is built offline from the final reference
backwards, stepping by one ball radius (minus half the global floor) at a
time, so that each waypoint's setpoint offset lies inside its
predecessor's ball.  Online, a supervisor applies the waypoints in reverse
order and advances as soon as the measured elevation and pitch errors enter
the next ball.

Radii come from the tension-safety inequality: with peak error norms
``l_alpha`` and ``l_theta`` the tension stays positive when

    (t_bar + sqrt(2)*m*g + m*a_rad) * l_theta
      + (2*m*v_max + m*r_max*(k_pa + k_da)) * l_theta * l_alpha  <  t_bar

where ``a_rad`` bounds the radial acceleration (``lambda1``) and ``v_max``,
``r_max`` come from the radial envelope.  The small-gain bound matrix then
maps admissible peak norms back to initial-error radii.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import equilibria
from .analysis import GainCertificate, RadialEnvelope
from .control import GainConfig
from .equilibria import Setpoint, interpolate_path, interpolate_setpoint
from .plant import FullState, PlantParams


class InfeasibleRadiiError(ValueError):
    """Raised when no positive invariant-ball radii exist for a setpoint."""


class PlanError(ValueError):
    """Raised when waypoint-chain construction cannot complete."""


@dataclass(frozen=True, slots=True)
class Waypoint:
    """A chain entry: setpoint, path parameter, and invariant-ball radii.

    ``s`` runs from 0 at the final reference to 1 at the start of the path,
    increasing along the waypoint list.
    """

    sp: Setpoint
    s: float
    dx_alpha: float  # elevation ball radius [rad]
    dx_theta: float  # attitude ball radius [rad]

    def __post_init__(self) -> None:
        if not 0.0 <= self.s <= 1.0:
            raise ValueError(f"path parameter s must lie in [0, 1], got {self.s}")
        if not (self.dx_alpha > 0.0 and self.dx_theta > 0.0):
            raise ValueError("ball radii must be strictly positive, got "
                             f"({self.dx_alpha}, {self.dx_theta})")


@dataclass(frozen=True, slots=True)
class WaypointPlan:
    """Ordered waypoint chain; index 0 is the final reference."""

    waypoints: tuple[Waypoint, ...]
    min_radii: tuple[float, float]

    def __post_init__(self) -> None:
        if not self.waypoints:
            raise ValueError("a plan needs at least the final waypoint")
        s_values = [w.s for w in self.waypoints]
        if any(b <= a for a, b in zip(s_values, s_values[1:])):
            raise ValueError("path parameters must increase along the chain")


@dataclass(slots=True)
class GovernorState:
    """Supervisor state: active waypoint index and recorded switch times."""

    active_index: int
    switch_times: list[float] = field(default_factory=list)


def _radii_for_tension(t_bar: float, g: GainConfig, p: PlantParams,
                       cert: GainCertificate, r_env: RadialEnvelope,
                       split: float = 0.75,
                       u3_inf: float | None = None) -> tuple[float, float]:
    """Invariant-ball radii for a waypoint of equilibrium tension ``t_bar``.

    The peak-norm budget pair is placed on the midpoint ray of the band
    where both back-solved radii are positive, ``l_alpha = kappa *
    l_theta / gamma_in`` with ``kappa = (1 + gamma_in*gamma_out)/2``.  Along
    that ray the tension-safety inequality is a quadratic in ``l_theta``,

        (coeff*kappa/gamma_in) * l_theta**2 + d * l_theta < t_bar,

    solved in closed form; ``split`` keeps the budget strictly interior.
    Inverting the small-gain bound matrix then gives

        dx_alpha = (1 - gin*gout)/(2*gin) * l_theta
        dx_theta = (1 - gin*gout)/2       * l_theta

    both strictly positive and monotone in ``t_bar``, so radii at any
    attainable waypoint dominate the ``eps``-floor componentwise.
    ``u3_inf`` switches the radial feed-through bound from ``m*lambda1``
    (the certified radial acceleration bound) to a configured winch-torque
    norm.
    """
    if not t_bar > 0.0:
        raise InfeasibleRadiiError(f"equilibrium tension must be positive, got {t_bar}")
    if not 0.0 < split < 1.0:
        raise ValueError(f"split must lie in (0, 1), got {split}")
    if not cert.small_gain_ok:
        raise InfeasibleRadiiError("certificate does not establish the small-gain "
                                   "conditions; radii are undefined")
    gin, gout = cert.gamma_in, cert.gamma_out
    product = gin * gout
    kappa = 0.5 * (1.0 + product)
    feed = p.m * g.lambda1 if u3_inf is None else p.m * u3_inf
    d = t_bar + math.sqrt(2.0) * p.m * p.g + feed
    coeff = 2.0 * p.m * r_env.vel_bound + p.m * r_env.r_max * (g.k_pa + g.k_da)
    a_quad = coeff * kappa / gin
    l_theta_quad = (-d + math.sqrt(d * d + 4.0 * a_quad * t_bar)) / (2.0 * a_quad)
    l_theta = split * min(l_theta_quad, g.theta_tilde_max)
    return ((1.0 - product) / (2.0 * gin) * l_theta,
            0.5 * (1.0 - product) * l_theta)


def min_radii(g: GainConfig, p: PlantParams, cert: GainCertificate,
              r_env: RadialEnvelope, split: float = 0.75,
              u3_inf: float | None = None) -> tuple[float, float]:
    """Global radius floor: ball radii evaluated at the tension margin ``eps``.

    Every attainable waypoint has equilibrium tension above ``eps``, so this
    pair lower-bounds every waypoint's radii.  Requires ``eps > 0``.
    """
    if not g.eps > 0.0:
        raise InfeasibleRadiiError(
            "the governor needs a positive tension margin eps to floor the "
            f"ball radii, got eps={g.eps}")
    return _radii_for_tension(g.eps, g, p, cert, r_env, split, u3_inf)


def ball_radii(sp: Setpoint, g: GainConfig, p: PlantParams,
               cert: GainCertificate, r_env: RadialEnvelope,
               split: float = 0.75,
               u3_inf: float | None = None) -> tuple[float, float]:
    """Invariant-ball radii for a specific waypoint setpoint.

    Evaluated at the waypoint's own equilibrium tension; monotonicity of the
    construction in the tension guarantees the result dominates the
    ``eps``-floor componentwise for every attainable waypoint.
    """
    t_bar = equilibria.equilibrium_tension(sp, p, hover_tension=g.hover_tension)
    return _radii_for_tension(t_bar, g, p, cert, r_env, split, u3_inf)


def switch_ready(state: FullState, next_wp: Waypoint) -> bool:
    """True when the measured errors lie inside the next waypoint's ball."""
    d_alpha = ((state.alpha - next_wp.sp.alpha_bar) ** 2
               + state.alpha_dot ** 2)
    d_theta = ((state.theta - next_wp.sp.theta_bar) ** 2
               + state.theta_dot ** 2)
    return (d_alpha <= next_wp.dx_alpha ** 2
            and d_theta <= next_wp.dx_theta ** 2)


def governor_step(state: FullState, plan: WaypointPlan, gs: GovernorState,
                  t: float = 0.0) -> GovernorState:
    """Advance the supervisor to the most final waypoint whose ball admits
    the state.

    Each admitting ball guarantees convergence with positive tension, so the
    supervisor may skip any number of intermediate waypoints at once (a
    state already inside the final reference's ball jumps straight to it).
    The applied reference stays piecewise constant; the instant of each
    reference change is recorded.  The index never increases."""
    if not 0 <= gs.active_index < len(plan.waypoints):
        raise ValueError(f"active_index {gs.active_index} outside the plan")
    for k in range(gs.active_index):
        if switch_ready(state, plan.waypoints[k]):
            return GovernorState(active_index=k,
                                 switch_times=gs.switch_times + [t])
    return gs


def _march_segment(waypoints: list[Waypoint], near: Setpoint, far: Setpoint,
                   seg_index: int, n_segs: int, last_segment: bool,
                   floor: tuple[float, float],
                   g: GainConfig, p: PlantParams, cert: GainCertificate,
                   r_env: RadialEnvelope, split: float,
                   u3_inf: float | None, max_waypoints: int) -> None:
    """March waypoints from ``near`` (the final-reference side) toward ``far``.

    The step out of each waypoint is its own ball radius minus half the
    global floor, expressed as a fraction of the remaining segment; the
    chain therefore satisfies the offset condition against the predecessor
    by construction.  On the last segment the march stops once the remaining
    span fits inside the chain end's ball, leaving the plan start-adjacent.
    """
    d_alpha, d_theta = floor
    span_a = abs(far.alpha_bar - near.alpha_bar)
    span_t = abs(far.theta_bar - near.theta_bar)
    u = 0.0
    while True:
        prev = waypoints[-1]
        fractions = []
        if span_a > 0.0:
            fractions.append((prev.dx_alpha - d_alpha / 2.0) / span_a)
        if span_t > 0.0:
            fractions.append((prev.dx_theta - d_theta / 2.0) / span_t)
        if not fractions:
            # purely radial segment: no angular ball constraint applies
            return
        step = min(fractions)
        if step <= 0.0:
            raise PlanError("waypoint ball radii fell below the spacing floor")
        for _ in range(10):
            u_next = min(1.0, u + step)
            sp_next = interpolate_setpoint(near, far, u_next)
            if (abs(sp_next.alpha_bar - prev.sp.alpha_bar)
                    <= prev.dx_alpha + 1e-12
                    and abs(sp_next.theta_bar - prev.sp.theta_bar)
                    <= prev.dx_theta + 1e-12):
                break
            step *= 0.5  # guard float noise at segment corners
        else:
            raise PlanError("could not place a waypoint inside the "
                            "predecessor's ball")
        if u_next >= 1.0 and last_segment:
            # remaining span fits in the chain end's ball; the start state
            # (zero rates) is therefore already admissible
            return
        radii = ball_radii(sp_next, g, p, cert, r_env, split, u3_inf)
        s_global = (seg_index + u_next) / n_segs
        waypoints.append(Waypoint(sp=sp_next, s=s_global,
                                  dx_alpha=radii[0], dx_theta=radii[1]))
        if len(waypoints) > max_waypoints:
            raise PlanError(f"waypoint count exceeded {max_waypoints}; ball "
                            "radii are at the numerical floor")
        u = u_next
        if u >= 1.0:
            return


def backtrack_plan(start: Setpoint, final: Setpoint, g: GainConfig,
                   p: PlantParams, cert: GainCertificate,
                   r_env: RadialEnvelope, split: float = 0.75,
                   u3_inf: float | None = None,
                   max_waypoints: int = 10_000) -> WaypointPlan:
    """Build the waypoint chain from ``final`` back to ``start``.

    The interpolation path (one segment, or two joined at the vertical
    apex) is certified attainable first; the chain then marches backwards
    per segment.  When the whole path fits inside the final reference's
    ball the plan is the single final waypoint.
    """
    path = interpolate_path(start, final, g.eps, p)
    floor = min_radii(g, p, cert, r_env, split, u3_inf)
    final_radii = ball_radii(final, g, p, cert, r_env, split, u3_inf)
    waypoints = [Waypoint(sp=final, s=0.0, dx_alpha=final_radii[0],
                          dx_theta=final_radii[1])]
    # path segments run start -> final; march them reversed, final side first
    segments = list(reversed([(seg_end, seg_start)
                              for seg_start, seg_end in path.segments]))
    n_segs = len(segments)
    for i, (near, far) in enumerate(segments):
        _march_segment(waypoints, near, far, i, n_segs,
                       last_segment=(i == n_segs - 1), floor=floor,
                       g=g, p=p, cert=cert, r_env=r_env, split=split,
                       u3_inf=u3_inf, max_waypoints=max_waypoints)
    return WaypointPlan(waypoints=tuple(waypoints), min_radii=floor)
