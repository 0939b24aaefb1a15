"""AC/DC power flow and continuation to the maximum-available-power point.

State is (delta, U) at the reduced converter buses, angles against the
common source phase.  The balance equations, scaled by 1/U as in the
small-signal model, are

    gP_i = f_i sin(d_i) + sum_{j!=i} B_ij U_j sin(d_i - d_j) - P_ci(U_i)/U_i
    gQ_i = -B_ii U_i - sum_{j!=i} B_ij U_j cos(d_i - d_j) - f_i cos(d_i)
           - Q_ci(U_i)/U_i

with converter injections P_ci, Q_ci resolved through the CP-CEA model at
every iteration (full coupling).  The Newton Jacobian is the exact
derivative of (gP, gQ); the theory diagonal diag(P_Ni rho_i T_i) is
carried separately for diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .casefile import CaseFile
from .converter import (
    ConverterState,
    LccParams,
    rated_order,
    sensitivity_T,
    solve_state,
    state_derivatives,
)
from .errors import ConverterInfeasible, GridStrengthError
from .netmodel import ReducedNetwork, reduce_case

U_BAND = (0.2, 2.0)
NEWTON_TOL = 1e-8
NEWTON_MAX_ITER = 50


@dataclass(frozen=True)
class GridState:
    delta: np.ndarray
    U: np.ndarray
    converter_states: tuple[ConverterState, ...]


@dataclass(frozen=True)
class JacobianBlocks:
    J_pd: np.ndarray
    J_pv: np.ndarray
    J_qd: np.ndarray
    J_qv: np.ndarray
    dc_diag: np.ndarray     # theory diagonal P_Ni rho_i T_i, system pu

    def full(self) -> np.ndarray:
        top = np.hstack([self.J_pd, self.J_pv])
        bot = np.hstack([self.J_qd, self.J_qv])
        return np.vstack([top, bot])


@dataclass(frozen=True)
class Diverged:
    reason: str
    trace: tuple[float, ...]    # mismatch inf-norms per iteration


@dataclass(frozen=True)
class MapPoint:
    lam: float
    U: tuple[float, ...]
    P: tuple[float, ...]        # system pu, inverter side
    Q: tuple[float, ...]
    mu: tuple[float, ...]       # rad
    sigma_min: float


@dataclass(frozen=True)
class ContinuationResult:
    lambda_max: float
    state_at_map: GridState
    mu_at_map: tuple[float, ...]    # rad
    diverged_at: float
    history: tuple[MapPoint, ...]


@dataclass(frozen=True)
class PreparedCase:
    """Reduced network plus converter constants, reused across solves."""

    case: CaseFile
    net: ReducedNetwork
    converters: tuple[LccParams, ...]
    rated_orders: np.ndarray    # system pu rectifier orders at rated delivery

    @property
    def n(self) -> int:
        return self.net.order


def prepare(case: CaseFile) -> PreparedCase:
    net = reduce_case(case)
    convs = []
    for bus in net.bus_order:
        convs.append(LccParams.from_spec(case.converter_at(bus), case))
    orders = np.array([p.p_dn * rated_order(p) for p in convs])
    return PreparedCase(case=case, net=net, converters=tuple(convs), rated_orders=orders)


def _converter_states(prep: PreparedCase, U: np.ndarray, p_orders: np.ndarray):
    """Local solves per bus; p_orders in system pu.  Raises ConverterInfeasible."""
    states = []
    for i, p in enumerate(prep.converters):
        states.append(solve_state(p, float(U[i]), float(p_orders[i]) / p.p_dn))
    return tuple(states)


def mismatch(prep: PreparedCase, delta: np.ndarray, U: np.ndarray,
             p_orders: np.ndarray, states=None):
    """Scaled mismatches (gP, gQ); converter states solved here unless passed in."""
    if states is None:
        states = _converter_states(prep, U, p_orders)
    B = prep.net.B.matrix
    f = prep.net.f
    n = prep.n
    gP = np.zeros(n)
    gQ = np.zeros(n)
    for i in range(n):
        p_sys = states[i].P * prep.converters[i].p_dn
        q_sys = states[i].Q * prep.converters[i].p_dn
        sp = f[i] * math.sin(delta[i])
        sq = -B[i, i] * U[i] - f[i] * math.cos(delta[i])
        for j in range(n):
            if j == i:
                continue
            th = delta[i] - delta[j]
            sp += B[i, j] * U[j] * math.sin(th)
            sq -= B[i, j] * U[j] * math.cos(th)
        gP[i] = sp - p_sys / U[i]
        gQ[i] = sq - q_sys / U[i]
    return gP, gQ, states


def assemble_jacobian(prep: PreparedCase, delta: np.ndarray, U: np.ndarray,
                      p_orders: np.ndarray, states=None) -> JacobianBlocks:
    """Exact Jacobian of the scaled mismatches at the given state."""
    if states is None:
        states = _converter_states(prep, U, p_orders)
    B = prep.net.B.matrix
    f = prep.net.f
    n = prep.n
    J_pd = np.zeros((n, n))
    J_pv = np.zeros((n, n))
    J_qd = np.zeros((n, n))
    J_qv = np.zeros((n, n))
    dc = np.zeros(n)
    for i in range(n):
        par = prep.converters[i]
        st = states[i]
        der = state_derivatives(par, st)
        p_sys = st.P * par.p_dn
        q_sys = st.Q * par.p_dn
        dp_sys = der.dP_dU * par.p_dn
        dq_sys = der.dQ_dU * par.p_dn
        acc_pd = f[i] * math.cos(delta[i])
        acc_qd = f[i] * math.sin(delta[i])
        for j in range(n):
            if j == i:
                continue
            th = delta[i] - delta[j]
            c, s = math.cos(th), math.sin(th)
            acc_pd += B[i, j] * U[j] * c
            acc_qd += B[i, j] * U[j] * s
            J_pd[i, j] = -B[i, j] * U[j] * c
            J_qd[i, j] = -B[i, j] * U[j] * s
            J_pv[i, j] = B[i, j] * s
            J_qv[i, j] = -B[i, j] * c
        J_pd[i, i] = acc_pd
        J_qd[i, i] = acc_qd
        J_pv[i, i] = (p_sys - U[i] * dp_sys) / U[i] ** 2
        J_qv[i, i] = -B[i, i] + (q_sys - U[i] * dq_sys) / U[i] ** 2
        if st.P > 0:
            dc[i] = par.p_dn * st.rho * sensitivity_T(st, par).T
    return JacobianBlocks(J_pd=J_pd, J_pv=J_pv, J_qd=J_qd, J_qv=J_qv, dc_diag=dc)


def _try_point(prep, delta, U, p_orders):
    """Mismatch at a trial point, None when converter-infeasible or out of band."""
    if np.any(U <= U_BAND[0]) or np.any(U >= U_BAND[1]):
        return None
    try:
        gP, gQ, states = mismatch(prep, delta, U, p_orders)
    except ConverterInfeasible:
        return None
    return gP, gQ, states


def newton_solve(prep: PreparedCase | CaseFile, p_orders, warm: GridState | None = None,
                 tol: float = NEWTON_TOL, max_iter: int = NEWTON_MAX_ITER):
    """Damped Newton; returns GridState or Diverged (never raises on divergence)."""
    if isinstance(prep, CaseFile):
        prep = prepare(prep)
    p_orders = np.asarray(p_orders, dtype=float)
    if p_orders.shape != (prep.n,) or np.any(p_orders < 0):
        raise GridStrengthError("newton_solve: order vector must be nonnegative, one per converter")
    if warm is not None:
        delta, U = warm.delta.copy(), warm.U.copy()
    else:
        delta, U = np.zeros(prep.n), np.ones(prep.n)

    point = _try_point(prep, delta, U, p_orders)
    if point is None:
        return Diverged(reason="infeasible start", trace=())
    gP, gQ, states = point
    norm = max(np.max(np.abs(gP)), np.max(np.abs(gQ)))
    trace = [norm]

    for _ in range(max_iter):
        if norm <= tol:
            return GridState(delta=delta, U=U, converter_states=states)
        blocks = assemble_jacobian(prep, delta, U, p_orders, states)
        g = np.concatenate([gP, gQ])
        try:
            dx = np.linalg.solve(blocks.full(), -g)
        except np.linalg.LinAlgError:
            return Diverged(reason="singular jacobian", trace=tuple(trace))
        # damp: the raw step overshoots the U band at light load with big shunts
        alpha = 1.0
        accepted = None
        for _ in range(7):
            d_try = delta + alpha * dx[: prep.n]
            U_try = U + alpha * dx[prep.n:]
            point = _try_point(prep, d_try, U_try, p_orders)
            if point is not None:
                gP_t, gQ_t, states_t = point
                norm_t = max(np.max(np.abs(gP_t)), np.max(np.abs(gQ_t)))
                if norm_t <= 1.2 * norm or norm_t <= tol:
                    accepted = (d_try, U_try, gP_t, gQ_t, states_t, norm_t)
                    break
            alpha *= 0.5
        if accepted is None:
            return Diverged(reason="no acceptable step", trace=tuple(trace))
        delta, U, gP, gQ, states, norm = accepted
        trace.append(norm)

    if norm <= tol:
        return GridState(delta=delta, U=U, converter_states=states)
    return Diverged(reason="iteration limit", trace=tuple(trace))


def _sigma_min(prep, delta, U, p_orders, states) -> float:
    blocks = assemble_jacobian(prep, delta, U, p_orders, states)
    return float(np.linalg.svd(blocks.full(), compute_uv=False)[-1])


def trace_map(case: CaseFile | PreparedCase, direction: str = "proportional-to-rating",
              step: float = 0.02, lam0: float = 0.1, bisect_tol: float = 1e-6,
              lam_limit: float = 1000.0) -> ContinuationResult:
    """Raise the loading factor until the power flow diverges; bisect the nose.

    Orders are lambda times the rated-order vector (loading proportional to
    ratings); each solve warm-starts from the previous accepted state.  When
    the light start itself has no in-band solution (weak grids: the filter
    shunts overvolt an unloaded bus) the start doubles, up to three times,
    before the case is declared infeasible.
    """
    if direction != "proportional-to-rating":
        raise GridStrengthError(f"trace_map: unsupported loading direction {direction!r}")
    prep = case if isinstance(case, PreparedCase) else prepare(case)

    def solve_at(lam, warm):
        return newton_solve(prep, lam * prep.rated_orders, warm=warm)

    state = solve_at(lam0, None)
    while isinstance(state, Diverged) and lam0 * 2.0 < 1.0:
        lam0 *= 2.0
        state = solve_at(lam0, None)
    if isinstance(state, Diverged):
        raise GridStrengthError(
            f"trace_map: base case infeasible at lambda = {lam0} ({state.reason})"
        )
    history: list[MapPoint] = []

    def record(lam, st):
        history.append(
            MapPoint(
                lam=lam,
                U=tuple(float(u) for u in st.U),
                P=tuple(s.P * p.p_dn for s, p in zip(st.converter_states, prep.converters)),
                Q=tuple(s.Q * p.p_dn for s, p in zip(st.converter_states, prep.converters)),
                mu=tuple(s.mu for s in st.converter_states),
                sigma_min=_sigma_min(prep, st.delta, st.U, lam * prep.rated_orders,
                                     st.converter_states),
            )
        )

    record(lam0, state)
    good_lam, good_state = lam0, state
    bad_lam = None
    while bad_lam is None:
        lam_try = good_lam + step
        if lam_try > lam_limit:
            raise GridStrengthError(f"trace_map: no divergence below lambda = {lam_limit}")
        nxt = solve_at(lam_try, good_state)
        if isinstance(nxt, Diverged):
            bad_lam = lam_try
        else:
            good_lam, good_state = lam_try, nxt
            record(good_lam, good_state)

    while bad_lam - good_lam > bisect_tol:
        mid = 0.5 * (good_lam + bad_lam)
        nxt = solve_at(mid, good_state)
        if isinstance(nxt, Diverged):
            bad_lam = mid
        else:
            good_lam, good_state = mid, nxt
            record(good_lam, good_state)

    return ContinuationResult(
        lambda_max=good_lam,
        state_at_map=good_state,
        mu_at_map=tuple(s.mu for s in good_state.converter_states),
        diverged_at=bad_lam,
        history=tuple(history),
    )
