"""Upper-bound estimators for the three control distances.

All three estimators construct feasible paths, so every returned value is a
certified upper bound; none of them can prove a lower bound.  The flow-arc
distance searches over sequences of single-generator arcs, the control
distance over piecewise-constant generator mixtures, and the weighted frame
distance over mixtures of all commutators with degree-weighted speeds.
Gauss-Newton shooting (with finite-difference Jacobians evaluated as one
vectorized batch) finds feasible paths; a bisection over the scale with
projection-constrained re-solves then tightens the value.  Cross-seeding
guarantees the admissible-class orderings: an arc path is imported into the
control pool, a control path into the weighted pool.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import flows
from .approxexp import c_map_legs, e_map_batch
from .linalg import min_norm_solve

FEAS_TOL = 1e-9


@dataclass
class DistanceEstimate:
    kind: str
    value: float
    status: str  # "ok" or "budget_exhausted"
    certificate: dict | None
    trace: list = field(default_factory=list)

    def ok(self):
        return self.status == "ok"


# -- batched path endpoint maps -------------------------------------------------


def arc_endpoints(system, letters, T, x, steps=3):
    """Endpoints of arc paths: flow each letter for its (signed) time.

    ``T`` has shape (N, len(letters)); returns (N, n).
    """
    T = np.atleast_2d(np.asarray(T, dtype=float))
    Y = np.broadcast_to(np.asarray(x, dtype=float), (T.shape[0], system.n)).copy()
    for i, j in enumerate(letters):
        Y = flows.rk4_batch(system.batch_fn(j), T[:, i], Y, steps=steps)
    return Y


def control_endpoints(fns, U, x, n, steps=3):
    """Endpoints of piecewise-constant control paths over the given fields.

    ``U`` has shape (N, segments, len(fns)): unnormalized coefficients; each
    segment lasts 1/segments.
    """
    U = np.asarray(U, dtype=float)
    N, k, d = U.shape
    Y = np.broadcast_to(np.asarray(x, dtype=float), (N, n)).copy()
    for seg in range(k):
        coeff = U[:, seg, :]

        def fld(P, coeff=coeff):
            acc = coeff[:, 0, None] * fns[0](P)
            for j in range(1, d):
                acc = acc + coeff[:, j, None] * fns[j](P)
            return acc

        Y = flows.rk4_batch(fld, 1.0 / k, Y, steps=steps)
    return Y


# -- Gauss-Newton shooting -------------------------------------------------------


def _gauss_newton(endpoint_batch, theta0, target, tol, max_iter=20, proj=None):
    """Minimize |endpoint(theta) - target| by damped Gauss-Newton.

    ``endpoint_batch`` maps an array of parameter vectors (B, dim) to
    endpoints (B, n); the Jacobian comes from one forward-difference batch.
    ``proj`` (optional) re-projects theta after every step.
    """
    theta = np.asarray(theta0, dtype=float).copy()
    if proj is not None:
        theta = proj(theta)
    dim = theta.size
    res = target - endpoint_batch(theta[None, :])[0]
    best = float(np.linalg.norm(res))
    for _ in range(max_iter):
        if best <= tol:
            break
        deltas = 1e-6 * np.maximum(1.0, np.abs(theta))
        batch = np.tile(theta, (dim + 1, 1))
        for i in range(dim):
            batch[i + 1, i] += deltas[i]
        E = endpoint_batch(batch)
        res = target - E[0]
        J = (E[1:] - E[0]) / deltas[:, None]
        step, *_ = np.linalg.lstsq(J.T, res, rcond=None)
        # damped update: all halvings evaluated as one batch, best wins
        cands = np.stack([theta + step * (0.5**k) for k in range(6)])
        if proj is not None:
            cands = np.stack([proj(c) for c in cands])
        rs = np.linalg.norm(endpoint_batch(cands) - target, axis=1)
        k = int(np.argmin(rs))
        if rs[k] < best:
            theta, best = cands[k], float(rs[k])
        else:
            break
    return theta, best


# -- the flow-arc estimator -------------------------------------------------------


def _arc_templates(system, max_segments, rng, extra_random=4):
    seqs = []
    for j in range(1, system.m + 1):
        seqs.append((j,))
    for j in range(1, system.m + 1):
        for k in range(1, system.m + 1):
            if j == k:
                continue
            base = []
            while len(base) < max_segments:
                base.extend([j, k])
            for L in range(2, max_segments + 1):
                seqs.append(tuple(base[:L]))
    for _ in range(extra_random):
        L = int(rng.integers(2, max_segments + 1))
        seqs.append(tuple(int(a) for a in rng.integers(1, system.m + 1, size=L)))
    # dedupe, preserve order
    seen, out = set(), []
    for s in seqs:
        if s not in seen:
            seen.add(s)
            out.append(s)
    return out


def _arc_inits(letters, dx_norm, rng, s_max):
    mu = len(letters)
    inits = [np.zeros(mu)]
    scales = sorted({dx_norm ** (1.0 / ell) for ell in range(1, s_max + 1)})
    for sc in scales:
        inits.append(rng.normal(size=mu) * 0.5 * sc)
        if mu >= 4 and mu % 2 == 0:
            pattern = np.array([sc if i < mu // 2 else -sc for i in range(mu)])
            inits.append(pattern)
    return inits


def fl_distance(
    system,
    x,
    y,
    max_segments=8,
    bisect_iters=40,
    seed=0,
    seed_paths=(),
    steps=3,
    tol=None,
):
    """Arc-path distance estimate: min sum of arc times over feasible paths.

    Feasibility at scale r means a sequence of single-generator arcs from x
    to y with total flowed time at most r (arc times at unit speed); the
    bisection lowers r with L1-projected re-solves, so the reported value is
    the smallest scale at which a feasible path was actually found.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dx = float(np.linalg.norm(y - x))
    if tol is None:
        tol = FEAS_TOL * (1.0 + dx) + 1e-8
    if dx <= tol:
        return DistanceEstimate("fl", 0.0, "ok", {"form": "legs", "legs": []})
    rng = np.random.default_rng(seed)
    candidates = []
    templates = _arc_templates(system, max_segments, rng)
    n_canonical = len(templates) - 4  # the trailing ones are random fill-ins
    for ti, letters in enumerate(templates):
        if len(candidates) >= 8 or (ti >= n_canonical and len(candidates) >= 3):
            break
        ep = lambda T, L=letters: arc_endpoints(system, L, T, x, steps=steps)
        for theta0 in _arc_inits(letters, dx, rng, system.s):
            theta, res = _gauss_newton(ep, theta0, y, tol)
            if res <= tol:
                candidates.append((float(np.abs(theta).sum()), letters, theta))
    for cert in seed_paths:
        if cert and cert.get("form") == "legs" and cert["legs"]:
            letters = tuple(abs(j) for j, _ in cert["legs"])
            theta0 = np.array([t if j > 0 else -t for j, t in cert["legs"]])
            ep = lambda T, L=letters: arc_endpoints(system, L, T, x, steps=steps)
            theta, res = _gauss_newton(ep, theta0, y, tol)
            if res <= tol:
                candidates.append((float(np.abs(theta).sum()), letters, theta))
    if not candidates:
        return DistanceEstimate("fl", math.inf, "budget_exhausted", None)
    candidates.sort(key=lambda c: c[0])
    best_val, best_letters, best_theta = candidates[0]
    trace = [(best_val, True)]
    lo, hi = 0.0, best_val
    for _ in range(bisect_iters):
        mid = 0.5 * (lo + hi)
        if mid <= 0:
            break
        proj = lambda th, m=mid: th * min(1.0, m / max(np.abs(th).sum(), 1e-300))
        ep = lambda T, L=best_letters: arc_endpoints(system, L, T, x, steps=steps)
        theta, res = _gauss_newton(
            ep, best_theta * (mid / best_val), y, tol, max_iter=5, proj=proj
        )
        feasible = res <= tol
        trace.append((mid, feasible))
        if feasible:
            hi = float(np.abs(theta).sum())
            best_theta, best_val = theta, hi
        else:
            lo = mid
        if hi - lo <= 1e-3 * hi:
            break
    legs = [
        (int(j) if t >= 0 else -int(j), abs(float(t)))
        for j, t in zip(best_letters, best_theta)
        if abs(t) > 1e-14
    ]
    return DistanceEstimate(
        "fl", best_val, "ok", {"form": "legs", "legs": legs}, trace
    )


# -- control-path estimators -------------------------------------------------------


def _cc_value(U):
    return float(np.linalg.norm(U, axis=-1).max())


def _segment_scales(U, degrees):
    """Per segment, the smallest r with sum_j (u_j / r^deg_j)^2 <= 1.

    Vectorized bisection; the map r -> sum is strictly decreasing, and
    membership at level m has the closed form sum_j u_j^2 / m^(2 deg_j) <= 1
    used by the projection below.
    """
    U = np.atleast_2d(np.asarray(U, dtype=float))
    degs = np.asarray(degrees, dtype=float)
    U2 = U * U
    out = np.zeros(U.shape[0])
    active = U2.sum(axis=1) > 0
    if not active.any():
        return out
    A = U2[active]
    hi = (np.abs(U[active]) ** (1.0 / degs)).max(axis=1) * (len(degs) + 1.0)
    lo = np.zeros_like(hi)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        g = (A / mid[:, None] ** (2 * degs)).sum(axis=1)
        grow = g > 1.0
        lo = np.where(grow, mid, lo)
        hi = np.where(grow, hi, mid)
    out[active] = hi
    return out


def _rho_value(U, degrees):
    return float(_segment_scales(U.reshape(-1, U.shape[-1]), degrees).max())


def _project_segments(U, degrees, m, kind):
    """Scale each over-limit segment onto the level-m admissible set."""
    U = U.copy()
    if kind == "rho":
        degs = np.asarray(degrees, dtype=float)
        gm = (U * U / m ** (2 * degs)).sum(axis=1)
    else:
        gm = (U * U).sum(axis=1) / m**2
    over = gm > 1.0
    if over.any():
        U[over] *= (1.0 / np.sqrt(gm[over]))[:, None]
    return U


def _legs_to_controls(legs, k, d, letter_of_col):
    """Spread arc legs over k equal-duration segments, one field per leg."""
    total = sum(t for _, t in legs)
    if total <= 0:
        return np.zeros((k, d))
    shares = [max(1, round(k * t / total)) for _, t in legs]
    while sum(shares) > k:
        shares[int(np.argmax(shares))] -= 1
    while sum(shares) < k:
        shares[int(np.argmax([t for _, t in legs]))] += 1
    U = np.zeros((k, d))
    seg = 0
    for (j, t), s in zip(legs, shares):
        col = letter_of_col[abs(j)]
        for _ in range(s):
            U[seg, col] = (k * t / s) * (1 if j > 0 else -1)
            seg += 1
    return U


def _control_estimate(
    kind,
    system,
    fns,
    degrees,
    value_fn,
    x,
    y,
    segments,
    bisect_iters,
    seed,
    seed_certs,
    imported_value,
    steps,
    tol,
):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dx = float(np.linalg.norm(y - x))
    if tol is None:
        tol = FEAS_TOL * (1.0 + dx) + 1e-8
    d = len(fns)
    if dx <= tol:
        return DistanceEstimate(
            kind, 0.0, "ok", {"form": "controls", "segments": segments,
                              "controls": np.zeros((segments, d)).tolist()}
        )
    shape = (segments, d)

    def ep(batch):
        return control_endpoints(fns, batch.reshape(-1, *shape), x, system.n, steps=steps)

    rng = np.random.default_rng(seed)
    inits = [np.asarray(c, dtype=float) for c in seed_certs]
    # constant-control min-norm start toward the target direction
    cols = np.stack([fn((x)[None, :])[0] for fn in fns], axis=1)
    b0, _, _ = min_norm_solve(cols, y - x)
    inits.append(np.tile(b0, (segments, 1)))
    inits.append(rng.normal(size=shape) * 0.3 * (dx + dx ** (1.0 / max(degrees))))
    candidates = []
    for U0 in inits:
        theta, res = _gauss_newton(ep, U0.reshape(-1), y, tol)
        if res <= tol:
            U = theta.reshape(shape)
            candidates.append((value_fn(U), U))
    trace = []
    if not candidates and imported_value is None:
        return DistanceEstimate(kind, math.inf, "budget_exhausted", None)
    if candidates:
        candidates.sort(key=lambda c: c[0])
        best_val, best_U = candidates[0]
        lo, hi = 0.0, best_val
        for _ in range(bisect_iters):
            mid = 0.5 * (lo + hi)
            if mid <= 0:
                break

            def proj(th, m=mid):
                return _project_segments(
                    th.reshape(shape), degrees, m, kind
                ).reshape(-1)

            theta, res = _gauss_newton(
                ep, proj(best_U.reshape(-1) * (mid / best_val)), y, tol,
                max_iter=4, proj=proj,
            )
            feasible = res <= tol
            trace.append((mid, feasible))
            if feasible:
                U = theta.reshape(shape)
                hi = value_fn(U)
                best_U, best_val = U, hi
            else:
                lo = mid
            if hi - lo <= 1e-3 * hi:
                break
        cert = {"form": "controls", "segments": segments, "controls": best_U.tolist()}
        value = best_val
    else:
        cert, value = None, math.inf
    if imported_value is not None and imported_value[0] < value:
        value, cert = imported_value
    return DistanceEstimate(kind, value, "ok", cert, trace)


def cc_distance(
    system, x, y, segments=8, bisect_iters=40, seed=0, fl_cert=None, steps=3, tol=None
):
    """Control-distance estimate over piecewise-constant generator mixtures.

    Any arc certificate passed as ``fl_cert`` is admissible here, so its
    value enters the candidate pool; the reported bound never exceeds it.
    """
    fns = [system.batch_fn(j) for j in range(1, system.m + 1)]
    degrees = (1,) * system.m
    seeds = []
    imported = None
    if fl_cert and fl_cert.get("form") == "legs" and fl_cert["legs"]:
        letter_of_col = {j: j - 1 for j in range(1, system.m + 1)}
        seeds.append(
            _legs_to_controls(fl_cert["legs"], segments, system.m, letter_of_col)
        )
        imported = (
            sum(t for _, t in fl_cert["legs"]),
            {"form": "legs", "legs": fl_cert["legs"]},
        )
    return _control_estimate(
        "cc", system, fns, degrees, _cc_value, x, y, segments, bisect_iters,
        seed, seeds, imported, steps, tol,
    )


def rho_distance(
    system,
    frame,
    x,
    y,
    segments=8,
    bisect_iters=40,
    seed=0,
    cc_cert=None,
    cc_value=None,
    steps=3,
    tol=None,
):
    """Weighted-frame distance estimate over all commutator directions.

    A control certificate embeds with identical value (the generators are
    the degree-one frame members), so the weighted estimate never exceeds
    the control one.
    """
    fns = [system.batch_fn(frame.word(j)) for j in range(1, frame.q + 1)]
    degrees = frame.degrees
    seeds = []
    imported = None
    if cc_cert is not None and cc_cert.get("form") == "controls":
        U = np.zeros((segments, frame.q))
        Uc = np.asarray(cc_cert["controls"], dtype=float)
        if Uc.shape[0] == segments:
            U[:, : system.m] = Uc
            seeds.append(U)
    if cc_value is not None and math.isfinite(cc_value):
        imported = (cc_value, cc_cert)
    return _control_estimate(
        "rho", system, fns, degrees, lambda U: _rho_value(U, degrees),
        x, y, segments, bisect_iters, seed, seeds, imported, steps, tol,
    )


def estimate_all(system, frame, x, y, segments=8, seed=0):
    """fl, cc and rho estimates with the cross-seeding that fixes ordering."""
    fl = fl_distance(system, x, y, max_segments=segments, seed=seed)
    cc = cc_distance(
        system, x, y, segments=segments, seed=seed,
        fl_cert=fl.certificate if fl.ok() else None,
    )
    rho = rho_distance(
        system, frame, x, y, segments=segments, seed=seed,
        cc_cert=cc.certificate if cc.ok() else None,
        cc_value=cc.value if cc.ok() else None,
    )
    return fl, cc, rho


def reverse_certificate(cert):
    """Certificate of the reversed path (same value, endpoints swapped)."""
    if cert is None:
        return None
    if cert.get("form") == "legs":
        return {
            "form": "legs",
            "legs": [(-j, t) for j, t in reversed(cert["legs"])],
        }
    U = -np.asarray(cert["controls"], dtype=float)[::-1]
    return {"form": "controls", "segments": cert["segments"], "controls": U.tolist()}


# -- fast ball membership (volume harnesses) ------------------------------------------


def chart_leg_count(frame, I):
    return sum(
        1 if frame.degree(i) == 1 else len(c_map_legs(frame.word(i), 1.0))
        for i in I
    )


def ball_membership(
    system, frame, I, x, r, pts, max_iter=8, steps=2, tol=None, kind="rho"
):
    """Vectorized membership test for the radius-r ball of the chosen kind.

    Inverts the almost-exponential chart at scale r by quasi-Newton (exact
    leading-order Jacobian columns) and accepts a target when the recovered
    box coordinate certifies an admissible path: the chart decomposes into
    M single-generator arcs of time at most |h|_I * r, so |h|_I <= 1/M
    certifies arc distance at most r.  An arc path is admissible for every
    class, so the same rule is a valid one-sided test for the weighted ball
    (default) and for the control ball (kind="cc"); rejected points may
    still lie in the ball.
    """
    if kind not in ("rho", "cc"):
        raise ValueError("kind must be 'rho' or 'cc'")
    I = frame.check_index_tuple(I)
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    N = pts.shape[0]
    n = system.n
    if tol is None:
        tol = 1e-8 + 1e-6 * r
    M = chart_leg_count(frame, I)
    eps_accept = 1.0 / M
    H = np.zeros((N, n))
    degs = np.array([frame.degree(i) for i in I], dtype=float)
    ridge = 1e-12 * np.eye(n)
    for _ in range(max_iter):
        E = e_map_batch(frame, I, x, r, H, steps=steps)
        R = pts - E
        cols = [
            (r ** frame.degree(i)) * system.batch_fn(frame.word(i))(E) for i in I
        ]
        J = np.stack(cols, axis=2) + ridge
        try:
            dH = np.linalg.solve(J, R[..., None])[..., 0]
        except np.linalg.LinAlgError:
            dH, *_ = np.linalg.lstsq(
                J.reshape(-1, n), R.reshape(-1), rcond=None
            )
            dH = dH.reshape(N, n)
        cap = np.maximum(np.abs(dH).max(axis=1), 1e-300)
        dH *= np.minimum(1.0, 0.5 / cap)[:, None]
        H = H + dH
    E = e_map_batch(frame, I, x, r, H, steps=steps)
    res = np.linalg.norm(pts - E, axis=1)
    boxn = (np.abs(H) ** (1.0 / degs)).max(axis=1)
    mask = (res <= tol) & (boxn <= eps_accept)
    return mask, H, res


def fefferman_phong_check(system, x, directions, scales, s, seed=0, segments=8):
    """Sup of d_hat / |x-y|^(1/s) per Euclidean scale, over fixed directions.

    The same direction set is reused at every scale so the per-scale suprema
    are comparable; bounded variation across scales is the check.
    """
    x = np.asarray(x, dtype=float)
    rows = []
    for delta in scales:
        worst = 0.0
        for u in directions:
            u = np.asarray(u, dtype=float)
            y = x + delta * u / np.linalg.norm(u)
            est = fl_distance(system, x, y, max_segments=segments, seed=seed)
            if est.ok():
                worst = max(worst, est.value / delta ** (1.0 / s))
            else:
                worst = math.inf
        rows.append((float(delta), worst))
    return rows
