"""Frame determinants, maximal-frame selection and ball-box experiments.

Frame determinants are exact (Fraction arithmetic) at rational points; the
selection rule scores |det| * r^(total degree) and keeps the winner, with
ties broken by enumeration order.  The experiments are Monte Carlo or
Newton-solve harnesses built on the chart and membership machinery; every
sampling routine takes an explicit seed and reports it back.
"""

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .linalg import min_norm_solve
from .metric import ball_membership, chart_leg_count, control_endpoints
from .approxexp import e_map, e_map_batch, box_norm
from .words import as_fraction


class HormanderError(RuntimeError):
    """No frame spans at the given point: every determinant vanished."""


def _exact_det(rows):
    n = len(rows)
    if n == 1:
        return rows[0][0]
    if n == 2:
        return rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]
    total = Fraction(0)
    for j in range(n):
        if rows[0][j] == 0:
            continue
        minor = [r[:j] + r[j + 1 :] for r in rows[1:]]
        total += (-1) ** j * rows[0][j] * _exact_det(minor)
    return total


def _rational_point(x):
    return [as_fraction(v) if not isinstance(v, float) else Fraction(v).limit_denominator(10**12) for v in x]


def lambda_I(frame, I, x):
    """Exact determinant of the commutator columns Y_{i_1}..Y_{i_n} at x."""
    I = frame.check_index_tuple(I)
    xf = _rational_point(x)
    cols = [frame.map(i).eval_exact(xf) for i in I]
    rows = [[cols[j][i] for j in range(len(I))] for i in range(len(I))]
    return _exact_det(rows)


def frame_candidates(frame, max_candidates=20000):
    """Index tuples without repetition, in deterministic enumeration order.

    Above the cap, a pivoted-QR beam over a reference point grid picks the
    strongest 2n columns first (deterministic), then enumerates those.
    """
    n = frame.system.n
    combos = math.comb(frame.q, n)
    if combos <= max_candidates:
        return list(itertools.combinations(range(1, frame.q + 1), n))
    # beam: rank columns by norm of the coefficient maps at the origin-ish
    ref = np.zeros(n) + 0.1
    scores = [
        (-float(np.linalg.norm(frame.map(i)(ref))), i) for i in range(1, frame.q + 1)
    ]
    scores.sort()
    keep = sorted(i for _, i in scores[: max(2 * n, n + 4)])
    return list(itertools.combinations(keep, n))


def lambda_vector(frame, x, r, top_k=None):
    """Scaled determinant tuple over candidate frames, largest first if top_k."""
    rows = []
    for I in frame_candidates(frame):
        lam = lambda_I(frame, I, x)
        if lam != 0:
            rows.append((I, lam, float(abs(lam)) * r ** frame.ell(I)))
        else:
            rows.append((I, lam, 0.0))
    if top_k is not None:
        rows = sorted(rows, key=lambda t: -t[2])[:top_k]
    return rows


def nu(frame, points):
    """Min over the sample set of the norm of the unscaled tuple."""
    worst = math.inf
    for x in points:
        vec = [float(lam) for _, lam, _ in lambda_vector(frame, x, 1.0)]
        worst = min(worst, float(np.linalg.norm(vec)))
    return worst


@dataclass
class MaximalTriple:
    I: tuple
    x: tuple
    r: float
    eta: float
    score: float
    max_score: float

    @property
    def eta_maximal(self):
        return self.score > self.eta * self.max_score or self.score == self.max_score


def select_maximal(frame, x, r, eta=0.5):
    """Frame with the largest |det| * r^degree score; ties keep the first."""
    best_I, best_score = None, -1.0
    for I in frame_candidates(frame):
        lam = lambda_I(frame, I, x)
        score = float(abs(lam)) * r ** frame.ell(I)
        if score > best_score:
            best_I, best_score = I, score
    if best_score <= 0.0:
        raise HormanderError(f"all frame determinants vanish at {tuple(x)}")
    return MaximalTriple(
        I=best_I, x=tuple(float(v) for v in x), r=float(r), eta=eta,
        score=best_score, max_score=best_score,
    )


# -- chart inversion ------------------------------------------------------------


def newton_invert(frame, I, x, r, y, eps, max_iter=50, fast=True, steps=6):
    """Damped Newton solve of chart(h) = y from h = 0.

    Finite-difference Jacobian, step halving on non-decreasing residual;
    converged when the residual drops below 1e-8 * r.
    """
    I = frame.check_index_tuple(I)
    n = frame.system.n
    y = np.asarray(y, dtype=float)
    h = np.zeros(n)
    tol = 1e-8 * r

    def E(hv):
        return np.asarray(e_map(frame, I, x, r, hv, fast=fast, steps=steps))

    best = float(np.linalg.norm(y - E(h)))
    for _ in range(max_iter):
        res = y - E(h)
        best = float(np.linalg.norm(res))
        if best <= tol:
            break
        J = np.zeros((n, n))
        d = 1e-6 * max(1.0, float(np.abs(h).max()))
        for k in range(n):
            hp, hm = h.copy(), h.copy()
            hp[k] += d
            hm[k] -= d
            J[:, k] = (E(hp) - E(hm)) / (2 * d)
        try:
            step = np.linalg.solve(J, res)
        except np.linalg.LinAlgError:
            step, *_ = np.linalg.lstsq(J, res, rcond=None)
        moved = False
        for damp in range(10):
            cand = h + step * (0.5**damp)
            r2 = float(np.linalg.norm(y - E(cand)))
            if r2 < best:
                h, best, moved = cand, r2, True
                break
        if not moved:
            break
    degrees = [frame.degree(i) for i in I]
    return {
        "h": h,
        "residual": best,
        "converged": best <= tol,
        "box_norm": box_norm(h, degrees) if np.abs(h).any() else 0.0,
        "in_box": bool(np.abs(h).any() and box_norm(h, degrees) < eps)
        or (not np.abs(h).any()),
    }


def sample_rho_targets(system, frame, x, scale, count, seed, segments=4, steps=3):
    """Endpoints of random admissible weighted paths: certified rho <= scale."""
    rng = np.random.default_rng(seed)
    B = rng.uniform(-1, 1, size=(count, segments, frame.q))
    norms = np.linalg.norm(B, axis=2, keepdims=True)
    B /= np.maximum(norms, 1.0)  # per-segment |b| <= 1
    weights = np.array([scale ** frame.degree(j) for j in range(1, frame.q + 1)])
    U = B * weights[None, None, :]
    fns = [system.batch_fn(frame.word(j)) for j in range(1, frame.q + 1)]
    return control_endpoints(fns, U, np.asarray(x, dtype=float), system.n, steps=steps)


def inclusion_check(
    system, frame, I, x, r, eps, c=0.05, samples=200, seed=0,
    collision_pairs=200,
):
    """Ball-box inclusion experiment plus a sampled injectivity probe.

    Targets are generated with certified weighted distance below
    c * eps^s * r; each is inverted through the chart by damped Newton and
    counted as covered when the solve lands strictly inside the eps-box.
    """
    if not 0 < eps <= 1:
        raise ValueError("eps must be in (0, 1]: the chart box is unit scale")
    I = frame.check_index_tuple(I)
    s = system.s
    scale = c * eps**s * r
    targets = sample_rho_targets(system, frame, x, scale, samples, seed)
    solved = 0
    max_residual = 0.0
    worst_box = 0.0
    for y in targets:
        out = newton_invert(frame, I, x, r, y, eps)
        max_residual = max(max_residual, out["residual"])
        if out["converged"] and out["box_norm"] < eps:
            solved += 1
            worst_box = max(worst_box, out["box_norm"])
    # collision probe: distinct box points should have distinct images
    rng = np.random.default_rng(seed + 1)
    degrees = np.array([frame.degree(i) for i in I], dtype=float)
    H = rng.uniform(-1, 1, size=(2 * collision_pairs, system.n))
    H *= (eps ** degrees)[None, :]
    pts = e_map_batch(frame, I, x, r, H, steps=6)
    A, B = pts[:collision_pairs], pts[collision_pairs:]
    HA, HB = H[:collision_pairs], H[collision_pairs:]
    sep = np.abs(HA - HB).max(axis=1)
    img = np.linalg.norm(A - B, axis=1)
    collisions = int(np.sum((sep > 1e-3) & (img < 1e-9)))
    return {
        "samples": int(samples),
        "solved_fraction": solved / samples,
        "max_residual": max_residual,
        "worst_box_norm": worst_box,
        "target_scale": scale,
        "collisions": collisions,
        "seed": seed,
    }


# -- frame-coefficient recovery ----------------------------------------------------


def express_in_frame(frame, v, x, tol=1e-8):
    """Min-norm coefficients of a vector over the frame columns at x."""
    Y = np.stack(
        [frame.map(i)(np.asarray(x, dtype=float)) for i in range(1, frame.q + 1)],
        axis=1,
    )
    b, rank, residual = min_norm_solve(Y, np.asarray(v, dtype=float))
    return {
        "coefficients": b,
        "residual": residual,
        "rank": rank,
        "in_span": residual <= tol * (1.0 + float(np.linalg.norm(v))),
        "sup_norm": float(np.abs(b).max()) if b.size else 0.0,
    }


def ad_coefficient_bound(system, frame, Z, w, x, times):
    """Frame coefficients of ad_Z X_w along the flow of Z; sup-norm bound.

    Realizes the measurable-coefficient recovery: at each sampled time the
    ad field is expressed in the frame by the min-norm solve.
    """
    g = system.ad(Z, w)
    g_fn = g.compile_scalar()
    rows = []
    for t in times:
        p = system.flow(Z, t, x)
        out = express_in_frame(frame, np.asarray(g_fn(p)), p)
        rows.append((float(t), out["sup_norm"], out["residual"]))
    return {
        "rows": rows,
        "max_sup_norm": max(r[1] for r in rows),
        "max_residual": max(r[2] for r in rows),
    }


# -- volume harnesses ------------------------------------------------------------


def _bounding_box(frame, I, x, r, margin=1.3):
    """Euclidean box containing the chart image of the acceptance region."""
    M = chart_leg_count(frame, I)
    degrees = [frame.degree(i) for i in I]
    axes = [np.array([-((1.0 / M) ** d), 0.0, (1.0 / M) ** d]) for d in degrees]
    grid = np.array(list(itertools.product(*axes)))
    pts = e_map_batch(frame, I, x, r, grid, steps=4)
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    center = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo) * margin + 1e-12
    return center - half, center + half


def doubling_ratio(system, frame, x, r, N=100_000, seed=0, eta=0.5, kind="rho"):
    """Monte Carlo volume ratio of the radius-2r and radius-r balls.

    Both memberships run on one uniform stream over a box adapted to the
    outer ball, with the maximal frame selected once at radius r and reused,
    so the two acceptance regions are exact dilates on homogeneous models.
    """
    triple = select_maximal(frame, x, r, eta=eta)
    I = triple.I
    lo, hi = _bounding_box(frame, I, x, 2 * r)
    rng = np.random.default_rng(seed)
    pts = rng.uniform(lo, hi, size=(N, system.n))
    mask_outer, _, _ = ball_membership(system, frame, I, x, 2 * r, pts, kind=kind)
    mask_inner, _, _ = ball_membership(system, frame, I, x, r, pts, kind=kind)
    k2, k1 = int(mask_outer.sum()), int(mask_inner.sum())
    if k1 == 0:
        raise RuntimeError("zero inner-ball count; enlarge N or the box")
    ratio = k2 / k1
    se = ratio * math.sqrt(1.0 / k1 + 1.0 / k2)
    return {
        "ratio": ratio,
        "stderr": se,
        "outer_count": k2,
        "inner_count": k1,
        "N": int(N),
        "I": I,
        "r": float(r),
        "seed": seed,
        "kind": kind,
    }


def poincare_suite(system, frame, fs, x, r, C_enlarge=2.0, N=100_000, seed=0, eta=0.5):
    """Monte Carlo mean-oscillation vs horizontal-gradient integrals.

    One shared sample stream over the enlarged ball's bounding box, with the
    two membership masks computed once and reused for every test function.
    Both integrals are box-volume * accepted-fraction * sample mean; the
    per-function ratio is the empirical constant.
    """
    triple = select_maximal(frame, x, r, eta=eta)
    I = triple.I
    R = C_enlarge * r
    lo, hi = _bounding_box(frame, I, x, R)
    rng = np.random.default_rng(seed)
    pts = rng.uniform(lo, hi, size=(N, system.n))
    box_vol = float(np.prod(hi - lo))
    mask_in, _, _ = ball_membership(system, frame, I, x, r, pts)
    mask_out, _, _ = ball_membership(system, frame, I, x, R, pts)
    k_in, k_out = int(mask_in.sum()), int(mask_out.sum())
    if k_in == 0 or k_out == 0:
        raise RuntimeError("empty ball sample; enlarge N")
    inner_pts = pts[mask_in]
    outer_pts = pts[mask_out]
    reports = []
    for f in fs:
        vals_in = f.compile_batch()(inner_pts)
        f_mean = float(vals_in.mean())
        lhs = box_vol * (k_in / N) * float(np.abs(vals_in - f_mean).mean())
        rhs = 0.0
        for j in range(1, system.m + 1):
            g = system.horizontal_derivative(j, f).compile_batch()
            rhs += box_vol * (k_out / N) * float(np.abs(r * g(outer_pts)).mean())
        reports.append({
            "lhs": lhs,
            "rhs": rhs,
            "ratio": (lhs / rhs) if rhs > 0 else 0.0,
            "inner_count": k_in,
            "outer_count": k_out,
            "I": I,
            "seed": seed,
        })
    return reports


def poincare_check(system, frame, f, x, r, C_enlarge=2.0, N=100_000, seed=0, eta=0.5):
    """Single-function form of the shared-stream suite."""
    return poincare_suite(
        system, frame, [f], x, r, C_enlarge=C_enlarge, N=N, seed=seed, eta=eta
    )[0]


def maximality_stability(system, frame, x, r, seed=0, samples=20, reach=0.01):
    """Fraction of nearby points (short admissible paths) keeping the frame."""
    base = select_maximal(frame, x, r).I
    targets = sample_rho_targets(system, frame, x, reach * r, samples, seed)
    same = sum(
        1 for y in targets if select_maximal(frame, y, r).I == base
    )
    return {"base": base, "same_fraction": same / samples, "samples": samples}
