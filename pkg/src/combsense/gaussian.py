"""Multimode Gaussian states over pixel modes and their decompositions.

Quadrature convention: x = a + a^dag, p = -i(a - a^dag), vacuum variance 1.
Vectors and covariance matrices use xxpp ordering, (x_1..x_n, p_1..p_n).
Squeezing levels in dB are 10*log10 of the quadrature variance, so squeezed
quadratures carry negative dB.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import polar, schur, sqrtm

from .errors import UnphysicalStateError
from .spectral import SpectralMode, hermite_gaussian_mode, project_coefficients

_SYM_TOL = 1e-10
_PHYS_TOL = 1e-8


def symplectic_form(n: int) -> np.ndarray:
    """The standard symplectic form J = [[0, I], [-I, 0]] in xxpp ordering."""
    z = np.zeros((n, n))
    eye = np.eye(n)
    return np.block([[z, eye], [-eye, z]])


@dataclass(frozen=True)
class GaussianState:
    """Gaussian state of ``n_modes`` pixel modes: mean vector and covariance.

    The covariance is symmetric with vacuum = identity; physicality means all
    symplectic eigenvalues are >= 1 (up to numerical tolerance).
    """

    n_modes: int
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        n = self.n_modes
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if mean.shape != (2 * n,):
            raise ValueError(f"mean must have shape ({2*n},)")
        if cov.shape != (2 * n, 2 * n):
            raise ValueError(f"cov must have shape ({2*n}, {2*n})")
        scale = max(1.0, float(np.abs(cov).max()))
        if np.abs(cov - cov.T).max() > _SYM_TOL * scale:
            raise ValueError("covariance matrix is not symmetric")
        cov = 0.5 * (cov + cov.T)
        mean.flags.writeable = False
        cov.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def x_block(self) -> np.ndarray:
        n = self.n_modes
        return self.cov[:n, :n]

    @property
    def p_block(self) -> np.ndarray:
        n = self.n_modes
        return self.cov[n:, n:]

    @property
    def cross_block(self) -> np.ndarray:
        n = self.n_modes
        return self.cov[:n, n:]

    def symplectic_eigenvalues(self) -> np.ndarray:
        """Moduli of the eigenvalues of i*J*cov, one per mode, descending."""
        J = symplectic_form(self.n_modes)
        ev = np.linalg.eigvals(J @ self.cov)
        nu = np.sort(np.abs(ev))[::-1]
        return nu[::2]  # each value appears twice

    def is_physical(self, tol: float = _PHYS_TOL) -> bool:
        return bool(self.symplectic_eigenvalues().min() >= 1.0 - tol)


def vacuum_state(n: int) -> GaussianState:
    """Vacuum over ``n`` modes: zero mean, identity covariance."""
    if n < 1:
        raise ValueError("need at least one mode")
    return GaussianState(n_modes=n, mean=np.zeros(2 * n), cov=np.eye(2 * n))


@dataclass(frozen=True)
class SupermodeEntry:
    """One squeezed supermode: HG order, squeezing level and quadrature.

    ``squeezing_db <= 0`` is the variance of the squeezed quadrature in dB;
    ``antisqueezing_db`` defaults to the pure-state value ``-squeezing_db``
    and may be raised (never lowered) to model a mixed state.
    """

    order: int
    squeezing_db: float
    quadrature: str = "amplitude"
    antisqueezing_db: float | None = None

    def __post_init__(self):
        if self.order < 0:
            raise ValueError("order must be >= 0")
        if self.squeezing_db > 0:
            raise ValueError(f"squeezing_db must be <= 0, got {self.squeezing_db}")
        if self.quadrature not in ("amplitude", "phase"):
            raise ValueError("quadrature must be 'amplitude' or 'phase'")
        anti = self.antisqueezing_db
        if anti is None:
            anti = -self.squeezing_db
        if anti < -self.squeezing_db - 1e-12:
            raise ValueError(
                "antisqueezing_db below the pure-state value makes the mode unphysical"
            )
        object.__setattr__(self, "antisqueezing_db", float(anti))

    @property
    def squeezed_variance(self) -> float:
        return 10.0 ** (self.squeezing_db / 10.0)

    @property
    def antisqueezed_variance(self) -> float:
        return 10.0 ** (self.antisqueezing_db / 10.0)


@dataclass(frozen=True)
class SupermodeSpec:
    """A set of squeezed Hermite-Gauss supermodes with distinct orders."""

    entries: tuple[SupermodeEntry, ...]

    def __post_init__(self):
        entries = tuple(self.entries)
        orders = [e.order for e in entries]
        if len(set(orders)) != len(orders):
            raise ValueError("supermode orders must be distinct")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def ladder(
        cls,
        squeezing_db: list[float],
        alternating: bool = True,
        antisqueezing_db: list[float] | None = None,
    ) -> "SupermodeSpec":
        """HG_0..HG_{k-1} with the given squeezing, quadratures alternating
        amplitude/phase starting from amplitude (the comb's natural pattern)."""
        entries = []
        for k, db in enumerate(squeezing_db):
            quad = "amplitude" if (not alternating or k % 2 == 0) else "phase"
            anti = antisqueezing_db[k] if antisqueezing_db is not None else None
            entries.append(
                SupermodeEntry(
                    order=k, squeezing_db=db, quadrature=quad, antisqueezing_db=anti
                )
            )
        return cls(entries=tuple(entries))


def build_squeezed_comb(
    spec: SupermodeSpec,
    modes: list[SpectralMode],
    mean_field: SpectralMode,
) -> GaussianState:
    """Squeezed-comb state expressed in the pixel-mode basis.

    Each supermode HG_k is expanded on the pixel modes through its overlap
    vector ``b_k``; the covariance picks up ``b_k b_k^T (V - 1)`` on each
    quadrature block.  Whatever part of a supermode the pixel basis fails to
    capture is replaced by vacuum, which is exactly a mode-matching-loss
    channel, so the construction is physical whenever the inputs are.  The
    x-p cross block is zero: every supermode is squeezed along x or p alone.
    """
    if mean_field.center is None or mean_field.scale is None:
        raise ValueError("mean_field must carry its center and scale")
    n = len(modes)
    if n < 1:
        raise ValueError("need at least one pixel mode")
    cx = np.eye(n)
    cp = np.eye(n)
    for entry in spec.entries:
        hg = hermite_gaussian_mode(
            mean_field.grid, entry.order, mean_field.center, mean_field.scale
        )
        b = project_coefficients(hg, modes, target_name=f"hg{entry.order}").m
        vs = entry.squeezed_variance
        va = entry.antisqueezed_variance
        vx, vp = (vs, va) if entry.quadrature == "amplitude" else (va, vs)
        outer = np.outer(b, b)
        cx += outer * (vx - 1.0)
        cp += outer * (vp - 1.0)
    cov = np.block([[cx, np.zeros((n, n))], [np.zeros((n, n)), cp]])
    state = GaussianState(n_modes=n, mean=np.zeros(2 * n), cov=cov)
    if not state.is_physical():
        raise UnphysicalStateError(
            "constructed covariance violates the Heisenberg bound; "
            "check the supermode spec"
        )
    return state


def apply_loss(state: GaussianState, transmission) -> GaussianState:
    """Pass every mode through a loss channel of the given transmission.

    ``transmission`` is a scalar applied uniformly or one value per mode;
    covariance maps to ``t*cov + (1-t)*I`` and the mean scales by sqrt(t).
    """
    n = state.n_modes
    t = np.asarray(transmission, dtype=float)
    if t.ndim == 0:
        t = np.full(n, float(t))
    if t.shape != (n,):
        raise ValueError(f"transmission must be scalar or shape ({n},)")
    if np.any(t < 0) or np.any(t > 1):
        raise ValueError("transmission must lie in [0, 1]")
    rt = np.sqrt(np.concatenate([t, t]))
    cov = rt[:, None] * state.cov * rt[None, :] + np.diag(1.0 - np.concatenate([t, t]))
    mean = rt * state.mean
    return GaussianState(n_modes=n, mean=mean, cov=cov)


def mix_synthetic_beam(
    squeezed: GaussianState,
    bright_mean: np.ndarray,
    reflectivity: float,
    detected_flux: float | None = None,
) -> GaussianState:
    """Combine squeezed vacuum with a bright comb on a reflective beamsplitter.

    The output carries the transmitted mean field ``sqrt(1-R) * bright_mean``
    (x quadrature, amplitude alpha per mode, so mean_x = 2*alpha) and the
    reflected quantum fluctuations ``R*cov + (1-R)*I``.  When
    ``detected_flux`` is given the mean is rescaled so the total photon rate
    ``sum(alpha**2)`` matches it, which models pinning the detected power
    instead of deriving it from the splitter.
    """
    if not 0.0 <= reflectivity <= 1.0:
        raise ValueError("reflectivity must lie in [0, 1]")
    n = squeezed.n_modes
    alpha = np.asarray(bright_mean, dtype=float)
    if alpha.shape != (n,):
        raise ValueError(f"bright_mean must have shape ({n},)")
    out_alpha = np.sqrt(1.0 - reflectivity) * alpha
    if detected_flux is not None:
        total = float(np.sum(out_alpha**2))
        if total == 0.0:
            raise ValueError("cannot renormalize a zero mean field to a finite flux")
        out_alpha = out_alpha * np.sqrt(detected_flux / total)
    cov = reflectivity * squeezed.cov + (1.0 - reflectivity) * np.eye(2 * n)
    mean = np.concatenate([2.0 * out_alpha, np.zeros(n)])
    return GaussianState(n_modes=n, mean=mean, cov=cov)


def rotate_global_quadrature(state: GaussianState, theta: float) -> GaussianState:
    """Rotate every mode's phase space by ``theta``.

    (x, p) -> (x cos(theta) + p sin(theta), -x sin(theta) + p cos(theta));
    theta = pi/2 swaps the squeezed quadratures of every mode.
    """
    n = state.n_modes
    c, s = np.cos(theta), np.sin(theta)
    eye = np.eye(n)
    S = np.block([[c * eye, s * eye], [-s * eye, c * eye]])
    return GaussianState(n_modes=n, mean=S @ state.mean, cov=S @ state.cov @ S.T)


@dataclass(frozen=True)
class SymplecticDecomposition:
    """Result of a Williamson or Bloch-Messiah factorization.

    Williamson fills ``nu`` (symplectic eigenvalues, descending) and ``S``
    with ``cov = S diag(nu, nu) S^T``.  Bloch-Messiah fills ``O1``, ``K``,
    ``O2`` with ``S = O1 K O2``, the O's orthogonal symplectic and ``K`` a
    diagonal squeezer with entries paired (kappa, 1/kappa).
    """

    nu: np.ndarray | None = None
    S: np.ndarray | None = None
    O1: np.ndarray | None = None
    K: np.ndarray | None = None
    O2: np.ndarray | None = None


def _as_cov(cov_or_state) -> np.ndarray:
    if isinstance(cov_or_state, GaussianState):
        return cov_or_state.cov
    return np.asarray(cov_or_state, dtype=float)


def williamson(cov_or_state) -> SymplecticDecomposition:
    """Williamson normal form of a positive-definite covariance matrix.

    Returns ``nu`` (each symplectic eigenvalue reported once, descending) and
    a symplectic ``S`` with ``cov = S (diag(nu) oplus diag(nu)) S^T``.  The
    route is the standard one through the antisymmetric matrix
    ``cov^(-1/2) J cov^(-1/2)``, whose real Schur form pairs the modes.
    """
    V = _as_cov(cov_or_state)
    if V.ndim != 2 or V.shape[0] != V.shape[1] or V.shape[0] % 2:
        raise ValueError("covariance must be square with even dimension")
    scale = max(1.0, float(np.abs(V).max()))
    if np.abs(V - V.T).max() > _SYM_TOL * scale:
        raise ValueError("covariance must be symmetric")
    V = 0.5 * (V + V.T)
    n = V.shape[0] // 2
    ev_min = np.linalg.eigvalsh(V).min()
    if ev_min <= 0:
        raise ValueError(f"covariance must be positive definite (min eig {ev_min})")
    J = symplectic_form(n)
    Vh = sqrtm(V).real
    Vmh = np.linalg.inv(Vh)
    M = Vmh @ J @ Vmh
    M = 0.5 * (M - M.T)
    T, Q = schur(M)  # 2x2 antisymmetric blocks [[0, 1/nu], [-1/nu, 0]]
    t = np.array([T[2 * i, 2 * i + 1] for i in range(n)])
    Q = Q.copy()
    for i in range(n):
        if t[i] < 0:
            Q[:, [2 * i, 2 * i + 1]] = Q[:, [2 * i + 1, 2 * i]]
            t[i] = -t[i]
    nu = 1.0 / t
    order = np.argsort(-nu)
    nu = nu[order]
    # regroup interleaved (x_i, p_i) Schur columns into xxpp ordering
    O = np.column_stack(
        [Q[:, 2 * i] for i in order] + [Q[:, 2 * i + 1] for i in order]
    )
    S = Vh @ O @ np.diag(1.0 / np.sqrt(np.concatenate([nu, nu])))
    return SymplecticDecomposition(nu=nu, S=S)


def _symplectic_pairs_of_unit_space(basis: np.ndarray, J: np.ndarray):
    """Split a J-invariant orthonormal subspace into symplectic (a, b) pairs."""
    cols = [basis[:, i] for i in range(basis.shape[1])]
    a_list, b_list = [], []
    while cols:
        a = cols.pop(0)
        a = a / np.linalg.norm(a)
        b = -J @ a
        # deflate remaining columns against the chosen pair
        cols = [c - (a @ c) * a - (b @ c) * b for c in cols]
        cols = [c for c in cols if np.linalg.norm(c) > 1e-7]
        cols = [c / np.linalg.norm(c) for c in cols]
        a_list.append(a)
        b_list.append(b)
    return a_list, b_list


def bloch_messiah(S: np.ndarray, tol: float = 1e-8) -> SymplecticDecomposition:
    """Euler decomposition ``S = O1 K O2`` of a real symplectic matrix.

    O1 and O2 are orthogonal symplectic and K = diag(kappa_1..kappa_n,
    1/kappa_1..1/kappa_n) with kappa >= 1 descending.  Uses the polar
    decomposition S = U P; the symmetric symplectic part P is diagonalized
    with its eigenvectors arranged into symplectic pairs (for kappa > 1 the
    pairing b = -J a is automatic; the kappa = 1 subspace is paired by
    symplectic Gram-Schmidt).
    """
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape[0] % 2:
        raise ValueError("S must be square with even dimension")
    n = S.shape[0] // 2
    J = symplectic_form(n)
    if np.abs(S.T @ J @ S - J).max() > max(tol, tol * np.abs(S).max() ** 2):
        raise ValueError("S is not symplectic")
    U, P = polar(S, side="right")  # S = U P, P = sqrt(S^T S)
    P = 0.5 * (P + P.T)
    evals, evecs = np.linalg.eigh(P)
    pair_tol = 1e-8
    big = evals > 1.0 + pair_tol
    unit = np.abs(evals - 1.0) <= pair_tol
    a_list = [evecs[:, i] for i in np.nonzero(big)[0][::-1]]  # descending kappa
    kappas = list(evals[big][::-1])
    b_list = [-J @ a for a in a_list]
    if np.any(unit):
        a1, b1 = _symplectic_pairs_of_unit_space(evecs[:, unit], J)
        a_list += a1
        b_list += b1
        kappas += [1.0] * len(a1)
    if len(a_list) != n:
        raise ValueError("failed to pair the squeezer eigenvalues")
    O = np.column_stack(a_list + b_list)
    kappas = np.asarray(kappas)
    K = np.diag(np.concatenate([kappas, 1.0 / kappas]))
    O1 = U @ O
    O2 = O.T
    return SymplecticDecomposition(S=S, O1=O1, K=K, O2=O2)


@dataclass(frozen=True)
class Supermode:
    """One extracted supermode: pixel-basis vector and both variances."""

    vector: np.ndarray
    var_x: float
    var_p: float
    db_x: float = field(init=False)
    db_p: float = field(init=False)

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=float)
        v.flags.writeable = False
        object.__setattr__(self, "vector", v)
        object.__setattr__(self, "db_x", 10.0 * np.log10(self.var_x))
        object.__setattr__(self, "db_p", 10.0 * np.log10(self.var_p))


def supermode_extract(cov_or_state, cross_tol: float = 1e-6) -> list[Supermode]:
    """Eigenmodes of the x block, sorted by ascending x variance.

    Requires the x-p cross block to vanish (within ``cross_tol`` of the
    largest diagonal element); otherwise the state carries x-p correlations
    and :func:`williamson` must be used instead.  Within degenerate groups of
    x variance the basis is fixed deterministically by diagonalizing the p
    block there, then orienting each vector's largest component positive, so
    repeated runs return identical vectors.
    """
    V = _as_cov(cov_or_state)
    if V.ndim != 2 or V.shape[0] != V.shape[1] or V.shape[0] % 2:
        raise ValueError("covariance must be square with even dimension")
    n = V.shape[0] // 2
    cx = V[:n, :n]
    cp = V[n:, n:]
    cross = V[:n, n:]
    diag_max = float(np.abs(np.diag(V)).max())
    if np.abs(cross).max() > cross_tol * diag_max:
        raise ValueError(
            "x-p cross block is non-zero beyond tolerance; use williamson() "
            "for correlated states"
        )
    evals, evecs = np.linalg.eigh(cx)  # ascending
    # deterministic basis inside numerically degenerate eigenvalue groups
    group_tol = 1e-8 * max(1.0, float(np.abs(evals).max()))
    i = 0
    while i < n:
        j = i + 1
        while j < n and evals[j] - evals[i] <= group_tol:
            j += 1
        if j - i > 1:
            sub = evecs[:, i:j]
            p_sub = sub.T @ cp @ sub
            _, rot = np.linalg.eigh(0.5 * (p_sub + p_sub.T))
            evecs[:, i:j] = sub @ rot
        i = j
    out = []
    for i in range(n):
        v = evecs[:, i]
        if v[np.argmax(np.abs(v))] < 0:
            v = -v
        var_p = float(v @ cp @ v)
        out.append(Supermode(vector=v, var_x=float(evals[i]), var_p=var_p))
    return out


def covariance_to_csv(cov_or_state, path) -> None:
    """Write a 2n x 2n covariance matrix as CSV with an x1..xn,p1..pn header."""
    V = _as_cov(cov_or_state)
    n = V.shape[0] // 2
    header = [f"x{i+1}" for i in range(n)] + [f"p{i+1}" for i in range(n)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in V:
            writer.writerow([repr(float(v)) for v in row])


def covariance_from_csv(path) -> np.ndarray:
    """Read back a covariance matrix written by :func:`covariance_to_csv`."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader if row]
    dim = len(header)
    if dim % 2 or any(len(r) != dim for r in rows) or len(rows) != dim:
        raise ValueError(f"{path} does not hold a square 2n x 2n matrix")
    return np.asarray(rows)
