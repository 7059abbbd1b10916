import logging
from dataclasses import dataclass, field
from itertools import product
from math import pi, prod
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg
from scipy.stats import unitary_group

from .exact_arith import ZERO, Angle, Rat1, as_angle, circular_distance, rat1_make, snap_to_rat1
from .exceptions import RelationError
from .settings import DEFAULTS
from .skew_forms import NormalFormQZ, SkewQZ, block_parameters

logger = logging.getLogger(__name__)

BlockValues = Union[NormalFormQZ, Sequence[Rat1]]
AngleTable = Optional[Union[np.ndarray, Sequence[Sequence[Angle]]]]


@dataclass
class ACTuple(object):
    """
    An ordered n-tuple of m x m complex matrices.

    Attributes
    ----------
    n : int
        Tuple length.

    m : int
        Matrix dimension.

    mats : List[numpy.ndarray]
        The matrices ``A_1, ..., A_n``.

    metadata : dict
        Provenance and verification records, e.g. the construction parameters or
        the unitarity defect measured at construction.
    """

    n: int
    m: int
    mats: List[np.ndarray]
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        mats = [np.asarray(A, dtype=complex) for A in self.mats]
        if len(mats) != self.n:
            raise ValueError(f"Expected {self.n} matrices, got {len(mats)}.")
        for k, A in enumerate(mats):
            if A.shape != (self.m, self.m):
                raise ValueError(
                    f"Matrix {k + 1} has shape {A.shape}, expected ({self.m}, {self.m})."
                )
        self.mats = mats

    def __getitem__(self, i: int) -> np.ndarray:
        return self.mats[i]

    def __len__(self) -> int:
        return self.n

    def unitarity_defect(self) -> float:
        """``max_i max|A_i^* A_i - I|``."""
        eye = np.eye(self.m)
        return max((float(np.max(np.abs(A.conj().T @ A - eye))) for A in self.mats), default=0.0)


@dataclass
class SpectralData(object):
    """
    Canonical spectral data of a D-commuting tuple.

    Attributes
    ----------
    t : int
        Number of blocks of ``D``.

    orders : Tuple[int, ...]
        Block orders ``|d_1|, ..., |d_t|``.

    l : int
        Multiplicity, ``m = l * prod(orders)``.

    alphas : numpy.ndarray
        ``(l, n - t)`` eigenvalue angles (in turns) of ``A_{t+1}, ..., A_n`` on ``v_j``.

    betas : numpy.ndarray
        ``(l, t)`` angles of ``A_i^{|d_i|}`` on ``v_j``.

    basis : numpy.ndarray
        ``(m, m)`` matrix whose columns are ``A_1^{p_1} ... A_t^{p_t} v_j``, with
        ``p_1`` varying fastest and ``j`` slowest.
    """

    t: int
    orders: Tuple[int, ...]
    l: int
    alphas: np.ndarray
    betas: np.ndarray
    basis: np.ndarray

    def __post_init__(self) -> None:
        self.orders = tuple(int(o) for o in self.orders)
        self.alphas = np.asarray(self.alphas, dtype=float).reshape(self.l, -1)
        self.betas = np.asarray(self.betas, dtype=float).reshape(self.l, self.t)
        self.basis = np.asarray(self.basis, dtype=complex)
        if len(self.orders) != self.t:
            raise ValueError(f"Expected {self.t} orders, got {len(self.orders)}.")
        if self.basis.shape != (self.m, self.m):
            raise ValueError(f"Basis has shape {self.basis.shape}, expected ({self.m}, {self.m}).")

    @property
    def sigma(self) -> int:
        return prod(self.orders)

    @property
    def m(self) -> int:
        return self.l * self.sigma

    @property
    def n(self) -> int:
        return self.t + self.alphas.shape[1]

    @classmethod
    def from_parameters(
        cls,
        ds: BlockValues,
        n: int,
        l: int,
        alphas: AngleTable = None,
        betas: AngleTable = None,
    ) -> "SpectralData":
        """Spectral data of :func:`build_zd` output; the basis is the standard one."""
        ds = _block_values(ds)
        t = len(ds)
        orders = tuple(d.den for d in ds)
        return cls(
            t,
            orders,
            l,
            _angle_table(alphas, l, n - t, "alphas"),
            _angle_table(betas, l, t, "betas"),
            np.eye(l * prod(orders), dtype=complex),
        )


@dataclass
class RelationReport(object):
    """
    Outcome of :func:`verify_relations`.

    Pairs are reported 1-based as ``(i, j)`` with ``i < j``.
    """

    tol: float
    unitarity_defect: float
    scalar_defects: Dict[Tuple[int, int], float]
    angle_deviations: Dict[Tuple[int, int], float]
    failures: List[Tuple[int, int]]

    @property
    def passed(self) -> bool:
        return self.unitarity_defect <= self.tol and not self.failures

    @property
    def max_scalar_defect(self) -> float:
        return max(self.scalar_defects.values(), default=0.0)

    @property
    def max_angle_deviation(self) -> float:
        return max(self.angle_deviations.values(), default=0.0)


@dataclass
class CharPolyReport(object):
    """Coefficient deviations between numerical and closed-form characteristic polynomials."""

    tol: float
    deviations: List[float]

    @property
    def passed(self) -> bool:
        return all(d <= self.tol for d in self.deviations)

    @property
    def max_deviation(self) -> float:
        return max(self.deviations, default=0.0)


def _block_values(ds: BlockValues) -> Tuple[Rat1, ...]:
    if isinstance(ds, NormalFormQZ):
        return ds.ds
    values = tuple(ds)
    for k, d in enumerate(values):
        if not isinstance(d, Rat1) or d == ZERO:
            raise ValueError(f"Block value {k + 1} must be a nonzero Rat1, got {d!r}.")
    return values


def _angle_table(table: AngleTable, rows: int, cols: int, name: str) -> np.ndarray:
    if table is None:
        return np.zeros((rows, cols))
    values = [[as_angle(x) for x in row] for row in table]
    if len(values) == rows and all(len(row) == cols for row in values):
        return np.array(values, dtype=float).reshape(rows, cols)
    got = [len(row) for row in values]
    raise ValueError(f"{name} must have {rows} rows of {cols} angles, got row lengths {got}.")


def _phase(angles: np.ndarray) -> np.ndarray:
    return np.exp(2j * pi * angles)


def build_zd(
    ds: BlockValues,
    n: int,
    l: int = 1,
    alphas: AngleTable = None,
    betas: AngleTable = None,
) -> ACTuple:
    """
    Explicit D-commuting tuple for ``D = D_n(d_1, ..., d_t)``.

    Rows and columns are indexed by ``(p_1, ..., p_t, j)`` with ``0 <= p_i < |d_i|``
    and ``0 <= j < l``, ``p_1`` varying fastest. For ``i < t`` (0-based) ``A_i`` shifts
    ``p_i`` up by one and multiplies the wrap-around by ``exp(2 pi i beta_ij)``; for
    ``t <= i < 2t`` it is ``diag(gamma_k^{p_k} alpha_ij)`` with ``k = i - t``; beyond
    that it is ``diag(alpha_ij)``.

    Parameters
    ----------
    ds : Sequence[Rat1] or NormalFormQZ
        Nonzero block values ``d_1, ..., d_t``.

    n : int
        Tuple length, ``2t <= n``.

    l : int (default: 1)
        Multiplicity; the matrix dimension is ``l * prod(|d_i|)``.

    alphas : array-like, optional
        ``(l, n - t)`` angles (Rat1 or float turns). Zero by default.

    betas : array-like, optional
        ``(l, t)`` angles. Zero by default.

    Returns
    -------
    tuple : :class:`ACTuple`

    Examples
    --------
    >>> from acmpy.exact_arith import rat1_make
    >>> pauli = build_zd([rat1_make(1, 2)], 2)
    >>> pauli[0].real
    array([[0., 1.],
           [1., 0.]])
    """
    ds = _block_values(ds)
    t = len(ds)
    if 2 * t > n:
        raise ValueError(f"{t} blocks do not fit in a {n}-tuple.")
    if l < 1:
        raise ValueError(f"l must be >= 1, got {l}.")
    orders = [d.den for d in ds]
    m = l * prod(orders)
    alpha_phase = _phase(_angle_table(alphas, l, n - t, "alphas"))
    beta_phase = _phase(_angle_table(betas, l, t, "betas"))

    shape = (l,) + tuple(reversed(orders))
    coords = np.indices(shape).reshape(len(shape), m)
    j_of = coords[0]
    cols = np.arange(m)

    mats = []
    for i in range(t):
        p = coords[t - i]
        stride = prod(orders[:i])
        wrap = p == orders[i] - 1
        rows = np.where(wrap, cols - (orders[i] - 1) * stride, cols + stride)
        A = np.zeros((m, m), dtype=complex)
        A[rows, cols] = np.where(wrap, beta_phase[j_of, i], 1.0)
        mats.append(A)
    for i in range(t, n):
        diagonal = alpha_phase[j_of, i - t]
        if i < 2 * t:
            d = ds[i - t]
            p = coords[2 * t - i]
            diagonal = diagonal * np.exp(2j * pi * ((p * d.num) % d.den) / d.den)
        mats.append(np.diag(diagonal))

    result = ACTuple(n, m, mats, {"ds": [str(d) for d in ds], "l": l})
    result.metadata["unitarity_defect"] = result.unitarity_defect()
    return result


def build_for_dimension(
    ds: BlockValues,
    n: int,
    m: int,
    alphas: AngleTable = None,
    betas: AngleTable = None,
) -> ACTuple:
    """
    :func:`build_zd` at a prescribed dimension ``m``.

    Raises
    ------
    ValueError
        If ``sigma(D)`` does not divide ``m``; no D-commuting tuple exists then.
    """
    ds = _block_values(ds)
    sigma = prod(d.den for d in ds)
    if m % sigma:
        raise ValueError(
            f"sigma(D) = {sigma} does not divide m = {m}: no D-commuting tuple exists."
        )
    return build_zd(ds, n, m // sigma, alphas, betas)


def random_zd_parameters(
    ds: BlockValues,
    n: int,
    l: int,
    rng: Optional[np.random.Generator] = None,
    max_den: int = 12,
) -> Tuple[List[List[Rat1]], List[List[Rat1]]]:
    """Seeded random rational angles ``(alphas, betas)`` for :func:`build_zd`."""
    if rng is None:
        rng = np.random.default_rng(DEFAULTS.seed)
    t = len(_block_values(ds))

    def draw() -> Rat1:
        den = int(rng.integers(1, max_den + 1))
        return rat1_make(int(rng.integers(0, den)), den)

    alphas = [[draw() for _ in range(n - t)] for _ in range(l)]
    betas = [[draw() for _ in range(t)] for _ in range(l)]
    return alphas, betas


def random_unitary(m: int, seed: Optional[int] = None) -> np.ndarray:
    """Haar-random unitary matrix, seeded with ``DEFAULTS.seed`` unless given."""
    if seed is None:
        seed = DEFAULTS.seed
    if m == 1:
        rng = np.random.default_rng(seed)
        return np.array([[np.exp(2j * pi * rng.random())]])
    return np.asarray(unitary_group.rvs(m, random_state=seed), dtype=complex).reshape(m, m)


def commutator(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """``A B A^-1 B^-1``."""
    return A @ B @ np.linalg.inv(A) @ np.linalg.inv(B)


def _scalar_part(C: np.ndarray) -> Tuple[complex, float]:
    c = np.trace(C) / C.shape[0]
    return c, float(np.max(np.abs(C - c * np.eye(C.shape[0]))))


def conjugate(tup: ACTuple, U: np.ndarray, tol: Optional[float] = None) -> ACTuple:
    """
    Return ``(U A_1 U^*, ..., U A_n U^*)``.

    Parameters
    ----------
    tup : :class:`ACTuple`

    U : numpy.ndarray
        m x m unitary matrix.

    tol : float, optional
        Unitarity tolerance for ``U``. Defaults to ``DEFAULTS.construction_tol``.
    """
    if tol is None:
        tol = DEFAULTS.construction_tol
    U = np.asarray(U, dtype=complex)
    if U.shape != (tup.m, tup.m):
        raise ValueError(f"U has shape {U.shape}, expected ({tup.m}, {tup.m}).")
    defect = float(np.max(np.abs(U.conj().T @ U - np.eye(tup.m))))
    if defect > tol:
        raise ValueError(f"U is not unitary (defect {defect:.3e} > {tol:.1e}).")
    mats = [U @ A @ U.conj().T for A in tup.mats]
    return ACTuple(tup.n, tup.m, mats, {**tup.metadata, "conjugated": True})


def rho_classify(
    tup: ACTuple,
    tol: Optional[float] = None,
    max_den: Optional[int] = None,
) -> SkewQZ:
    """
    Commutator phase matrix of an almost commuting tuple.

    Entry ``(i, j)`` is ``d_ij`` with ``[A_i, A_j] = exp(2 pi i d_ij) I``, snapped to the
    best rational with denominator at most ``max_den``.

    Parameters
    ----------
    tup : :class:`ACTuple`

    tol : float, optional
        Largest accepted deviation from a scalar commutator and from the snapped
        angle. Defaults to ``DEFAULTS.construction_tol``.

    max_den : int, optional
        Denominator cap. Defaults to ``m * DEFAULTS.max_den_factor``.

    Returns
    -------
    D : :class:`~acmpy.skew_forms.SkewQZ`
    """
    if tol is None:
        tol = DEFAULTS.construction_tol
    if max_den is None:
        max_den = DEFAULTS.max_den(tup.m)
    table = [[ZERO] * tup.n for _ in range(tup.n)]
    for i in range(tup.n):
        for j in range(i + 1, tup.n):
            c, defect = _scalar_part(commutator(tup[i], tup[j]))
            if defect > tol:
                raise RelationError(
                    f"Commutator [A_{i + 1}, A_{j + 1}] is not scalar "
                    f"(defect {defect:.3e} > {tol:.1e})."
                )
            angle = float(np.angle(c)) / (2 * pi)
            snapped, error = snap_to_rat1(angle, max_den)
            if error > tol:
                raise RelationError(
                    f"Phase {angle % 1.0:.12f} of [A_{i + 1}, A_{j + 1}] has no rational "
                    f"approximation with denominator <= {max_den} within {tol:.1e}."
                )
            if tup.m % snapped.den:
                logger.warning(
                    "Phase %s of [A_%d, A_%d] is not an m-th root of unity (m = %d).",
                    snapped,
                    i + 1,
                    j + 1,
                    tup.m,
                )
            table[i][j] = snapped
            table[j][i] = -snapped
    return SkewQZ(tup.n, tuple(map(tuple, table)))


def verify_relations(tup: ACTuple, D: SkewQZ, tol: Optional[float] = None) -> RelationReport:
    """
    Check unitarity and ``[A_i, A_j] = exp(2 pi i D_ij) I`` for every pair.

    Failures are carried in the report rather than raised.
    """
    if tol is None:
        tol = DEFAULTS.construction_tol
    if D.n != tup.n:
        raise ValueError(f"D has dimension {D.n} but the tuple has length {tup.n}.")
    scalar_defects = {}
    angle_deviations = {}
    failures = []
    for i in range(tup.n):
        for j in range(i + 1, tup.n):
            c, defect = _scalar_part(commutator(tup[i], tup[j]))
            deviation = circular_distance(float(np.angle(c)) / (2 * pi), float(D[i, j]))
            scalar_defects[(i + 1, j + 1)] = defect
            angle_deviations[(i + 1, j + 1)] = deviation
            if defect > tol or deviation > tol:
                failures.append((i + 1, j + 1))
    report = RelationReport(
        tol, tup.unitarity_defect(), scalar_defects, angle_deviations, failures
    )
    if not report.passed:
        logger.info("Relation check failed at pairs %s.", failures)
    return report


def expected_char_poly(sd: SpectralData, i: int) -> np.ndarray:
    """Closed-form characteristic polynomial coefficients of ``A_i`` (0-based ``i``)."""
    t, l, m = sd.t, sd.l, sd.m
    coeffs = np.array([1.0 + 0.0j])
    for j in range(l):
        if i < t:
            o = sd.orders[i]
            factor = np.zeros(o + 1, dtype=complex)
            factor[0], factor[-1] = 1.0, -np.exp(2j * pi * sd.betas[j, i])
            power = m // (o * l)
        elif i < 2 * t:
            o = sd.orders[i - t]
            factor = np.zeros(o + 1, dtype=complex)
            factor[0], factor[-1] = 1.0, -np.exp(2j * pi * o * sd.alphas[j, i - t])
            power = m // (o * l)
        else:
            factor = np.array([1.0, -np.exp(2j * pi * sd.alphas[j, i - t])])
            power = m // l
        for _ in range(power):
            coeffs = np.polymul(coeffs, factor)
    return coeffs


def char_poly(A: np.ndarray) -> np.ndarray:
    return np.poly(np.linalg.eigvals(A))


def char_poly_check(tup: ACTuple, sd: SpectralData, tol: Optional[float] = None) -> CharPolyReport:
    """
    Compare each numerical characteristic polynomial with its closed form.

    For ``i < t`` it is ``prod_j (z^|d_i| - beta_ij)^(m/(|d_i| l))``, for ``t <= i < 2t``
    ``prod_j (z^|d| - alpha_ij^|d|)^(m/(|d| l))`` with ``d = d_{i-t}``, and
    ``prod_j (z - alpha_ij)^(m/l)`` otherwise.
    """
    if tol is None:
        tol = DEFAULTS.spectral_tol
    if sd.m != tup.m or sd.n != tup.n:
        raise ValueError(
            f"Spectral data for (n, m) = ({sd.n}, {sd.m}) does not match ({tup.n}, {tup.m})."
        )
    deviations = [
        float(np.max(np.abs(char_poly(A) - expected_char_poly(sd, i))))
        for i, A in enumerate(tup.mats)
    ]
    return CharPolyReport(tol, deviations)


def _cluster_angles(angles: np.ndarray, tol: float) -> List[Tuple[float, np.ndarray]]:
    """
    Group angles on R/Z: gaps up to ``tol`` merge, gaps of ``10 * tol`` or more split.

    Returns ``(center, indices)`` pairs sorted by center.
    """
    order = np.argsort(angles)
    a = angles[order]
    k = len(a)
    gaps = np.diff(np.append(a, a[0] + 1.0))
    start = (int(np.argmax(gaps)) + 1) % k
    groups = [[start]]
    for step in range(1, k):
        idx = (start + step) % k
        gap = gaps[(idx - 1) % k]
        if gap <= tol:
            groups[-1].append(idx)
        elif gap >= 10 * tol:
            groups.append([idx])
        else:
            raise RelationError(
                f"Eigenvalue clusters {gap:.3e} apart are ambiguous at tol {tol:.1e}; "
                "use a smaller tuple or exact input."
            )
    clusters = []
    for group in groups:
        base = a[group[0]]
        center = (base + float(np.mean((a[group] - base) % 1.0))) % 1.0
        clusters.append((center, order[group]))
    return sorted(clusters, key=lambda c: c[0])


def _common_eigenspace(M: np.ndarray, S: np.ndarray, tol: float) -> Tuple[np.ndarray, float]:
    """Restrict ``M`` to the span of ``S`` and return the first eigenspace and its angle."""
    R = S.conj().T @ M @ S
    eigvals = np.linalg.eigvals(R)
    center, members = _cluster_angles((np.angle(eigvals) / (2 * pi)) % 1.0, tol)[0]
    size = len(members)
    lam = np.mean(eigvals[members])
    _, _, vh = linalg.svd(R - lam * np.eye(R.shape[0]))
    sub = S @ vh[-size:].conj().T
    residual = float(np.max(np.abs(M @ sub - lam * sub)))
    if residual > 10 * tol * size:
        raise RelationError(f"Eigenspace did not converge (residual {residual:.3e}).")
    return sub, center


def extract_canonical_basis(
    tup: ACTuple,
    D: SkewQZ,
    tol: Optional[float] = None,
) -> SpectralData:
    """
    Recover orthonormal vectors ``v_1, ..., v_l`` and angles ``alpha``, ``beta``.

    For each ``j``: the commuting ``A_{t+1}, ..., A_n`` are restricted to the current
    orthogonal complement and one joint eigenspace ``W`` is cut out; a common
    eigenvector ``v_j`` of the restrictions of ``A_i^{|d_i|}`` to ``W`` is chosen; the
    vectors ``A_1^{p_1} ... A_t^{p_t} v_j`` are added to the basis and the search
    continues on their orthogonal complement.

    Parameters
    ----------
    tup : :class:`ACTuple`
        A D-commuting tuple.

    D : :class:`~acmpy.skew_forms.SkewQZ`
        Standard block matrix ``D_n(d_1, ..., d_t)``.

    tol : float, optional
        Clustering tolerance. Defaults to ``DEFAULTS.spectral_tol``.

    Returns
    -------
    sd : :class:`SpectralData`
    """
    if tol is None:
        tol = DEFAULTS.spectral_tol
    params = block_parameters(D)
    if params is None:
        raise ValueError("D must be a standard block matrix D_n(d_1, ..., d_t).")
    if D.n != tup.n:
        raise ValueError(f"D has dimension {D.n} but the tuple has length {tup.n}.")
    t, ds = params
    orders = tuple(d.den for d in ds)
    sigma = prod(orders)
    report = verify_relations(tup, D, tol)
    if not report.passed:
        raise RelationError(f"Tuple is not D-commuting; failing pairs {report.failures}.")
    if tup.m % sigma:
        raise RelationError(f"sigma(D) = {sigma} does not divide m = {tup.m}.")
    l = tup.m // sigma
    A = tup.mats
    powers = [[np.linalg.matrix_power(A[i], p) for p in range(orders[i] + 1)] for i in range(t)]
    indices = [rev[::-1] for rev in product(*(range(o) for o in reversed(orders)))]

    blocks: List[np.ndarray] = []
    alpha_rows, beta_rows = [], []
    complement = np.eye(tup.m, dtype=complex)
    for j in range(l):
        S = complement
        alpha_row = []
        for i in range(t, tup.n):
            S, angle = _common_eigenspace(A[i], S, tol)
            alpha_row.append(angle)
        beta_row = []
        for i in range(t):
            S, angle = _common_eigenspace(powers[i][orders[i]], S, tol)
            beta_row.append(angle)
        v = S[:, 0]
        vectors = []
        for p in indices:
            vec = v
            for i in reversed(range(t)):
                vec = powers[i][p[i]] @ vec
            vectors.append(vec)
        block = np.column_stack(vectors)
        basis = np.hstack(blocks + [block])
        defect = float(np.max(np.abs(basis.conj().T @ basis - np.eye(basis.shape[1]))))
        if defect > 10 * tol:
            raise RelationError(f"Extracted vectors are not orthonormal (defect {defect:.3e}).")
        blocks.append(block)
        alpha_rows.append(alpha_row)
        beta_rows.append(beta_row)
        if j < l - 1:
            complement = linalg.null_space(basis.conj().T)
            if complement.shape[1] != tup.m - basis.shape[1]:
                raise RelationError("Orthogonal complement has the wrong dimension.")
        logger.debug("Extracted block %d of %d.", j + 1, l)

    return SpectralData(
        t, orders, l, np.array(alpha_rows), np.array(beta_rows), np.hstack(blocks)
    )


def normalized_orbit(sd: SpectralData, tol: Optional[float] = None) -> np.ndarray:
    """
    Representative of the spectral data up to the ``Z_D`` action and reordering of ``j``.

    Each ``alpha_{t+k}`` is reduced modulo ``1/|d_k|`` and the rows
    ``(alpha..., beta...)`` are sorted lexicographically.
    """
    if tol is None:
        tol = DEFAULTS.spectral_tol
    periods = np.ones(sd.alphas.shape[1] + sd.t)
    periods[: sd.t] = [1.0 / o for o in sd.orders]
    rows = np.hstack([sd.alphas, sd.betas]) % periods
    rows[np.abs(rows - periods) <= tol] = 0.0
    keys = np.round(rows / tol).astype(np.int64)
    order = np.lexsort(keys.T[::-1]) if keys.size else np.arange(len(rows))
    return rows[order]
