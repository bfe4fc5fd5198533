"""Fitting a product of single-qubit channels to measured single-qubit data.

Pipeline: pick QAOA angle settings, collect noisy single-qubit expectations
(simulated or ingested), compute the ideal ones, regress the noisy values on
the ideal ones per qubit and basis, and map the fitted coefficients back to a
single-qubit chi matrix.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.linalg

from . import channels as ch
from . import metrics
from .dualmap import CoeffVec, chi_from_coeffs
from .qsim import (
    ParamSetting,
    QuboProblem,
    build_qaoa_state,
    evolve_noisy_qaoa,
    sample_basis,
    single_qubit_expectations,
)

BASES = "XYZ"
EXACT = -1  # shots marker for exact expectation values
VALUE_SLACK = 1e-9
RANK_THRESHOLD = 1e8
MIN_SETTINGS = 4
RECOMMENDED_SETTINGS = 16
CSV_HEADER = ("qubit", "setting_index", "gamma", "beta", "basis", "value", "shots")
DESIGN_COLUMNS = "IXYZ"


@dataclass(frozen=True)
class SettingSet:
    settings: tuple
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "settings", tuple(self.settings))
        if len(self.settings) < MIN_SETTINGS:
            raise ValueError(f"need at least {MIN_SETTINGS} settings, got {len(self.settings)}")

    def __len__(self) -> int:
        return len(self.settings)

    def __iter__(self):
        return iter(self.settings)

    @property
    def gammas(self) -> np.ndarray:
        return np.array([s.gamma for s in self.settings])

    @property
    def betas(self) -> np.ndarray:
        return np.array([s.beta for s in self.settings])

    @classmethod
    def from_angles(cls, gammas: Sequence[float], betas: Sequence[float], seed: int | None = None) -> "SettingSet":
        return cls(tuple(ParamSetting(float(g), float(b)) for g, b in zip(gammas, betas)), seed)


def generate_settings(
    count: int,
    seed: int,
    gamma_range: tuple[float, float] = (0.0, 2 * math.pi),
    beta_range: tuple[float, float] = (0.0, math.pi),
) -> SettingSet:
    """Draw ``count`` (gamma, beta) pairs i.i.d. uniform from half-open ranges."""
    for name, (lo, hi) in (("gamma", gamma_range), ("beta", beta_range)):
        if not hi > lo:
            raise ValueError(f"{name} range [{lo}, {hi}) is empty")
    if count < MIN_SETTINGS:
        raise ValueError(f"need at least {MIN_SETTINGS} settings for a determined fit, got {count}")
    if count < RECOMMENDED_SETTINGS:
        warnings.warn(f"only {count} settings; fits with fewer than {RECOMMENDED_SETTINGS} are fragile", stacklevel=2)
    rng = np.random.default_rng(seed)
    gammas = rng.uniform(*gamma_range, size=count)
    betas = rng.uniform(*beta_range, size=count)
    return SettingSet.from_angles(gammas, betas, seed)


@dataclass(frozen=True, eq=False)
class ExpectationTable:
    """Single-qubit expectations indexed by (qubit, setting, basis).

    ``values[q, s, b]`` holds the mean of basis ``"XYZ"[b]`` on qubit ``q`` at
    setting ``s``.  ``shots`` has the same shape; ``-1`` marks exact values.
    """

    values: np.ndarray
    gammas: np.ndarray
    betas: np.ndarray
    shots: np.ndarray | int = EXACT

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 3 or vals.shape[2] != 3:
            raise ValueError("values must have shape (n_qubits, n_settings, 3)")
        if not np.all(np.isfinite(vals)):
            raise ValueError("expectation values must be finite")
        bad = np.argwhere(np.abs(vals) > 1 + VALUE_SLACK)
        if bad.size:
            q, s, b = bad[0]
            raise ValueError(f"value {vals[q, s, b]} out of range at qubit {q}, setting {s}, basis {BASES[b]}")
        gammas = np.array(self.gammas, dtype=float).reshape(-1)
        betas = np.array(self.betas, dtype=float).reshape(-1)
        if gammas.size != vals.shape[1] or betas.size != vals.shape[1]:
            raise ValueError("one gamma and beta per setting required")
        shots = np.broadcast_to(np.asarray(self.shots, dtype=int), vals.shape).copy()
        for arr, name in ((vals, "values"), (gammas, "gammas"), (betas, "betas"), (shots, "shots")):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_qubits(self) -> int:
        return self.values.shape[0]

    @property
    def n_settings(self) -> int:
        return self.values.shape[1]

    @property
    def is_exact(self) -> bool:
        return bool(np.all(self.shots == EXACT))

    def settings(self) -> SettingSet:
        return SettingSet.from_angles(self.gammas, self.betas)

    def rows(self):
        """Yield CSV-style rows ordered by qubit, setting, basis."""
        for q in range(self.n_qubits):
            for s in range(self.n_settings):
                for b in range(3):
                    yield q, s, self.gammas[s], self.betas[s], BASES[b], self.values[q, s, b], int(self.shots[q, s, b])


def ideal_expectations(problem: QuboProblem, settings: SettingSet) -> ExpectationTable:
    vals = np.empty((problem.n_qubits, len(settings), 3))
    for s, setting in enumerate(settings):
        vals[:, s, :] = single_qubit_expectations(build_qaoa_state(problem, setting))
    return ExpectationTable(vals, settings.gammas, settings.betas, EXACT)


def noisy_expectations(
    problem: QuboProblem,
    settings: SettingSet,
    noise: ch.NoiseSpec | None,
    shots: int | str = "exact",
    sampling_mode: str = "multinomial",
    rng: np.random.Generator | None = None,
) -> ExpectationTable:
    """Simulate the noisy circuit for every setting.

    ``shots="exact"`` returns true expectations.  Otherwise ``multinomial``
    samples every basis ``shots`` times, and ``gaussian`` adds N(0, 1/sqrt(shots))
    to the exact values and clips to [-1, 1].
    """
    exact = shots == "exact" or shots is None
    if not exact:
        shots = int(shots)
        if shots < 1:
            raise ValueError("shots must be >= 1")
        if sampling_mode not in ("multinomial", "gaussian"):
            raise ValueError(f"unknown sampling mode {sampling_mode!r}")
        if rng is None:
            raise ValueError("sampling requires an rng")
    n = problem.n_qubits
    vals = np.empty((n, len(settings), 3))
    for s, setting in enumerate(settings):
        rho = evolve_noisy_qaoa(problem, setting, noise)
        if exact or sampling_mode == "gaussian":
            vals[:, s, :] = single_qubit_expectations(rho)
        else:
            for b, basis in enumerate(BASES):
                vals[:, s, b], _ = sample_basis(rho, basis, shots, rng)
    if not exact and sampling_mode == "gaussian":
        vals = np.clip(vals + rng.normal(0.0, 1.0 / math.sqrt(shots), size=vals.shape), -1.0, 1.0)
    else:
        vals = np.clip(vals, -1.0, 1.0)
    return ExpectationTable(vals, settings.gammas, settings.betas, EXACT if exact else shots)


# --------------------------------------------------------------------------
# regression
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FitResult:
    """Per-qubit regression output.

    ``flagged`` lists the design columns ("I", "X", "Y" or "Z") that the data
    cannot determine; their coefficients are filled rather than fitted.
    """

    coeffs: CoeffVec
    residuals: np.ndarray  # RMS residual per basis X, Y, Z
    condition_number: float
    rank: int
    flagged: tuple = ()

    @property
    def rank_deficient(self) -> bool:
        return bool(self.flagged)


def _check_same_settings(a: ExpectationTable, b: ExpectationTable) -> None:
    if a.n_settings != b.n_settings or not (
        np.allclose(a.gammas, b.gammas, atol=1e-12) and np.allclose(a.betas, b.betas, atol=1e-12)
    ):
        raise ValueError("tables were recorded at different settings")
    if a.n_qubits != b.n_qubits:
        raise ValueError("tables cover different qubit counts")


def _undetermined_columns(design: np.ndarray, threshold: float) -> list[int]:
    _, r, piv = scipy.linalg.qr(design, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag[0] == 0:
        return list(range(design.shape[1]))
    small = diag * threshold < diag[0]
    return sorted(int(piv[k]) for k in np.flatnonzero(small))


FILL_POLICIES = ("isotropic", "identity", "zero")


def fit_coeffs(
    ideal: ExpectationTable,
    noisy: ExpectationTable,
    qubit: int,
    rank_threshold: float = RANK_THRESHOLD,
    fill: str = "isotropic",
) -> FitResult:
    """Least-squares fit of <A~> = P_AI + P_AX <X> + P_AY <Y> + P_AZ <Z> per basis A.

    Columns whose pivot falls below ``1/rank_threshold`` of the largest are
    flagged and filled instead of fitted.  Off-diagonal entries of a flagged
    column are 0.  The diagonal entry P_AA of a flagged column A is
    ``"isotropic"``: the mean of the fitted diagonal entries (1 if none),
    ``"identity"``: 1, or ``"zero"``: 0.
    """
    _check_same_settings(ideal, noisy)
    if not 0 <= qubit < ideal.n_qubits:
        raise IndexError(f"qubit {qubit} out of range")
    if fill not in FILL_POLICIES:
        raise ValueError(f"unknown fill policy {fill!r}")
    design = np.column_stack([np.ones(ideal.n_settings), ideal.values[qubit]])
    targets = noisy.values[qubit]
    cond = float(np.linalg.cond(design))
    bad = _undetermined_columns(design, rank_threshold)
    free = [k for k in range(4) if k not in bad]
    if bad:
        warnings.warn(
            f"qubit {qubit}: design columns {[DESIGN_COLUMNS[k] for k in bad]} are undetermined "
            f"(condition number {cond:.3g})",
            stacklevel=2,
        )

    def solve(fills: np.ndarray) -> np.ndarray:
        coeffs = np.zeros((3, 4))
        for a in range(3):
            target = targets[:, a].copy()
            if (a + 1) in bad:
                coeffs[a, a + 1] = fills[a]
                target -= fills[a] * design[:, a + 1]
            if free:
                coeffs[a, free] = scipy.linalg.lstsq(design[:, free], target)[0]
        return coeffs

    coeffs = solve(np.zeros(3))
    if fill != "zero" and bad:
        fitted_diag = [coeffs[a, a + 1] for a in range(3) if (a + 1) not in bad]
        value = 1.0 if fill == "identity" or not fitted_diag else float(np.mean(fitted_diag))
        coeffs = solve(np.full(3, value))
    residuals = np.sqrt(np.mean((targets - design @ coeffs.T) ** 2, axis=0))
    return FitResult(CoeffVec(coeffs.reshape(-1)), residuals, cond, len(free), tuple(DESIGN_COLUMNS[k] for k in bad))


def predict_expectations(ideal: ExpectationTable, coeffs: Sequence[CoeffVec]) -> ExpectationTable:
    """Forward model: apply fitted per-qubit coefficient vectors to ideal values."""
    if len(coeffs) != ideal.n_qubits:
        raise ValueError("one CoeffVec per qubit required")
    vals = np.empty_like(ideal.values)
    for q, p in enumerate(coeffs):
        rows = p.rows()
        vals[q] = rows[:, 0][None, :] + ideal.values[q] @ rows[:, 1:].T
    return ExpectationTable(np.clip(vals, -1 - VALUE_SLACK, 1 + VALUE_SLACK), ideal.gammas, ideal.betas, EXACT)


# --------------------------------------------------------------------------
# reconstruction
# --------------------------------------------------------------------------


def project_cptp(chi: np.ndarray) -> tuple[np.ndarray, float]:
    """Clip negative eigenvalues of a Hermitian chi, renormalize to unit trace.

    Returns the projected matrix and the Frobenius distance it moved.
    """
    chi = np.asarray(chi, dtype=complex)
    if np.max(np.abs(chi - chi.conj().T)) > 1e-10:
        raise ValueError("project_cptp needs a Hermitian matrix")
    lam, vec = np.linalg.eigh((chi + chi.conj().T) / 2)
    if lam[0] >= 0 and abs(lam.sum() - 1.0) < 1e-15:
        return chi, 0.0
    lam = np.clip(lam, 0.0, None)
    if lam.sum() <= 0:
        raise ValueError("chi has no positive spectrum to project onto")
    out = (vec * (lam / lam.sum())) @ vec.conj().T
    out = (out + out.conj().T) / 2
    return out, float(np.linalg.norm(out - chi))


@dataclass(frozen=True, eq=False)
class QubitResult:
    qubit: int
    params: ch.ChiVec12
    chi: np.ndarray
    fit: FitResult
    validity: ch.CPTPReport
    train_correlation: float
    test_correlation: float | None = None
    projected_chi: np.ndarray | None = None
    projection_distance: float | None = None

    def channel(self, projected: bool = False) -> ch.Chi:
        if projected:
            if self.projected_chi is None:
                return ch.Chi(project_cptp(self.chi)[0])
            return ch.Chi(self.projected_chi)
        return ch.Chi(self.chi)


@dataclass(frozen=True, eq=False)
class CharacterizationResult:
    qubits: tuple
    train_correlation: float
    test_correlation: float | None = None
    notes: tuple = field(default_factory=tuple)

    @property
    def n_qubits(self) -> int:
        return len(self.qubits)

    def coeffs(self) -> list[CoeffVec]:
        return [r.fit.coeffs for r in self.qubits]

    def maten(self, projected: bool = False) -> ch.Product:
        """Tensor product of the reconstructed single-qubit channels."""
        return ch.Product(tuple(r.channel(projected) for r in self.qubits))

    def to_dict(self) -> dict:
        out = {
            "n_qubits": self.n_qubits,
            "train_correlation": _json_float(self.train_correlation),
            "test_correlation": _json_float(self.test_correlation),
            "notes": list(self.notes),
            "qubits": [],
        }
        for r in self.qubits:
            entry = {
                "qubit": r.qubit,
                "params": r.params.as_dict(),
                "chi": [[float(z.real), float(z.imag)] for z in r.chi.ravel()],
                "coeffs": r.fit.coeffs.as_dict(),
                "residuals": dict(zip(BASES, map(float, r.fit.residuals))),
                "condition_number": _json_float(r.fit.condition_number),
                "flagged_columns": list(r.fit.flagged),
                "validity": r.validity.as_dict(),
                "train_correlation": _json_float(r.train_correlation),
                "test_correlation": _json_float(r.test_correlation),
            }
            if r.projected_chi is not None:
                entry["projected_chi"] = [[float(z.real), float(z.imag)] for z in r.projected_chi.ravel()]
                entry["projection_distance"] = r.projection_distance
            out["qubits"].append(entry)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _json_float(x: float | None):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def characterize(
    problem: QuboProblem,
    settings: SettingSet,
    noisy: ExpectationTable,
    testing: ExpectationTable | None = None,
    project: bool = False,
    fill: str = "isotropic",
) -> CharacterizationResult:
    """Fit one single-qubit chi per qubit and score it on training and testing data."""
    if noisy.n_qubits != problem.n_qubits:
        raise ValueError(f"table has {noisy.n_qubits} qubits, problem has {problem.n_qubits}")
    ideal = ideal_expectations(problem, settings)
    _check_same_settings(ideal, noisy)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        fits = [fit_coeffs(ideal, noisy, q, fill=fill) for q in range(problem.n_qubits)]
    notes = tuple(dict.fromkeys(str(w.message) for w in caught))
    coeffs = [f.coeffs for f in fits]
    pred_train = predict_expectations(ideal, coeffs)
    ideal_test = pred_test = None
    if testing is not None:
        if testing.n_qubits != problem.n_qubits:
            raise ValueError("testing table qubit count does not match the problem")
        ideal_test = ideal_expectations(problem, testing.settings())
        pred_test = predict_expectations(ideal_test, coeffs)
    qubits = []
    for q, f in enumerate(fits):
        params = chi_from_coeffs(f.coeffs)
        chi = ch.chi_matrix(params)
        proj, dist = project_cptp(chi) if project else (None, None)
        qubits.append(
            QubitResult(
                qubit=q,
                params=params,
                chi=chi,
                fit=f,
                validity=ch.validate_cptp(chi),
                train_correlation=metrics.qubit_correlation(pred_train, noisy, q),
                test_correlation=None if testing is None else metrics.qubit_correlation(pred_test, testing, q),
                projected_chi=proj,
                projection_distance=dist,
            )
        )
    train = metrics.avg_xyz_correlation(pred_train, noisy)
    test = None if testing is None else metrics.avg_xyz_correlation(pred_test, testing)
    return CharacterizationResult(tuple(qubits), train, test, notes)


# --------------------------------------------------------------------------
# CSV ingestion and export
# --------------------------------------------------------------------------


def export_expectations(table: ExpectationTable, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        write_expectations(table, fh)


def write_expectations(table: ExpectationTable, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for q, s, g, b, basis, v, shots in table.rows():
        w.writerow([q, s, repr(float(g)), repr(float(b)), basis, repr(float(v)), "exact" if shots == EXACT else shots])


def ingest_expectations(path: str | Path) -> ExpectationTable:
    """Read and validate a measured-data CSV.

    Errors name the offending line (the header is line 1).
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
            raise ValueError(f"line 1: expected header {','.join(CSV_HEADER)}, got {header}")
        entries: dict[tuple[int, int, int], tuple[float, int]] = {}
        angles: dict[int, tuple[float, float]] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(CSV_HEADER):
                raise ValueError(f"line {lineno}: expected {len(CSV_HEADER)} fields, got {len(row)}")
            try:
                q, s = int(row[0]), int(row[1])
                g, b = float(row[2]), float(row[3])
                v = float(row[5])
                shots_txt = row[6].strip()
                shots = EXACT if shots_txt == "exact" else int(shots_txt)
            except ValueError as exc:
                raise ValueError(f"line {lineno}: malformed row ({exc})") from None
            basis = row[4].strip()
            if basis not in BASES:
                raise ValueError(f"line {lineno}: basis must be X, Y or Z, got {basis!r}")
            if q < 0 or s < 0:
                raise ValueError(f"line {lineno}: negative index")
            if shots != EXACT and shots < 1:
                raise ValueError(f"line {lineno}: shots must be >= 1 or 'exact'")
            if not (math.isfinite(v) and abs(v) <= 1 + VALUE_SLACK):
                raise ValueError(f"line {lineno}: value {v} outside [-1, 1]")
            if not (math.isfinite(g) and math.isfinite(b)):
                raise ValueError(f"line {lineno}: non-finite angle")
            key = (q, s, BASES.index(basis))
            if key in entries:
                raise ValueError(f"line {lineno}: duplicate entry for qubit {q}, setting {s}, basis {basis}")
            prev = angles.setdefault(s, (g, b))
            if prev != (g, b):
                raise ValueError(f"line {lineno}: setting {s} angles differ from an earlier row")
            entries[key] = (v, shots)
    if not entries:
        raise ValueError("no data rows")
    n_q = 1 + max(k[0] for k in entries)
    n_s = 1 + max(k[1] for k in entries)
    missing = [
        f"({q},{s},{BASES[b]})"
        for q in range(n_q)
        for s in range(n_s)
        for b in range(3)
        if (q, s, b) not in entries
    ]
    if missing:
        shown = ", ".join(missing[:10]) + (" ..." if len(missing) > 10 else "")
        raise ValueError(f"{len(missing)} missing (qubit,setting,basis) entries: {shown}")
    vals = np.empty((n_q, n_s, 3))
    shots_arr = np.empty((n_q, n_s, 3), dtype=int)
    for (q, s, b), (v, shots) in entries.items():
        vals[q, s, b] = v
        shots_arr[q, s, b] = shots
    gammas = [angles[s][0] for s in range(n_s)]
    betas = [angles[s][1] for s in range(n_s)]
    return ExpectationTable(vals, gammas, betas, shots_arr)
