"""Simulation studies and the characterization workflow, written as CSV/JSON.

Each ``run_*`` function takes a resolved :class:`ExperimentConfig` and returns
``(columns, rows)``; :func:`write_csv` prefixes the table with a JSON echo of
the config.  Randomness flows from ``config.seed`` through per-trial
``SeedSequence`` children, so identical configs give identical bytes.
"""

from __future__ import annotations

import copy
import io
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import channels as ch
from . import maten, metrics, qsim

EXPERIMENTS = (
    "local-recovery",
    "nonlocal-sweep",
    "shot-sweep",
    "overrotation-sweep",
    "fidelity-sweep",
    "lower-bound",
    "characterize",
)

_C_GRID = [round(0.1 * k, 1) for k in range(11)]
_OMEGA_GRID = [0.0, 0.01, 0.02, 0.03, 0.04, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5]

DEFAULTS: dict[str, dict] = {
    "local-recovery": {
        "n_qubits": 2,
        "problem": {"family": "random"},
        "n_settings_grid": [4, 8, 16, 32, 64],
        "shots_grid": [1000, 10000, 100000, "exact"],
        "sampling_mode": "multinomial",
        "trials": 20,
    },
    "nonlocal-sweep": {
        "n_qubits": 2,
        "problem": {"family": "complete", "J": 1.0, "h": 1.0},
        "n_settings": 50,
        "n_testing": 50,
        "c_grid": _C_GRID,
        "shots": "exact",
        "sampling_mode": "gaussian",
        "trials": 20,
    },
    "shot-sweep": {
        "n_qubits": 2,
        "problem": {"family": "complete", "J": 1.0, "h": 1.0},
        "n_settings": 50,
        "n_testing": 50,
        "c": 0.0,
        "shots_grid": [100, 1000, 10000, 100000, "exact"],
        "sampling_mode": "gaussian",
        "trials": 20,
    },
    "overrotation-sweep": {
        "n_qubits": 6,
        "families": ["ring", "complete"],
        "problem": {"J": 1.0, "h": 0.0},
        "n_settings": 20,
        "n_testing": 10,
        "omega_grid": _OMEGA_GRID,
        "trials": 5,
    },
    "fidelity-sweep": {
        "kind": "pauli",
        "n_qubits": 2,
        "samples": 1000,
    },
    "lower-bound": {
        "n_qubits": [2, 3],
        "chi00_grid": [round(0.05 * k, 2) for k in range(21)],
        "restarts": 32,
    },
    "characterize": {
        "n_qubits": 6,
        "problem": {"family": "line", "J": 1.0, "h": 1.0},
        "n_settings": 100,
        "n_testing": 100,
        "noise": {"kind": "random_local"},
        "shots": "exact",
        "sampling_mode": "multinomial",
        "scenarios": [],
    },
}

FULL_OVERRIDES: dict[str, dict] = {
    "local-recovery": {"trials": 100, "shots_grid": [1000, 10000, 100000, 1000000, "exact"]},
    "nonlocal-sweep": {"trials": 100},
    "shot-sweep": {"trials": 100, "shots_grid": [100, 1000, 10000, 100000, 1000000, "exact"]},
    "overrotation-sweep": {"n_qubits": 10, "trials": 100},
    "fidelity-sweep": {"samples": 10000},
    "lower-bound": {"chi00_grid": [round(0.01 * k, 2) for k in range(101)]},
    "characterize": {},
}


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int = 0
    params: dict = field(default_factory=dict)
    full: bool = False

    def __getitem__(self, key: str):
        return self.params[key]

    def get(self, key: str, default=None):
        return self.params.get(key, default)

    def as_dict(self) -> dict:
        return {"experiment": self.experiment, "seed": self.seed, "full": self.full, **self.params}


def resolve_config(
    experiment: str,
    overrides: dict | None = None,
    seed: int | None = None,
    full: bool = False,
    keep_symmetric: bool = False,
) -> ExperimentConfig:
    """Merge defaults, ``--full`` values and user overrides, then validate."""
    if experiment not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {experiment!r}; choose from {', '.join(EXPERIMENTS)}")
    params = copy.deepcopy(DEFAULTS[experiment])
    if full:
        params.update(copy.deepcopy(FULL_OVERRIDES[experiment]))
    overrides = dict(overrides or {})
    overrides.pop("experiment", None)
    cfg_seed = overrides.pop("seed", 0)
    overrides.pop("full", None)
    if "problem" in overrides and isinstance(params.get("problem"), dict):
        params["problem"] = {**params["problem"], **overrides.pop("problem")}
    params.update(overrides)
    if keep_symmetric or params.get("keep_symmetric"):
        params["keep_symmetric"] = True
        if "problem" in params:
            params["problem"] = {**params["problem"], "h": 0.0}
    cfg = ExperimentConfig(experiment, int(cfg_seed if seed is None else seed), params, full)
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    p = cfg.params
    for key in ("n_settings_grid", "shots_grid", "c_grid", "omega_grid", "chi00_grid", "families"):
        if key in p and not p[key]:
            raise ValueError(f"config: {key} must not be empty")
    if p.get("trials", 1) < 1:
        raise ValueError("config: trials must be >= 1")
    for key in ("n_settings", "n_testing"):
        if key in p and p[key] < maten.MIN_SETTINGS:
            raise ValueError(f"config: {key} must be >= {maten.MIN_SETTINGS}")
    for n in p.get("n_settings_grid", []):
        if n < maten.MIN_SETTINGS:
            raise ValueError(f"config: n_settings_grid entries must be >= {maten.MIN_SETTINGS}")
    for s in p.get("shots_grid", []):
        if s != "exact" and (not isinstance(s, int) or s < 1):
            raise ValueError(f"config: bad shots value {s!r}")
    for c in p.get("c_grid", []):
        if not 0.0 <= c <= 1.0:
            raise ValueError(f"config: c values must lie in [0, 1], got {c}")
    for w in p.get("omega_grid", []):
        if not 0.0 <= w <= 1.0:
            raise ValueError(f"config: omega values must lie in [0, 1], got {w}")
    if p.get("sampling_mode", "multinomial") not in ("multinomial", "gaussian"):
        raise ValueError(f"config: unknown sampling_mode {p['sampling_mode']!r}")
    for fam in p.get("families", []):
        if fam not in ("line", "ring", "complete"):
            raise ValueError(f"config: unknown family {fam!r}")
    n = p.get("n_qubits")
    if isinstance(n, int) and n < 1:
        raise ValueError("config: n_qubits must be >= 1")


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------


def build_problem(spec: dict, n_qubits: int, rng: np.random.Generator | None = None) -> qsim.QuboProblem:
    """Expand a problem spec: explicit ``h``/``J`` arrays or a named family."""
    family = spec.get("family")
    if family is None:
        j = np.asarray(spec["J"], dtype=float)
        h = np.asarray(spec.get("h", np.zeros(j.shape[0])), dtype=float)
        if h.ndim == 0:
            h = np.full(j.shape[0], float(h))
        return qsim.QuboProblem(h, j)
    if family == "random":
        if rng is None:
            raise ValueError("random problems need an rng")
        h = rng.uniform(0.0, 1.0, size=n_qubits)
        upper = np.triu(rng.uniform(0.0, 1.0, size=(n_qubits, n_qubits)), 1)
        return qsim.QuboProblem(h, upper + upper.T)
    jv = float(spec.get("J", 1.0))
    if family == "line":
        edges = {(i, i + 1): jv for i in range(n_qubits - 1)}
    elif family == "ring":
        edges = {(i, (i + 1) % n_qubits): jv for i in range(n_qubits)} if n_qubits > 2 else {(0, 1): jv}
        edges = {tuple(sorted(e)): w for e, w in edges.items()}
    elif family == "complete":
        edges = {(i, k): jv for i in range(n_qubits) for k in range(i + 1, n_qubits)}
    else:
        raise ValueError(f"unknown problem family {family!r}")
    return qsim.QuboProblem.from_edges(n_qubits, edges, spec.get("h", 0.0))


def _trial_seeds(seed: int, trials: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(trials)


def _rng(ss: np.random.SeedSequence, *key: int) -> np.random.Generator:
    """Independent generator for a fixed sub-key of a trial's seed sequence."""
    return np.random.default_rng(np.random.SeedSequence(ss.entropy, spawn_key=ss.spawn_key + tuple(key)))


def _settings(count: int, rng: np.random.Generator) -> maten.SettingSet:
    gammas = rng.uniform(0.0, 2 * math.pi, size=count)
    betas = rng.uniform(0.0, math.pi, size=count)
    return maten.SettingSet.from_angles(gammas, betas)


def _shots_arg(shots) -> int | str:
    return "exact" if shots in ("exact", None) else int(shots)


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return "nan" if math.isnan(x) else repr(x)
    return str(x)


def to_csv_text(cfg: ExperimentConfig, columns: list[str], rows: list[tuple]) -> str:
    buf = io.StringIO()
    buf.write("# " + json.dumps(cfg.as_dict(), sort_keys=True, separators=(",", ":")) + "\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def write_csv(path: str | Path, cfg: ExperimentConfig, columns: list[str], rows: list[tuple]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_csv_text(cfg, columns, rows))
    return path


def read_csv_rows(path: str | Path) -> tuple[dict, list[dict]]:
    """Parse an experiment CSV back into (config, rows as dicts of strings)."""
    lines = Path(path).read_text().splitlines()
    config = json.loads(lines[0][2:])
    columns = lines[1].split(",")
    return config, [dict(zip(columns, line.split(","))) for line in lines[2:] if line]


def _kraus_form(channel: ch.Channel) -> ch.Kraus:
    return ch.Kraus(tuple(channel.kraus()))


# --------------------------------------------------------------------------
# experiments
# --------------------------------------------------------------------------


def run_local_recovery(cfg: ExperimentConfig):
    """L2 distance between an identical local chi on every qubit and its fit."""
    n = cfg["n_qubits"]
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for t, ss in enumerate(_trial_seeds(cfg.seed, cfg["trials"])):
            setup = _rng(ss, 0)
            problem = build_problem(cfg["problem"], n, setup)
            chi_in = ch.random_local_chi(setup)
            noise = ch.NoiseSpec.local([chi_in] * n)
            for gi, count in enumerate(cfg["n_settings_grid"]):
                settings = _settings(count, _rng(ss, 1, gi))
                for si, shots in enumerate(cfg["shots_grid"]):
                    noisy = maten.noisy_expectations(
                        problem, settings, noise, _shots_arg(shots), cfg["sampling_mode"], _rng(ss, 2, gi, si)
                    )
                    res = maten.characterize(problem, settings, noisy)
                    l2 = float(np.mean([metrics.l2_chi(chi_in, q.chi) for q in res.qubits]))
                    rows.append((count, shots, t, l2))
    return ["n_settings", "shots", "trial", "l2"], rows


def _mixed_channel(n: int, c: float, locals_: list[np.ndarray], nonlocal_chi: np.ndarray) -> ch.Chi:
    local = ch.Product(tuple(ch.Chi(x) for x in locals_))
    return ch.mix(c, local, ch.Chi(nonlocal_chi))


def _correlation_and_fidelity(problem, train, test, channel, shots, mode, rng_train, rng_test):
    noise = ch.NoiseSpec.end_of_circuit(_kraus_form(channel))
    noisy = maten.noisy_expectations(problem, train, noise, shots, mode, rng_train)
    testing = maten.noisy_expectations(problem, test, noise, shots, mode, rng_test)
    res = maten.characterize(problem, train, noisy, testing)
    fid = metrics.choi_fidelity(channel.chi(), res.maten(projected=True).chi())
    return res.test_correlation, fid


def run_nonlocal_sweep(cfg: ExperimentConfig):
    """Testing correlation and Choi fidelity versus the nonlocal weight c."""
    n = cfg["n_qubits"]
    problem = build_problem(cfg["problem"], n)
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for t, ss in enumerate(_trial_seeds(cfg.seed, cfg["trials"])):
            setup = _rng(ss, 0)
            locals_ = [ch.random_local_chi(setup) for _ in range(n)]
            nonlocal_chi = ch.random_channel(n, setup)
            train = _settings(cfg["n_settings"], _rng(ss, 1))
            test = _settings(cfg["n_testing"], _rng(ss, 2))
            for ci, c in enumerate(cfg["c_grid"]):
                channel = _mixed_channel(n, c, locals_, nonlocal_chi)
                corr, fid = _correlation_and_fidelity(
                    problem, train, test, channel, _shots_arg(cfg["shots"]), cfg["sampling_mode"],
                    _rng(ss, 3, ci), _rng(ss, 4, ci),
                )  # fmt: skip
                rows.append((c, t, corr, fid))
    return ["c", "trial", "avg_corr_test", "choi_fidelity"], rows


def run_shot_sweep(cfg: ExperimentConfig):
    """Testing correlation and Choi fidelity versus the number of shots."""
    n = cfg["n_qubits"]
    problem = build_problem(cfg["problem"], n)
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for t, ss in enumerate(_trial_seeds(cfg.seed, cfg["trials"])):
            setup = _rng(ss, 0)
            locals_ = [ch.random_local_chi(setup) for _ in range(n)]
            nonlocal_chi = ch.random_channel(n, setup)
            channel = _mixed_channel(n, cfg["c"], locals_, nonlocal_chi)
            train = _settings(cfg["n_settings"], _rng(ss, 1))
            test = _settings(cfg["n_testing"], _rng(ss, 2))
            for si, shots in enumerate(cfg["shots_grid"]):
                corr, fid = _correlation_and_fidelity(
                    problem, train, test, channel, _shots_arg(shots), cfg["sampling_mode"],
                    _rng(ss, 3, si), _rng(ss, 4, si),
                )  # fmt: skip
                rows.append((shots, t, corr, fid))
    return ["shots", "trial", "avg_corr_test", "choi_fidelity"], rows


def _table_from_states(states: list[np.ndarray], settings: maten.SettingSet) -> maten.ExpectationTable:
    vals = np.stack([qsim.single_qubit_expectations(s) for s in states], axis=1)
    return maten.ExpectationTable(np.clip(vals, -1.0, 1.0), settings.gammas, settings.betas, maten.EXACT)


def two_qubit_correlation(result: maten.CharacterizationResult, ideal_states, noisy_states) -> float:
    """Mean over the nine AB in {X,Y,Z}^2 of the Pearson r between predicted and
    true <A_i B_j>, pooling all pairs i < j and all given settings."""
    n = result.n_qubits
    rows = [c.rows() for c in result.coeffs()]
    pred = {k: [] for k in range(9)}
    true = {k: [] for k in range(9)}
    for psi, rho in zip(ideal_states, noisy_states):
        for i in range(n):
            for j in range(i + 1, n):
                e_ideal = qsim.pair_pauli_expectations(qsim.two_qubit_rdm(psi, i, j))
                e_true = qsim.pair_pauli_expectations(qsim.two_qubit_rdm(rho, i, j))
                p = rows[i] @ e_ideal @ rows[j].T
                for k in range(9):
                    pred[k].append(p[k // 3, k % 3])
                    true[k].append(e_true[1 + k // 3, 1 + k % 3])
    pairs = [(np.array(pred[k]), np.array(true[k])) for k in range(9)]
    return metrics.mean_correlation(pairs, metrics.two_qubit_labels())


def run_overrotation_sweep(cfg: ExperimentConfig):
    """Interleaved ZZ and X dephasing: 1- and 2-qubit correlations and state fidelity."""
    n = cfg["n_qubits"]
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for family in cfg["families"]:
            problem = build_problem({**cfg["problem"], "family": family}, n)
            for t, ss in enumerate(_trial_seeds(cfg.seed, cfg["trials"])):
                train = _settings(cfg["n_settings"], _rng(ss, 1))
                test = _settings(cfg["n_testing"], _rng(ss, 2))
                ideal_test = [qsim.build_qaoa_state(problem, s) for s in test]
                for omega in cfg["omega_grid"]:
                    noise = ch.NoiseSpec.interleaved(omega)
                    noisy = maten.noisy_expectations(problem, train, noise)
                    test_states = [qsim.evolve_noisy_qaoa(problem, s, noise) for s in test]
                    testing = _table_from_states(test_states, test)
                    res = maten.characterize(problem, train, noisy, testing)
                    model = res.maten(projected=True)
                    fids = [
                        metrics.state_fidelity(rho, ch.apply(model, np.outer(psi, psi.conj())))
                        for psi, rho in zip(ideal_test, test_states)
                    ]
                    corr2 = two_qubit_correlation(res, ideal_test, test_states)
                    rows.append((family, omega, t, res.test_correlation, corr2, float(np.mean(fids))))
    return ["family", "omega", "trial", "corr_1q", "corr_2q", "state_fidelity"], rows


def run_fidelity_sweep(cfg: ExperimentConfig):
    recs = metrics.fidelity_sweep(cfg["kind"], cfg["n_qubits"], cfg["samples"], cfg.seed)
    rows = [(r.channel_kind, r.n_qubits, k, r.chi00, r.fidelity) for k, r in enumerate(recs)]
    return ["kind", "n_qubits", "sample_index", "chi00", "fidelity"], rows


def run_lower_bound(cfg: ExperimentConfig):
    sizes = cfg["n_qubits"]
    sizes = [sizes] if isinstance(sizes, int) else list(sizes)
    rows = []
    for n in sizes:
        for r in metrics.minimize_ma_fidelity(n, cfg["chi00_grid"], cfg["restarts"], cfg.seed + n):
            rows.append((n, r.chi00, r.fidelity, r.restarts))
    return ["n_qubits", "chi00", "min_fidelity", "restarts_used"], rows


# --------------------------------------------------------------------------
# characterization workflow
# --------------------------------------------------------------------------


@dataclass
class Scenario:
    name: str
    problem: qsim.QuboProblem
    training: maten.ExpectationTable
    testing: maten.ExpectationTable | None = None
    truth: list | None = None  # per-qubit chi used to simulate, if known


def _noise_channels(spec: dict, n: int, rng: np.random.Generator) -> list[np.ndarray]:
    kind = spec.get("kind", "random_local")
    if kind == "random_local":
        return [ch.random_local_chi(rng) for _ in range(n)]
    if kind == "channels":
        chans = [ch.channel_from_dict(d) for d in spec["channels"]]
        if len(chans) != n:
            raise ValueError(f"config: {len(chans)} noise channels for {n} qubits")
        return [c.chi() for c in chans]
    if kind == "builtin":
        chan = ch.builtin(spec["name"], *spec.get("args", []))
        return [chan.chi()] * n
    raise ValueError(f"config: unknown noise kind {kind!r}")


def build_scenarios(cfg: ExperimentConfig, ingest: str | None = None) -> list[Scenario]:
    n = cfg["n_qubits"]
    problem = build_problem(cfg["problem"], n)
    if ingest is not None:
        table = maten.ingest_expectations(ingest)
        testing = maten.ingest_expectations(cfg["testing"]) if cfg.get("testing") else None
        return [Scenario(Path(ingest).stem, problem, table, testing)]
    out = []
    for entry in cfg.get("scenarios") or []:
        tr = maten.ingest_expectations(entry["ingest"])
        te = maten.ingest_expectations(entry["testing"]) if entry.get("testing") else None
        prob = build_problem({**cfg["problem"], **entry.get("problem", {})}, tr.n_qubits)
        out.append(Scenario(entry["name"], prob, tr, te))
    if out:
        return out
    ss = np.random.SeedSequence(cfg.seed)
    rng = _rng(ss, 0)
    chis = _noise_channels(cfg["noise"], n, rng)
    noise = ch.NoiseSpec.local(chis)
    train = _settings(cfg["n_settings"], _rng(ss, 1))
    test = _settings(cfg["n_testing"], _rng(ss, 2))
    shots = _shots_arg(cfg["shots"])
    tr = maten.noisy_expectations(problem, train, noise, shots, cfg["sampling_mode"], _rng(ss, 3))
    te = maten.noisy_expectations(problem, test, noise, shots, cfg["sampling_mode"], _rng(ss, 4))
    return [Scenario("simulated", problem, tr, te, chis)]


def run_characterize(cfg: ExperimentConfig, ingest: str | None = None) -> tuple[dict, list[str], list[tuple]]:
    """Characterize every scenario; returns (JSON document, table columns, table rows).

    The table lists qubits against scenarios.  A cell holds the testing
    correlation when testing data exist, otherwise the training correlation.
    """
    scenarios = build_scenarios(cfg, ingest)
    doc = {"config": cfg.as_dict(), "scenarios": []}
    n_max = max(s.training.n_qubits for s in scenarios)
    table = {q: [] for q in range(n_max)}
    for sc in scenarios:
        res = maten.characterize(sc.problem, sc.training.settings(), sc.training, sc.testing, project=True)
        entry = {"name": sc.name, "testing": "present" if sc.testing is not None else "absent", **res.to_dict()}
        if sc.truth is not None:
            entry["l2_to_truth"] = [metrics.l2_chi(chi, q.chi) for chi, q in zip(sc.truth, res.qubits)]
        doc["scenarios"].append(entry)
        for q in range(n_max):
            if q < res.n_qubits:
                r = res.qubits[q]
                table[q].append(r.test_correlation if sc.testing is not None else r.train_correlation)
            else:
                table[q].append(math.nan)
    columns = ["qubit"] + [sc.name for sc in scenarios]
    rows = [(q, *table[q]) for q in range(n_max)]
    return doc, columns, rows


RUNNERS = {
    "local-recovery": run_local_recovery,
    "nonlocal-sweep": run_nonlocal_sweep,
    "shot-sweep": run_shot_sweep,
    "overrotation-sweep": run_overrotation_sweep,
    "fidelity-sweep": run_fidelity_sweep,
    "lower-bound": run_lower_bound,
}


def run(cfg: ExperimentConfig, out_dir: str | Path, ingest: str | None = None) -> list[Path]:
    """Run one experiment and write its artifacts into ``out_dir``."""
    out_dir = Path(out_dir)
    if cfg.experiment == "characterize":
        doc, columns, rows = run_characterize(cfg, ingest)
        out_dir.mkdir(parents=True, exist_ok=True)
        js = out_dir / "characterize.json"
        js.write_text(json.dumps(doc, indent=2, sort_keys=True, allow_nan=False, default=_json_default) + "\n")
        return [js, write_csv(out_dir / "characterize_table.csv", cfg, columns, rows)]
    if ingest is not None:
        raise ValueError("--ingest only applies to the characterize experiment")
    columns, rows = RUNNERS[cfg.experiment](cfg)
    return [write_csv(out_dir / f"{cfg.experiment}.csv", cfg, columns, rows)]


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"cannot serialize {type(obj).__name__}")
