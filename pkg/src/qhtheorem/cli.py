"""Command-line front end.

Every subcommand writes one table (CSV with a fixed header, or JSON) that is
fully determined by its parameters and ``--seed``. Parameters come from an
optional JSON config file and are overridden by explicit flags.

Exit codes: 0 success, 2 invalid input, 3 run cut short by a resource limit
(the partial table is still written, followed by a ``# truncated`` line).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import brems, decoherence, disorder, mirrors, walk1d
from .errors import GridAliasing, InsufficientData, QHError, StateExplosion

log = logging.getLogger("qhtheorem")

SCHEMA_VERSION = 1

HEADERS = {
    "walk": ["tau", "entropy_bits", "is_drop"],
    "sweep-t": ["T", "first_drop_step"],
    "disorder": ["tau", "N_t", "N_wf", "N_swf", "entropy_bits"],
    "brems": ["iteration", "entropy_bits"],
    "mirrors": ["tau", "epsilon", "N", "fidelity"],
    "lemma": ["trial", "S_before", "S_after", "holds"],
}


class Truncated(Exception):
    """A run stopped early; carries the rows produced so far."""

    def __init__(self, reason: str, rows: list, meta: dict | None = None):
        super().__init__(reason)
        self.rows = rows
        self.meta = meta or {}


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if v == int(v) and abs(v) < 1e15:
            return str(int(v))
        return format(v, ".12g")
    return str(v)


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(format(float(v), ".12g")) + 0.0  # no negative zero
    if isinstance(v, dict):
        return {k: _json_value(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_value(x) for x in v]
    return v


def render(command: str, rows, fmt: str, meta: dict | None = None, truncated: str | None = None) -> str:
    header = HEADERS[command]
    if fmt == "json":
        doc = {
            "schema_version": SCHEMA_VERSION,
            "command": command,
            "columns": header,
            "rows": [_json_value(list(r)) for r in rows],
        }
        if meta:
            doc["meta"] = _json_value(meta)
        if truncated:
            doc["truncated"] = truncated
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for r in rows:
        writer.writerow([_fmt(v) for v in r])
    if truncated:
        buf.write(f"# truncated: {truncated}\n")
    return buf.getvalue()


# --- subcommands ---------------------------------------------------------


def run_walk(p: dict) -> tuple[list, dict]:
    mode = walk1d.SpinMode[p["mode"].upper()]
    if p["scenario"] == "half-space":
        run = walk1d.half_space_scenario(p["depth"], p["horizon"], p["T"], p["phase_ll"], p["phase_lr"])
        meta = {"reversal_step": run.reversal_step, "exit_step": run.exit_step}
        return run.series.rows(), meta
    scenario = walk1d.regular_scenario(p["T"], p["horizon"], p["phase_ll"], p["phase_lr"], spin_mode=mode)
    meta = {}
    if p["round_trip"]:
        steps = p["round_trip"]
        trip_scenario = walk1d.regular_scenario(p["T"], steps, p["phase_ll"], p["phase_lr"], spin_mode=mode)
        meta["fidelity_complete"] = walk1d.reversal_round_trip(trip_scenario, steps, True).fidelity
        meta["fidelity_incomplete"] = walk1d.reversal_round_trip(trip_scenario, steps, False).fidelity
    try:
        if p["backward"]:
            series = walk1d.backward_entropy(scenario)
        else:
            series = walk1d.evolve_entropy(scenario)
    except StateExplosion as exc:
        rows = exc.partial.rows() if exc.partial is not None else []
        raise Truncated(str(exc), rows, meta) from exc
    return series.rows(), meta


def _t_values(start: float, stop: float, step: float) -> list[float]:
    if step <= 0:
        raise walk1d.InvalidParameter("step must be positive")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(max(n, 0))]


def run_sweep(p: dict) -> tuple[list, dict]:
    values = _t_values(p["from"], p["to"], p["step"])
    results = walk1d.sweep_transparency(values, p["horizon"], p["phase_ll"], p["phase_lr"])
    return [(r.transparency, r.first_drop_step) for r in results], {}


def _disorder_spec(p: dict, seed: int) -> disorder.DisorderSpec:
    return disorder.DisorderSpec(
        base_T=p["T"],
        delta_T=p["delta_T"],
        chi_ll=p["phase_ll"],
        chi_lr=p["phase_lr"],
        delta_chi_ll=p["delta_chi_ll"],
        delta_chi_lr=p["delta_chi_lr"],
        eta=p["eta"],
        seed=seed,
        n_scatterers_window=max(p["window"], int(p["horizon"]) + 2),
    )


def _amplitude_rows(spec, p) -> list:
    real = disorder.realize(spec, 0)
    scenario = walk1d.WalkScenario(real.scatterer_specs(), walk1d.SpinMode.PERSISTENT, int(p["horizon"]))
    rows = []
    for tau, state in enumerate(walk1d.iter_states(scenario)):
        probs = [abs(a) ** 2 for a in state.terms.values()]
        rows.append((tau, 2**tau, len(state), disorder.census_significant(probs), walk1d.state_entropy(state)))
    return rows


def run_disorder(p: dict, seed: int) -> tuple[list, dict]:
    spec = _disorder_spec(p, seed)
    if p["mode"] == "amplitudes":
        if spec.eta:
            raise walk1d.InvalidParameter("amplitude disorder runs on the regular lattice; set eta to 0")
        return _amplitude_rows(spec, p), {}
    if p["realizations"] < 1:
        raise walk1d.InvalidParameter("realizations must be at least 1")
    censuses, entropies = [], []
    rows: list = []
    for k in range(p["realizations"]):
        try:
            series, census = disorder.run_random_positions(
                spec, p["horizon"], with_spins=p["with_spins"], realization=k, max_components=p["max_components"]
            )
        except StateExplosion as exc:
            raise Truncated(str(exc), rows) from exc
        censuses.append(census)
        entropies.append(series.entropy_bits)
        mean = disorder.ensemble_mean(censuses)
        s_mean = np.mean(entropies, axis=0)
        rows = list(zip(mean.times, mean.n_trajectories, mean.n_components, mean.n_significant, s_mean))
    meta = {"realizations": p["realizations"]}
    try:
        fits = disorder.fit_growth(disorder.ensemble_mean(censuses), t_min=p["fit_from"])
        meta["fits"] = {name: f._asdict() for name, f in fits.items()}
    except InsufficientData as exc:
        meta["fits"] = str(exc)
    return rows, meta


def run_brems(p: dict) -> tuple[list, dict]:
    params = brems.BremsParams(
        alpha0=p["alpha0"],
        v_over_c=p["v_over_c"],
        omega_cutoff=p["omega"],
        v_fermi=p["v_fermi"],
        prefactor_override=p["prefactor"],
    )
    rho = brems.gaussian_packet(p["points"], p["width"], p["k0"])
    values = brems.brems_entropy_series(rho, params, p["iterations"])
    return list(enumerate(values)), {"prefactor": params.prefactor}


def run_mirrors(p: dict) -> tuple[list, dict]:
    packet = mirrors.gaussian_packet(p["sigma_k"], p["k0"], p["points"], p["dk"])
    rows = []
    for tau in p["taus"]:
        for eps in p["epsilons"]:
            try:
                r = mirrors.refocus(packet, tau, eps)
            except GridAliasing as exc:
                raise Truncated(str(exc), rows) from exc
            rows.append((r.tau, r.epsilon, r.N, r.fidelity))
    meta = {}
    if len(p["taus"]) > 1:
        meta["tau_exponent"] = {
            str(e): mirrors.scaling_exponent(p["taus"], [r[2] for r in rows if r[1] == e])
            for e in p["epsilons"]
            if e > 0
        }
    return rows, meta


def run_lemma(p: dict, seed: int) -> tuple[list, dict]:
    trials = decoherence.lemma_batch(p["dim"], p["trials"], seed)
    rows = [(k, t.S_before, t.S_after, t.holds) for k, t in enumerate(trials)]
    return rows, {"all_hold": all(t.holds for t in trials)}


# --- argument handling ---------------------------------------------------

DEFAULTS = {
    "walk": dict(
        T=0.5, horizon=8, phase_ll=0.0, phase_lr=0.0, mode="persistent", backward=False,
        scenario="regular", depth=4, round_trip=0,
    ),
    "sweep-t": {"from": 0.3, "to": 0.85, "step": 0.01, "horizon": 8, "phase_ll": 0.0, "phase_lr": 0.0},
    "disorder": dict(
        mode="positions", T=0.5, delta_T=0.0, phase_ll=0.0, phase_lr=0.0, delta_chi_ll=0.0,
        delta_chi_lr=0.0, eta=0.0, horizon=10, realizations=1, with_spins=False, window=64, fit_from=3,
        max_components=disorder.DEFAULT_MAX_COMPONENTS,
    ),
    "brems": dict(
        prefactor=0.1, alpha0=1 / 137.036, v_over_c=0.01, omega=1.0, v_fermi=1.0, points=256, width=4.0,
        k0=0.0, iterations=10,
    ),
    "mirrors": dict(
        taus=[15.0, 30.0, 60.0, 120.0, 150.0], epsilons=[0.4, 0.2, 0.1, 0.05], sigma_k=1.0, k0=0.0,
        points=16384, dk=0.002,
    ),
    "lemma": dict(dim=8, trials=1000),
}


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qhtheorem", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        sp = sub.add_parser(name, help=help_text, argument_default=argparse.SUPPRESS)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--format", choices=["csv", "json"])
        sp.add_argument("--out", type=Path)
        sp.add_argument("--config", type=Path)
        return sp

    w = add("walk", "entropy of the scatterer-array walk")
    w.add_argument("--T", type=float)
    w.add_argument("--horizon", type=int)
    w.add_argument("--phase-ll", dest="phase_ll", type=float)
    w.add_argument("--phase-lr", dest="phase_lr", type=float)
    w.add_argument("--mode", choices=["persistent", "fresh"])
    w.add_argument("--backward", action="store_true")
    w.add_argument("--scenario", choices=["regular", "half-space"])
    w.add_argument("--depth", type=int)
    w.add_argument("--round-trip", dest="round_trip", type=int, help="steps for the reversal demo")

    s = add("sweep-t", "first entropy drop against transparency")
    s.add_argument("--from", dest="from", type=float)
    s.add_argument("--to", type=float)
    s.add_argument("--step", type=float)
    s.add_argument("--horizon", type=int)
    s.add_argument("--phase-ll", dest="phase_ll", type=float)
    s.add_argument("--phase-lr", dest="phase_lr", type=float)

    d = add("disorder", "component census for disordered arrays")
    d.add_argument("--mode", choices=["positions", "amplitudes"])
    d.add_argument("--T", type=float)
    d.add_argument("--delta-T", dest="delta_T", type=float)
    d.add_argument("--phase-ll", dest="phase_ll", type=float)
    d.add_argument("--phase-lr", dest="phase_lr", type=float)
    d.add_argument("--delta-chi-ll", dest="delta_chi_ll", type=float)
    d.add_argument("--delta-chi-lr", dest="delta_chi_lr", type=float)
    d.add_argument("--eta", type=float)
    d.add_argument("--horizon", type=float)
    d.add_argument("--realizations", type=int)
    d.add_argument("--with-spins", dest="with_spins", action="store_true")
    d.add_argument("--window", type=int)
    d.add_argument("--fit-from", dest="fit_from", type=float)
    d.add_argument("--max-components", dest="max_components", type=int)

    b = add("brems", "entropy under repeated photon-emission dephasing")
    b.add_argument("--prefactor", type=float)
    b.add_argument("--alpha0", type=float)
    b.add_argument("--v-over-c", dest="v_over_c", type=float)
    b.add_argument("--omega", type=float)
    b.add_argument("--v-fermi", dest="v_fermi", type=float)
    b.add_argument("--points", type=int)
    b.add_argument("--width", type=float)
    b.add_argument("--k0", type=float)
    b.add_argument("--iterations", type=int)

    m = add("mirrors", "mirror-array refocusing scan")
    m.add_argument("--taus", type=_floats)
    m.add_argument("--epsilons", type=_floats)
    m.add_argument("--sigma-k", dest="sigma_k", type=float)
    m.add_argument("--k0", type=float)
    m.add_argument("--points", type=int)
    m.add_argument("--dk", type=float)

    lm = add("lemma", "random check of the entropy lemma")
    lm.add_argument("--dim", type=int)
    lm.add_argument("--trials", type=int)
    return parser


def load_config(path: Path, command: str) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise walk1d.InvalidParameter(f"cannot read config {path}: {exc}") from exc
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise walk1d.InvalidParameter(f"config schema_version must be {SCHEMA_VERSION}")
    if doc.get("command", command) != command:
        raise walk1d.InvalidParameter(f"config is for '{doc['command']}', not '{command}'")
    return doc


def resolve(args: argparse.Namespace) -> tuple[dict, dict]:
    """Merge defaults, config file and flags. Returns ``(params, run options)``."""
    command = args.command
    given = vars(args)
    params = dict(DEFAULTS[command])
    options = {"seed": 0, "format": "csv", "out": None}
    if "config" in given:
        doc = load_config(given["config"], command)
        unknown = set(doc.get("params", {})) - set(params)
        if unknown:
            raise walk1d.InvalidParameter(f"unknown config keys: {sorted(unknown)}")
        params.update(doc.get("params", {}))
        options.update({k: doc[k] for k in ("seed", "format") if k in doc})
    for key, value in given.items():
        if key in params:
            params[key] = value
        elif key in ("seed", "format", "out"):
            options[key] = value
    return params, options


def execute(command: str, params: dict, seed: int) -> tuple[list, dict]:
    if command == "walk":
        return run_walk(params)
    if command == "sweep-t":
        return run_sweep(params)
    if command == "disorder":
        return run_disorder(params, seed)
    if command == "brems":
        return run_brems(params)
    if command == "mirrors":
        return run_mirrors(params)
    return run_lemma(params, seed)


def _emit(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        params, options = resolve(args)
        log.info("running %s with %s", args.command, params)
        rows, meta = execute(args.command, params, options["seed"])
    except Truncated as exc:
        _emit(render(args.command, exc.rows, options["format"], exc.meta, str(exc)), options["out"])
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (StateExplosion, GridAliasing) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (QHError, ValueError, TypeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _emit(render(args.command, rows, options["format"], meta), options["out"])
    return 0


if __name__ == "__main__":
    sys.exit(main())
