"""Command-line batch driver.

Every subcommand writes a CSV time series (``#`` header block with the run
digest and column units) and, when ``--out`` is given, a JSON manifest next
to it. Both files are written to a temporary name and moved into place.

Exit codes: 0 success, 2 invalid flags, 3 invariant breach, 4 self-test failure.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import os
import platform
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .amplitudes import MarkovModel, RabiModel
from .exchange import AmplitudePair, evolve_system
from .fock import (
    DensityMatrix,
    InvalidStateError,
    TruncationError,
    auto_truncation,
    coherent_state,
    fidelity,
    fock_state,
    kitten_state,
    partial_trace,
    purity,
    schmidt,
    trace_distance,
)
from .kitten import kitten_timeline
from .lindblad import (
    StepSizeError,
    TrajectoryConfig,
    damped_coherent_analytic,
    integrate_master,
    mean_occupation,
    run_trajectories,
)
from .twobody import (
    SCENARIO_DIR,
    EdgeProximityError,
    format_scenario,
    load_scenario,
    mean_field_comparison,
    run_scenario,
    shipped_scenario,
)

EXIT_OK = 0
EXIT_FLAGS = 2
EXIT_INVARIANT = 3
EXIT_SELFTEST = 4

ENERGY_DRIFT_TOL = 1e-6
NORM_DRIFT_TOL = 1e-10


class InvariantBreach(RuntimeError):
    """A conserved quantity or consistency check failed during a run."""


class FlagError(ValueError):
    """Flags that parse individually but do not make sense together."""


# --- flag parsing -----------------------------------------------------------


def parse_complex(text: str) -> complex:
    """Parse ``re+imi`` style numbers: ``2``, ``-1.5``, ``2i``, ``1+2i``, ``0.5-i``."""
    s = text.strip().replace(" ", "")
    if not s:
        raise argparse.ArgumentTypeError("empty complex number")
    if s.endswith("i"):
        body = s[:-1]
        # split off the imaginary part at the last sign that is not an exponent sign
        cut = max((k for k, ch in enumerate(body) if ch in "+-" and (k == 0 or body[k - 1] not in "eE")), default=-1)
        real_txt, imag_txt = (body[:cut], body[cut:]) if cut >= 0 else ("", body)
        if imag_txt in ("", "+", "-"):
            imag_txt += "1"
        try:
            real = float(real_txt) if real_txt else 0.0
            imag = float(imag_txt)
        except ValueError:
            raise argparse.ArgumentTypeError(f"cannot parse complex number {text!r}") from None
        return complex(real, imag)
    try:
        return complex(float(s), 0.0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse complex number {text!r}") from None


def format_complex(z: complex) -> str:
    z = complex(z)
    if z.imag == 0:
        return repr(z.real)
    return f"{z.real!r}{'+' if z.imag >= 0 else '-'}{abs(z.imag)!r}i"


def parse_trunc(text: str):
    if text == "auto":
        return "auto"
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("--trunc takes 'auto' or a non-negative integer") from None
    if n < 0:
        raise argparse.ArgumentTypeError("--trunc must be non-negative")
    return n


def _positive(kind):
    def check(text):
        try:
            value = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
        if not value > 0:
            raise argparse.ArgumentTypeError(f"expected a positive value, got {text!r}")
        return value

    return check


def _non_negative(text):
    value = float(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative value, got {text!r}")
    return value


def _common(p: argparse.ArgumentParser, *, dt_default: float, tmax_default: float) -> None:
    p.add_argument("--out", type=Path, help="CSV output path; the manifest goes to <out>.manifest.json")
    p.add_argument("--json", action="store_true", help="also write the data as JSON (<out>.json, or stdout)")
    p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    p.add_argument("--tmax", type=_non_negative, default=tmax_default)
    p.add_argument("--dt", type=_positive(float), default=dt_default)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pointerlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--selftest", action="store_true", help="run the built-in oracle checks and exit")
    sub = parser.add_subparsers(dest="command")

    k = sub.add_parser("kitten", help="reduced state of an even kitten exchanging quanta with its environment")
    _common(k, dt_default=0.01, tmax_default=5.0)
    k.add_argument("--lambda", dest="lam", type=parse_complex, default=complex(2.0))
    k.add_argument("--model", choices=("rabi", "markov"), default="markov")
    k.add_argument("--kappa", type=_positive(float), default=1.0)
    k.add_argument("--gamma", type=_positive(float), default=1.0)
    k.add_argument("--omega", type=float, default=0.0)
    k.add_argument("--trunc", type=parse_trunc, default="auto")

    p = sub.add_parser("pointer", help="purity sweep of coherent, Fock and kitten inputs over the transfer probability")
    p.add_argument("--out", type=Path)
    p.add_argument("--json", action="store_true")
    p.add_argument("--seed", type=int, default=0, help="recorded only; the sweep is deterministic")
    p.add_argument(
        "--lambda", dest="lams", type=parse_complex, action="append",
        help="coherent amplitude; repeat to sweep several (default 1, 2, 3)",
    )
    p.add_argument("--nbeta", type=int, default=11, help="number of |beta|^2 values in [0, 1]")
    p.add_argument("--trunc", type=parse_trunc, default="auto")

    ld = sub.add_parser("lindblad", help="damped cavity mode: analytic vs master equation vs quantum jumps")
    _common(ld, dt_default=0.002, tmax_default=3.0)
    ld.add_argument("--lambda", dest="lam", type=parse_complex, default=complex(2.0))
    ld.add_argument("--init", choices=("coherent", "fock1"), default="coherent")
    ld.add_argument("--gamma", type=_non_negative, default=1.0)
    ld.add_argument("--omega", type=float, default=0.0)
    ld.add_argument("--trunc", type=parse_trunc, default="auto")
    ld.add_argument("--ntraj", type=_positive(int), default=10_000)
    ld.add_argument("--sample", type=_positive(float), default=0.1, help="output interval (multiple of --dt)")
    ld.add_argument("--workers", type=_positive(int), default=1, help="processes for the trajectory engine")

    tb = sub.add_parser("twobody", help="two particles on a line: entanglement entropy timeline")
    tb.add_argument("scenario", help="scenario file, or the name of a shipped scenario")
    tb.add_argument("--out", type=Path)
    tb.add_argument("--json", action="store_true")
    tb.add_argument("--seed", type=int, default=0, help="recorded only; propagation is deterministic")
    tb.add_argument("--mean-field", action="store_true", help="add the Hartree product-state fidelity column")
    return parser


# --- output -----------------------------------------------------------------


@dataclass
class Table:
    columns: list
    units: dict
    rows: list = field(default_factory=list)

    def add(self, **row):
        self.rows.append([row[c] for c in self.columns])


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, complex):
        return format_complex(value)
    return str(value)


def _jsonable(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, complex):
        return format_complex(value)
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def run_digest(command: str, params: dict) -> str:
    """SHA-256 over the canonical parameter set; identical inputs give identical digests."""
    blob = json.dumps({"command": command, "params": _jsonable(params), "version": __version__}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


def render_csv(table: Table, digest: str, command: str) -> str:
    buf = io.StringIO()
    buf.write(f"# pointerlab {__version__} {command}\n")
    buf.write(f"# run_digest: {digest}\n")
    buf.write("# units: " + ", ".join(f"{c}[{table.units.get(c, '1')}]" for c in table.columns) + "\n")
    buf.write(",".join(table.columns) + "\n")
    for row in table.rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(command: str, params: dict, table: Table, args, wall: float, extra: dict | None = None) -> None:
    digest = run_digest(command, params)
    csv_text = render_csv(table, digest, command)
    payload = {"columns": table.columns, "units": table.units, "rows": _jsonable(table.rows), "run_digest": digest}
    if args.out is None:
        if args.json:
            json.dump(payload, sys.stdout, indent=1)
            sys.stdout.write("\n")
        else:
            sys.stdout.write(csv_text)
        return
    out = Path(args.out)
    outputs = [str(out)]
    atomic_write(out, csv_text)
    if args.json:
        json_path = out.with_suffix(".json")
        atomic_write(json_path, json.dumps(payload, indent=1) + "\n")
        outputs.append(str(json_path))
    manifest = {
        "subcommand": command,
        "params": _jsonable(params),
        "seed": params.get("seed"),
        "code_version": __version__,
        "run_digest": digest,
        "wall_time_s": wall,
        "outputs": outputs,
        "threads": {
            "workers": params.get("workers", 1),
            "cpu_count": os.cpu_count(),
            "omp_num_threads": os.environ.get("OMP_NUM_THREADS"),
        },
        "platform": {"python": platform.python_version(), "numpy": np.__version__},
    }
    if extra:
        manifest.update(_jsonable(extra))
    atomic_write(out.with_name(out.name + ".manifest.json"), json.dumps(manifest, indent=1, sort_keys=True) + "\n")


# --- subcommands ------------------------------------------------------------


def time_grid(tmax: float, dt: float) -> np.ndarray:
    """t = k*dt for k = 0 .. round(tmax/dt) - 1 (at least one point)."""
    n = max(1, int(round(tmax / dt)))
    return np.arange(n) * dt


def _trunc(lam: complex, trunc) -> int:
    return auto_truncation(lam) if trunc == "auto" else int(trunc)


def cmd_kitten(args) -> tuple[dict, Table]:
    model = RabiModel(args.omega, args.kappa) if args.model == "rabi" else MarkovModel(args.gamma, args.omega)
    n_trunc = _trunc(args.lam, args.trunc)
    params = {
        "lambda": args.lam, "model": args.model, "kappa": args.kappa, "gamma": args.gamma,
        "omega": args.omega, "tmax": args.tmax, "dt": args.dt, "trunc": n_trunc, "seed": args.seed,
    }
    cols = ["t", "coherence_closed_form", "coherence_numeric", "purity", "entropy_bits", "record_overlap"]
    units = {"t": "1/rate", "entropy_bits": "bit"}
    table = Table(cols, units)
    for rep in kitten_timeline(args.lam, model, time_grid(args.tmax, args.dt), n_trunc):
        table.add(**rep.as_row())
    return params, table


def pointer_rows(lams, n_beta: int, trunc="auto") -> Table:
    """Reduced-state purity and leading Schmidt weight for three input families."""
    cols = ["input", "lambda", "beta2", "purity", "schmidt_leading", "entropy_bits"]
    table = Table(cols, {"entropy_bits": "bit"})
    beta2_grid = np.round(np.linspace(0.0, 1.0, n_beta), 12)

    def row(kind, lam, psi, beta2):
        joint = evolve_system(psi, AmplitudePair.from_transfer(beta2))
        sd = schmidt(joint)
        rho = partial_trace(joint, keep="system")
        table.rows.append([kind, lam, float(beta2), purity(rho), float(sd.coefficients[0] ** 2), sd.entropy()])

    for lam in lams:
        n = _trunc(lam, trunc)
        for b2 in beta2_grid:
            row("coherent", lam, coherent_state(lam, n), b2)
    for b2 in beta2_grid:
        row("fock1", complex(0.0), fock_state(1, 1), b2)
    for lam in lams:
        n = _trunc(lam, trunc)
        for b2 in beta2_grid:
            row("kitten", lam, kitten_state(lam, n), b2)
    return table


def cmd_pointer(args) -> tuple[dict, Table]:
    lams = args.lams or [complex(1.0), complex(2.0), complex(3.0)]
    if args.nbeta < 2:
        raise FlagError("--nbeta must be at least 2")
    params = {"lambdas": lams, "nbeta": args.nbeta, "trunc": args.trunc, "seed": args.seed}
    return params, pointer_rows(lams, args.nbeta, args.trunc)


def cmd_lindblad(args) -> tuple[dict, Table, dict]:
    ratio = args.sample / args.dt
    stride = int(round(ratio))
    if stride < 1 or abs(ratio - stride) > 1e-9 * ratio:
        raise FlagError("--sample must be an integer multiple of --dt")
    times = np.arange(int(round(args.tmax / args.sample)) + 1) * stride * args.dt
    if args.init == "coherent":
        n_trunc = _trunc(args.lam, args.trunc)
        psi0 = coherent_state(args.lam, n_trunc)
    else:
        n_trunc = 1 if args.trunc == "auto" else max(1, int(args.trunc))
        psi0 = fock_state(1, n_trunc)
    params = {
        "init": args.init, "lambda": args.lam if args.init == "coherent" else None,
        "gamma": args.gamma, "omega": args.omega, "tmax": args.tmax, "dt": args.dt,
        "sample": args.sample, "trunc": n_trunc, "ntraj": args.ntraj, "seed": args.seed,
        "workers": args.workers,
    }
    master = integrate_master(psi0.projector(), args.omega, args.gamma, times)
    config = TrajectoryConfig(args.gamma, args.dt, float(times[-1]), args.ntraj, args.seed, args.omega)
    mc = run_trajectories(psi0, config, times, workers=args.workers)
    n_master = mean_occupation(master)
    n_mc = mean_occupation(mc)
    cols = [
        "t", "mean_n_analytic", "mean_n_master", "mean_n_mc",
        "trace_distance_master_mc", "fidelity_master_analytic",
    ]
    table = Table(cols, {"t": "1/gamma" if args.gamma else "1", "mean_n_analytic": "quanta",
                         "mean_n_master": "quanta", "mean_n_mc": "quanta"})
    decay = np.exp(-args.gamma * times)
    for k, t in enumerate(times):
        if args.init == "coherent":
            analytic = damped_coherent_analytic(args.lam, args.gamma, args.omega, t, n_trunc)
            nbar = abs(args.lam) ** 2 * decay[k]
        else:
            analytic = DensityMatrix(np.diag([1.0 - decay[k], decay[k]]).astype(complex))
            nbar = decay[k]
        table.add(
            t=float(t), mean_n_analytic=float(nbar), mean_n_master=float(n_master[k]),
            mean_n_mc=float(n_mc[k]), trace_distance_master_mc=trace_distance(master.states[k], mc.states[k]),
            fidelity_master_analytic=fidelity(master.states[k], analytic),
        )
    return params, table, {"master_dt": master.info["dt"]}


def resolve_scenario(name: str):
    path = Path(name)
    if path.is_file():
        return load_scenario(path), str(path)
    stem = name[:-4] if name.endswith(".cfg") else name
    if (SCENARIO_DIR / f"{stem}.cfg").is_file():
        return shipped_scenario(stem), f"shipped:{stem}"
    raise FlagError(f"no scenario file {name!r} and no shipped scenario of that name")


def cmd_twobody(args) -> tuple[dict, Table]:
    scenario, source = resolve_scenario(args.scenario)
    params = {"scenario": source, "definition": format_scenario(scenario), "seed": args.seed,
              "mean_field": args.mean_field}
    samples, _ = run_scenario(scenario)
    cols = ["t", "entropy_bits", "norm", "energy", "x_a_mean", "x_b_mean"]
    if args.mean_field:
        cols.append("mean_field_fidelity")
        mf = mean_field_comparison(scenario).fidelity
    table = Table(cols, {"t": "hbar/E", "entropy_bits": "bit", "energy": "E", "x_a_mean": "L", "x_b_mean": "L"})
    for k, s in enumerate(samples):
        row = s.as_row()
        if args.mean_field:
            row["mean_field_fidelity"] = float(mf[k])
        table.add(**row)
    e0 = samples[0].energy
    drift = max(abs(s.energy - e0) for s in samples) / max(abs(e0), 1e-300)
    norm_drift = max(abs(s.norm - samples[0].norm) for s in samples)
    if drift > ENERGY_DRIFT_TOL or norm_drift > NORM_DRIFT_TOL:
        raise InvariantBreach(f"energy drift {drift:.3e} or norm drift {norm_drift:.3e} above tolerance")
    return params, table


# --- self-test --------------------------------------------------------------


@dataclass
class Check:
    name: str
    value: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.tol)


def selftest_checks() -> list[Check]:
    """Fast versions of the closed-form-vs-numeric and oracle-triangle comparisons."""
    from .kitten import kitten_reduced_closed_form, kitten_reduced_numeric
    from .lindblad import analytic_residual

    checks = []
    worst = 0.0
    for lam in (1.0, 2.0):
        for b2 in (0.0, 0.3, 0.7, 1.0):
            amps = AmplitudePair.from_transfer(b2)
            diff = kitten_reduced_closed_form(lam, amps).entries - kitten_reduced_numeric(lam, amps).entries
            worst = max(worst, float(np.max(np.abs(diff))))
    checks.append(Check("kitten closed form vs numeric (max entry)", worst, 1e-6))

    worst = 0.0
    for lam in (1.0, 2.0, 2j):
        for b2 in (0.2, 0.5, 0.9):
            rho = partial_trace(evolve_system(coherent_state(lam), AmplitudePair.from_transfer(b2)))
            worst = max(worst, 1.0 - purity(rho))
    checks.append(Check("coherent input stays pure (1 - purity)", worst, 1e-8))

    lam, gamma = 2.0, 1.0
    times = np.linspace(0.0, 1.0, 5)
    psi0 = coherent_state(lam)
    master = integrate_master(psi0.projector(), 0.0, gamma, times)
    fid = min(fidelity(rho, damped_coherent_analytic(lam, gamma, 0.0, t, psi0.n_trunc))
              for rho, t in zip(master.states, times))
    checks.append(Check("master vs analytic (1 - fidelity)", 1.0 - fid, 1e-6))
    res = max(analytic_residual(lam, gamma, 0.0, t) for t in times)
    checks.append(Check("analytic projector residual", res, 1e-8))
    mc = run_trajectories(fock_state(1, 1), TrajectoryConfig(gamma, 0.005, 1.0, 2000, 7), times)
    worst = max(trace_distance(a, b) for a, b in zip(mc.states, integrate_master(fock_state(1, 1).projector(), 0.0, gamma, times).states))
    checks.append(Check("quantum jumps vs master, |1> (trace distance)", worst, 0.05))
    return checks


def run_selftest(stream=sys.stdout) -> int:
    checks = selftest_checks()
    for c in checks:
        stream.write(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.value:.3e} (tol {c.tol:.0e})\n")
    return EXIT_OK if all(c.passed for c in checks) else EXIT_SELFTEST


# --- entry point ------------------------------------------------------------

COMMANDS = {"kitten": cmd_kitten, "pointer": cmd_pointer, "lindblad": cmd_lindblad, "twobody": cmd_twobody}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.selftest:
        return run_selftest()
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_FLAGS
    start = time.perf_counter()
    try:
        result = COMMANDS[args.command](args)
    except FlagError as exc:
        sys.stderr.write(f"pointerlab {args.command}: error: {exc}\n")
        return EXIT_FLAGS
    except (InvariantBreach, TruncationError, InvalidStateError, StepSizeError, EdgeProximityError) as exc:
        sys.stderr.write(f"pointerlab {args.command}: invariant breach: {exc}\n")
        return EXIT_INVARIANT
    params, table, *rest = result
    emit(args.command, params, table, args, time.perf_counter() - start, rest[0] if rest else None)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
