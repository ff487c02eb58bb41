"""``einselect`` command-line front end.

Every subcommand reads one JSON config, validates it, and writes CSV/JSON
artifacts plus a ``provenance.json`` sidecar into ``--out``. Exit codes:
0 success, 2 config error, 3 numeric guard, 4 I/O error.
"""

from __future__ import annotations

import argparse
import contextlib
import hashlib
import json
import math
import os
import sys
import tempfile
import warnings
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from . import __version__, analysis, content, fringe, oracle
from .config import CLAIMS_FILE, SCHEMAS, ConfigError, validate
from .errors import NoDecay, NumericGuard
from .spinbath import Direction, model_from_dict, reduced_state

EXIT_OK, EXIT_CONFIG, EXIT_GUARD, EXIT_IO = 0, 2, 3, 4


class GuardAt(Exception):
    def __init__(self, path: str, err: NumericGuard):
        super().__init__(str(err))
        self.path, self.err = path, err


@contextlib.contextmanager
def at(path: str):
    """Attribute library errors raised inside the block to a config field."""
    try:
        yield
    except (ConfigError, GuardAt):
        raise
    except NumericGuard as exc:
        raise GuardAt(path, exc) from exc
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(path, str(exc)) from exc


# ---------------------------------------------------------------------------
# Output helpers


def fmt(x: float) -> str:
    """Shortest round-trip decimal; integral values lose their ``.0``; ``-0`` becomes ``0``."""
    x = float(x)
    if x == 0.0:
        return "0"
    s = repr(x)
    return s[:-2] if s.endswith(".0") else s


def clean(obj: Any) -> Any:
    """JSON-safe copy: numpy scalars to Python, non-finite floats to ``null``."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            return None
        return 0.0 if v == 0.0 else v
    return obj


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


class Run:
    """Collects outputs for one invocation and writes the provenance sidecar."""

    def __init__(self, command: str, config: dict, out: Path, seed: int | None, threads: int):
        self.command = command
        self.config = config
        self.out = out
        self.seed = seed
        self.threads = threads
        canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
        self.config_hash = hashlib.sha256(canonical.encode()).hexdigest()
        self.files: dict[str, str] = {}

    @property
    def provenance(self) -> dict:
        return {
            "command": self.command,
            "config_sha256": self.config_hash,
            "seed": self.seed,
            "version": __version__,
        }

    def _record(self, name: str, text: str) -> None:
        atomic_write(self.out / name, text)
        self.files[name] = hashlib.sha256(text.encode()).hexdigest()

    def csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[float]]) -> None:
        lines = [",".join(header)]
        lines += [",".join(fmt(v) for v in row) for row in rows]
        self._record(name, "\n".join(lines) + "\n")

    def json(self, name: str, doc: dict) -> None:
        body = {"provenance": self.provenance, **doc}
        self._record(name, json.dumps(clean(body), indent=2) + "\n")

    def finish(self) -> None:
        doc = {**self.provenance, "files": self.files}
        atomic_write(self.out / "provenance.json", json.dumps(doc, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# Config access


def _linspace(spec) -> np.ndarray:
    if isinstance(spec, dict):
        return np.linspace(float(spec["start"]), float(spec["stop"]), int(spec["num"]))
    return np.asarray(spec, dtype=float)


def _model(cfg: dict, seed: int | None, key: str = "model"):
    with at(f"$.{key}"):
        return model_from_dict(cfg[key], seed)


def _effective_seed(cfg: dict, override: int | None) -> int | None:
    if override is not None:
        return override
    doc = cfg.get("model", {})
    gen = doc.get("random_env") or doc.get("env", {}).get("random_env")
    if gen is not None:
        return int(gen["seed"])
    if "scaling" in cfg:
        return int(cfg["scaling"].get("base_seed", 0))
    return None


# ---------------------------------------------------------------------------
# Subcommands


def cmd_simulate(cfg: dict, run: Run, ctx: dict) -> None:
    model = _model(cfg, ctx["seed"])
    if cfg.get("oracle", False):
        with at("$.oracle"):
            oracle._guard(model.env.N)
    times = _linspace(cfg["times"])
    with at("$.times"):
        series = analysis.sample_series(model.env, times)
    run.csv("series.csv", ("t", "re_r", "im_r", "log_abs_r"), series.rows())

    snaps = []
    for i, t in enumerate(cfg.get("snapshots", [])):
        with at(f"$.snapshots[{i}]"):
            rho = reduced_state(model, float(t))
            entry = {
                "t": float(t),
                "rho": [[[z.real, z.imag] for z in row] for row in rho.matrix],
                "abs_coherence": abs(rho.coherence),
                "purity": rho.purity(),
                "bloch": rho.bloch_vector.tolist(),
            }
            if cfg.get("oracle", False):
                dense = oracle.partial_trace_system(oracle.evolve_full(model, float(t)))
                entry["oracle_max_abs_diff"] = float(np.max(np.abs(dense.matrix - rho.matrix)))
            snaps.append(entry)
    run.json("states.json", {"N": model.env.N, "snapshots": snaps})


def cmd_analyze(cfg: dict, run: Run, ctx: dict) -> None:
    if "model" in cfg:
        env = _model(cfg, ctx["seed"]).env
        sections = [k for k in ("gaussian", "average", "recurrence") if k in cfg] or ["gaussian"]
        if "gaussian" in sections:
            spec = cfg.get("gaussian", {})
            with at("$.gaussian"):
                try:
                    fit = analysis.gaussian_rate(env, float(spec.get("fit_fraction", 1.0)))
                    doc = {**fit.to_dict(), "gamma_curvature": analysis.curvature_rate(env)}
                except NoDecay as exc:
                    doc = {"no_decay": True, "gamma": 0.0, "gamma_theory": analysis.gamma_theory(env), "reason": str(exc)}
            run.json("fit.json", {"N": env.N, **doc})
        if "average" in sections:
            spec = cfg["average"]
            with at("$.average"), warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                rep = analysis.average_modsq(env, float(spec["horizon"]), int(spec.get("samples", 10_000)))
            for w in caught:
                print(f"warning: {w.message}", file=sys.stderr)
            run.json("average.json", {"N": env.N, **rep.to_dict()})
        if "recurrence" in sections:
            spec = cfg["recurrence"]
            with at("$.recurrence"):
                rep = analysis.recurrence_scan(env, float(spec["threshold"]), float(spec["horizon"]), float(spec["step"]))
            run.json("recurrence.json", {"N": env.N, **rep.to_dict()})
    if "scaling" in cfg:
        spec = cfg["scaling"]
        base = ctx["seed"] if ctx["seed"] is not None else int(spec.get("base_seed", 0))
        with at("$.scaling"):
            table = analysis.scaling_study(
                spec["n_list"],
                int(spec["seeds"]),
                spec.get("horizon"),
                spec.get("samples"),
                g_range=tuple(spec.get("g_range", (0.5, 1.5))),
                states=spec.get("states", "haar"),
                base_seed=base,
                threads=ctx["threads"],
            )
        run.json("scaling.json", {"base_seed": base, **table.to_dict()})


def cmd_content(cfg: dict, run: Run, ctx: dict) -> None:
    model = _model(cfg, ctx["seed"])
    psi = _linspace(cfg.get("psi", {"start": 0.0, "stop": math.pi / 2, "num": 19}))
    chi = float(cfg.get("chi", 0.0))
    t, window, lags = float(cfg["t"]), float(cfg["window"]), int(cfg.get("lags", 16))
    rows = []
    for i, p in enumerate(psi):
        with at(f"$.psi[{i}]"):
            claim = content.MagnitudeClaim.spin(Direction(float(p), chi))
            rep = content.claim_content(model, claim, t, window, lags)
        rows.append((p, rep.record_score, rep.stability_score, rep.content))
    run.csv("content_sweep.csv", ("psi", "R", "S", "content"), rows)


def _load_claims(cfg: dict, base: Path) -> tuple[list[dict], str]:
    spec = cfg["claims"]
    if isinstance(spec, list):
        return spec, "$.claims"
    path = (base / spec).resolve()
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{spec}$", f"invalid JSON ({exc})") from None
    validate(doc, CLAIMS_FILE, root=f"{spec}$")
    if isinstance(doc, dict):
        return doc["claims"], f"{spec}$.claims"
    return doc, f"{spec}$"


def cmd_gate(cfg: dict, run: Run, ctx: dict) -> None:
    model = _model(cfg, ctx["seed"])
    claims, root = _load_claims(cfg, ctx["base"])
    t, window, lags = float(cfg["t"]), float(cfg["window"]), int(cfg.get("lags", 16))
    threshold = float(cfg.get("threshold", content.DEFAULT_THRESHOLD))
    verdicts = []
    for i, doc in enumerate(claims):
        with at(f"{root}[{i}]"):
            claim = content.claim_from_dict(doc, model.system)
            v = content.gate_claim(model, claim, t, threshold, window, lags)
        verdicts.append({**v.to_dict(), "claim": claim.to_dict()})
    run.json("verdicts.json", {"t": t, "threshold": threshold, "verdicts": verdicts})


def _kernel(spec) -> fringe.DecoherenceKernel | None:
    if spec is None:
        return None
    if spec["form"] == "gaussian":
        lc = spec["l_c"]
        return fringe.DecoherenceKernel.gaussian(math.inf if lc == "inf" else float(lc))
    eta = [complex(*e) if isinstance(e, list) else complex(e) for e in spec["eta"]]
    return fringe.DecoherenceKernel.tabulated(spec["s"], eta)


def _grating(doc: dict) -> fringe.GratingSpec:
    return fringe.GratingSpec(float(doc["period"]), float(doc["open_fraction"]), int(doc["slit_count"]), float(doc.get("offset", 0.0)))


def cmd_fringe(cfg: dict, run: Run, ctx: dict) -> None:
    with at("$.kernel"):
        kernel = _kernel(cfg.get("kernel"))
    if "gratings" in cfg:
        with at("$.grid"):
            g = cfg["grid"]
            grid = fringe.Grid(float(g["x_min"]), float(g["x_max"]), int(g["n"]))
        with at("$.gratings"):
            gratings = [_grating(d) for d in cfg["gratings"]]
        wavelength = float(cfg["wavelength"])
        coherence = float(cfg.get("source_coherence", 0.05))
        window = tuple(cfg.get("window", (grid.x_min, grid.x_max)))
        with at("$"):
            stages = fringe.run_pipeline(
                grid, wavelength, coherence, gratings, [float(d) for d in cfg["distances"]],
                kernel, int(cfg.get("kernel_before", 1)),
            )
    else:
        with at("$.setup"):
            setup = fringe.TalbotLauConfig(**cfg.get("setup", {}))
            grid, gratings = setup.grid, [setup.grating(), setup.grating()]
        window = tuple(cfg.get("window", setup.window))
        with at("$.setup"):
            stages = fringe.run_talbot_lau(setup, kernel)
    rho = stages["at_mask"]
    if cfg.get("decohere_at_mask", False) and kernel is not None:
        rho = fringe.apply_kernel(rho, kernel)
    with at("$.mask"):
        mask = _grating(cfg["mask"]) if "mask" in cfg else gratings[-1]
    with at("$.window"):
        vis = fringe.intensity_and_visibility(rho, window)
    run.csv("pattern.csv", ("x", "intensity"), zip(grid.x, vis.pattern))

    n_off = int(cfg.get("offsets", 32))
    offsets = mask.period * np.arange(n_off) / n_off
    with at("$.mask"):
        flux = fringe.mask_scan(rho, mask, offsets)
    run.csv("scan.csv", ("offset", "flux"), zip(offsets, flux))

    pol = cfg.get("policy", {})
    policy = fringe.LicensePolicy(float(pol.get("kappa", 1.0)), bool(pol.get("license_inclusive_union", False)))
    ell = fringe.coherence_length(rho)
    verdicts = []
    for i, c in enumerate(cfg.get("claims", [])):
        with at(f"$.claims[{i}]"):
            if "slits" in c:
                v = fringe.license_disjunction(rho, mask.windows(), c["slits"] == "exclusive", policy)
                what = {"slits": c["slits"], "count": mask.slit_count}
            elif "total" in c:
                v = fringe.license_position_claim(rho, (grid.x_min, grid.x_max), policy)
                what = {"interval": [grid.x_min, grid.x_max]}
            else:
                v = fringe.license_position_claim(rho, tuple(c["interval"]), policy)
                what = {"interval": list(c["interval"])}
        verdicts.append({**v.to_dict(), **what, "label": c.get("label")})
    trace_error = abs(rho.trace() - 1.0)
    run.json(
        "fringe.json",
        {
            "visibility": vis.visibility,
            "i_max": vis.i_max,
            "i_min": vis.i_min,
            "flat": vis.flat,
            "coherence_length": {"value": ell.value, "capped": ell.capped, "floored": ell.floored},
            "trace_error": trace_error,
            "verdicts": verdicts,
        },
    )


def cmd_temp(cfg: dict, run: Run, ctx: dict) -> None:
    path = (ctx["base"] / cfg["table"]).resolve()
    with at("$.table"):
        table = fringe.EntropyTable.from_csv(path)
    rows = []
    for i, e in enumerate(cfg["energies"]):
        with at(f"$.energies[{i}]"):
            rows.append({"E": float(e), "T_star": fringe.microcanonical_temperature(table, float(e))})
    run.json("temperature.json", {"table": cfg["table"], "rows": rows})


COMMANDS: dict[str, Callable[[dict, Run, dict], None]] = {
    "simulate": cmd_simulate,
    "analyze": cmd_analyze,
    "content": cmd_content,
    "gate": cmd_gate,
    "fringe": cmd_fringe,
    "temp": cmd_temp,
}


# ---------------------------------------------------------------------------
# Entry point


def _threads(arg: int | None) -> int:
    if arg is not None:
        return max(1, arg)
    env = os.environ.get("EINSELECT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError("EINSELECT_THREADS", f"not an integer: {env!r}") from None
    return 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, required=True, help="JSON run configuration")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")
    common.add_argument("--seed", type=int, default=None, help="override the config's random seed")
    common.add_argument("--threads", type=int, default=None, help="worker threads (env EINSELECT_THREADS)")
    parser = argparse.ArgumentParser(prog="einselect", description="Spin-bath decoherence and fringe toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "simulate": "decoherence-factor series and reduced-state snapshots",
        "analyze": "Gaussian fit, long-time average, recurrences, scaling",
        "content": "content sweep over measurement directions",
        "gate": "classify claims from a claims file",
        "fringe": "two-grating pipeline: pattern, scan and licensing",
        "temp": "microcanonical temperature from an entropy table",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        try:
            text = args.config.read_text()
        except OSError as exc:
            print(f"error[{EXIT_IO}]: cannot read config {args.config}: {exc}", file=sys.stderr)
            return EXIT_IO
        try:
            cfg = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("$", f"invalid JSON ({exc})") from None
        validate(cfg, SCHEMAS[args.command])
        threads = _threads(args.threads)
        seed = _effective_seed(cfg, args.seed)
        ctx = {"seed": args.seed, "threads": threads, "base": args.config.resolve().parent}
        run = Run(args.command, cfg, args.out, seed, threads)
        COMMANDS[args.command](cfg, run, ctx)
        run.finish()
    except ConfigError as exc:
        print(f"error[{EXIT_CONFIG}] config field {exc.path}: {exc.message}", file=sys.stderr)
        return EXIT_CONFIG
    except GuardAt as exc:
        print(f"error[{EXIT_GUARD}] {type(exc.err).__name__} at {exc.path}: {exc.err}", file=sys.stderr)
        return EXIT_GUARD
    except NumericGuard as exc:
        print(f"error[{EXIT_GUARD}] {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except OSError as exc:
        print(f"error[{EXIT_IO}] I/O: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
