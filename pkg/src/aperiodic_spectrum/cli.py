"""Command-line front end.

Every run reads a model file (or a built-in name such as ``step:1``), writes
CSV/JSON/OBJ artifacts into ``--out`` and starts each text artifact with a
``# config_sha256=...`` line hashing the model and all parameters except the
thread count, so identical configurations produce byte-identical files.

Model files are INI-style::

    [model]
    name = step
    # optional, defaults to Fibonacci; rules as letter=image pairs
    substitution = a=ab, b=a

    [letter a]
    kind = constant        # constant | delta | sampled
    value = 1.0
    length = 1.0

    [letter b]
    kind = constant
    value = 0

A ``delta`` letter takes ``strength``; a ``sampled`` letter takes
``samples`` (comma separated) or ``samples-file`` (one value per line).
"""
from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from .lyapunov import MAX_LYAPUNOV_LEVEL, lyapunov_estimates
from .models import ClosedFormModel, closed_form_invariant, closed_form_of
from .potential import Constant, Model, PointInteraction, Sampled
from .spectrum import (MAX_BAND_LEVEL, ResolutionError, band_spectrum, box_dimension_details, classify_grid,
                       default_threads, min_invariant_on_band)
from .subshift import DomainError, Substitution, fibonacci_substitution
from .tracemap import MAX_STEPS, invariant_of_energy, surface_mesh
from .transfer import EnergyGrid

EXIT_CONFIG = 2
EXIT_RESOLUTION = 3
EXIT_NUMERIC = 4


class ConfigError(Exception):
    pass


class NumericFailure(Exception):
    pass


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, str):
        return v
    return f"{float(v):.17g}"


# -- model files ----------------------------------------------------------------

BUILTIN = {"free", "step", "kp", "kronig-penney"}


def _builtin(spec: str) -> tuple[Model, str]:
    name, _, arg = spec.partition(":")
    try:
        lam = float(arg) if arg else 1.0
    except ValueError:
        raise ConfigError(f"bad coupling in model name {spec!r}") from None
    if name == "free":
        cf = ClosedFormModel.free()
    elif name == "step":
        cf = ClosedFormModel.step(lam)
    else:
        cf = ClosedFormModel.kronig_penney(lam)
    text = f"builtin {name} {lam!r}"
    return cf.to_model(), text


def _parse_rules(text: str) -> Substitution:
    rules = {}
    letters = []
    for item in text.split(","):
        if "=" not in item:
            raise ConfigError(f"substitution rule {item.strip()!r} is not letter=image")
        k, v = (p.strip() for p in item.split("=", 1))
        rules[k] = v
        letters.append(k)
    return Substitution.from_strings(rules, letters)


def _piece(section, base: Path):
    kind = section.get("kind", "constant").strip().lower()
    length = section.getfloat("length", 1.0)
    if kind == "constant":
        return Constant(section.getfloat("value", 0.0), length)
    if kind == "delta":
        return PointInteraction(section.getfloat("strength"), length)
    if kind == "sampled":
        if "samples-file" in section:
            path = Path(section["samples-file"])
            path = path if path.is_absolute() else base / path
            samples = np.loadtxt(path, ndmin=1)
        elif "samples" in section:
            samples = np.array([float(v) for v in section["samples"].split(",")])
        else:
            raise ConfigError("sampled letter needs samples or samples-file")
        return Sampled(samples, length)
    raise ConfigError(f"unknown letter kind {kind!r}")


def load_model(spec: str) -> tuple[Model, str]:
    """Model from an INI file or a built-in ``free`` / ``step:LAM`` / ``kp:LAM``.

    Returns the model and the canonical text that enters the config hash.
    """
    if spec.split(":")[0] in BUILTIN and not Path(spec).exists():
        return _builtin(spec)
    path = Path(spec)
    if not path.is_file():
        raise ConfigError(f"model file {spec!r} not found")
    text = path.read_text()
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse model file: {exc}") from None
    meta = cp["model"] if cp.has_section("model") else {}
    try:
        sub = _parse_rules(meta["substitution"]) if "substitution" in meta else fibonacci_substitution()
        pieces = {}
        for name in cp.sections():
            if name.startswith("letter "):
                pieces[name[len("letter "):].strip()] = _piece(cp[name], path.parent)
        model = Model(pieces, sub, name=meta.get("name", path.stem))
    except (DomainError, ValueError, TypeError) as exc:
        raise ConfigError(f"invalid model: {exc}") from None
    return model, text


# -- helpers ----------------------------------------------------------------------

def _window(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in text.split(","))
    except ValueError:
        raise ConfigError(f"window must be 'E_min,E_max', got {text!r}") from None
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise ConfigError(f"window [{lo}, {hi}] is empty or not finite")
    return lo, hi


def _levels(text: str, cap: int) -> list[int]:
    out = []
    for part in text.split(","):
        part = part.strip()
        try:
            if ".." in part:
                a, b = part.split("..")
                out.extend(range(int(a), int(b) + 1))
            else:
                out.append(int(part))
        except ValueError:
            raise ConfigError(f"bad level list {text!r}") from None
    for n in out:
        if not 0 <= n <= cap:
            raise ConfigError(f"level {n} outside [0, {cap}]")
    return sorted(set(out))


def config_hash(args, model_text: str) -> str:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("threads", "func", "out")}
    cfg["model_text"] = model_text
    return hashlib.sha256(json.dumps(cfg, sort_keys=True, default=str).encode()).hexdigest()


def _write_csv(path: Path, digest: str, header, rows):
    with path.open("w", newline="") as fh:
        fh.write(f"# config_sha256={digest}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _energies(args):
    lo, hi = _window(args.window)
    if args.grid < 2:
        raise ConfigError("--grid needs at least two points")
    pts = [np.linspace(lo, hi, args.grid)]
    if getattr(args, "energies", None):
        try:
            pts.append(np.array([float(v) for v in args.energies.split(",")]))
        except ValueError:
            raise ConfigError(f"bad energy list {args.energies!r}") from None
    if getattr(args, "random", 0):
        rng = np.random.default_rng(args.seed)
        pts.append(rng.uniform(lo, hi, args.random))
    return np.unique(np.concatenate(pts))


def _check_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(np.asarray(a, dtype=float))):
            raise NumericFailure("non-finite values in output")


# -- commands -----------------------------------------------------------------------

def cmd_bands(args, model, digest, out: Path):
    window = _window(args.window)
    summary = {"config_sha256": digest, "window": list(window), "levels": {}}
    for n in _levels(args.levels, MAX_BAND_LEVEL):
        cover = band_spectrum(model, n, window, threads=args.threads)
        rows = [(n, b.E_lo, b.E_hi, b.length, min_invariant_on_band(model, b)) for b in cover.bands]
        _write_csv(out / f"bands_n{n}.csv", digest, ("level", "E_lo", "E_hi", "length", "min_I_on_band"), rows)
        summary["levels"][str(n)] = {
            "count": len(cover.bands),
            "total_measure": cover.total_measure,
            "unresolved": [[float(a), float(b)] for a, b in cover.unresolved],
        }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")


def cmd_invariant(args, model, digest, out: Path):
    E = _energies(args)
    num = invariant_of_energy(model, E)
    cf = closed_form_of(model)
    ref = closed_form_invariant(cf, E) if cf is not None else np.full(E.shape, math.nan)
    diff = np.abs(num - ref)
    _check_finite(num)
    _write_csv(out / "invariant.csv", digest, ("E", "I_numeric", "I_closed_form", "abs_diff"),
               zip(E, num, ref, diff))


def cmd_escape(args, model, digest, out: Path):
    E = _energies(args)
    if not 1 <= args.nmax <= MAX_STEPS:
        raise ConfigError(f"--nmax must be in [1, {MAX_STEPS}]")
    g = classify_grid(model, EnergyGrid(float(E[0]), float(E[-1]) + (E[-1] == E[0]), E), args.nmax,
                      threads=args.threads)
    rows = zip(E, g.classes, g.escape_index, g.invariant)
    _write_csv(out / "grid.csv", digest, ("E", "class", "escape_n", "I"), rows)


def cmd_lyapunov(args, model, digest, out: Path):
    E = _energies(args)
    n = _levels(str(args.level), MAX_LYAPUNOV_LEVEL)[0]
    if n < 1:
        raise ConfigError("--level must be at least 1")
    est = lyapunov_estimates(model, E, n)
    _check_finite([e.L for e in est])
    rows = ((e.E, e.L_disc, e.s, e.L, e.n_used, e.residual) for e in est)
    _write_csv(out / "lyapunov.csv", digest, ("E", "L_disc", "s", "L", "n_used", "residual"), rows)


def cmd_dimension(args, model, digest, out: Path):
    window = _window(args.window)
    levels = _levels(args.levels, MAX_BAND_LEVEL)
    if len(levels) != 2:
        raise ConfigError("dimension needs exactly two levels")
    d = box_dimension_details(model, window, tuple(levels), threads=args.threads)
    _write_csv(out / "dimension.csv", digest,
               ("n1", "n2", "N1", "N2", "eps1", "eps2", "raw_slope", "estimate"),
               [(*d.levels, *d.band_counts, *d.mean_lengths, d.raw_slope, d.estimate)])


def cmd_surface(args, model, digest, out: Path):
    if args.resolution < 8 or args.bounds <= 0:
        raise ConfigError("--resolution must be >= 8 and --bounds positive")
    mesh = surface_mesh(args.I, bounds=args.bounds, resolution=args.resolution)
    if mesh.faces.size == 0:
        raise NumericFailure(f"no surface I = {args.I} inside the cube")
    _check_finite(mesh.vertices)
    stem = f"surface_I{_fmt(args.I)}"
    mesh.write_obj(out / f"{stem}.obj", header=f"config_sha256={digest}")
    mesh.write_csv(out / f"{stem}.csv", header=f"config_sha256={digest}")


COMMANDS = {
    "bands": cmd_bands,
    "invariant": cmd_invariant,
    "escape": cmd_escape,
    "lyapunov": cmd_lyapunov,
    "dimension": cmd_dimension,
    "surface": cmd_surface,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="aperiodic-spectrum",
                                description="Spectra of Fibonacci-type Schroedinger operators on the line.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, window="0,20"):
        sp.add_argument("--model", default="free", help="INI model file, or free / step:LAM / kp:LAM")
        sp.add_argument("--window", default=window, help="energy window E_min,E_max")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--threads", type=int, default=None, help="worker threads (env APERIODIC_SPECTRUM_THREADS)")
        sp.add_argument("--seed", type=int, default=0)

    def grid(sp, count=1000):
        sp.add_argument("--grid", type=int, default=count, help="number of uniform grid energies")
        sp.add_argument("--energies", default="", help="extra comma separated energies")
        sp.add_argument("--random", type=int, default=0, help="extra energies drawn uniformly with --seed")

    sp = sub.add_parser("bands", help="band spectra sigma_n")
    common(sp)
    sp.add_argument("--levels", "--level", dest="levels", default="0..4", help="e.g. 4,8,12 or 0..4")

    sp = sub.add_parser("invariant", help="invariant I(E), numeric and closed form")
    common(sp, "0.1,50")
    grid(sp)

    sp = sub.add_parser("escape", help="escape-time classification of a grid")
    common(sp)
    grid(sp, 2001)
    sp.add_argument("--nmax", type=int, default=100)

    sp = sub.add_parser("lyapunov", help="Lyapunov exponents on a grid")
    common(sp)
    grid(sp, 401)
    sp.add_argument("--level", type=int, default=12)

    sp = sub.add_parser("dimension", help="two-level box-counting dimension")
    common(sp)
    sp.add_argument("--levels", "--level", dest="levels", default="8,12")

    sp = sub.add_parser("surface", help="level surface of the invariant as OBJ and CSV")
    common(sp)
    sp.add_argument("--I", type=float, default=0.0, help="invariant level")
    sp.add_argument("--bounds", type=float, default=3.0)
    sp.add_argument("--resolution", type=int, default=64)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        model, model_text = load_model(args.model) if args.command != "surface" else (None, "")
        if args.threads is None:
            args.threads = default_threads()
        if args.threads < 1:
            raise ConfigError("--threads must be positive")
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        digest = config_hash(args, model_text)
        COMMANDS[args.command](args, model, digest, out)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResolutionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOLUTION
    except (NumericFailure, FloatingPointError, ArithmeticError) as exc:
        print(f"error: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


if __name__ == "__main__":
    sys.exit(main())
