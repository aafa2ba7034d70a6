"""Configuration-driven experiment runner (console script ``band-lt``).

Commands wire the modules into reproducible pipelines:

* ``bands``     periodic potential -> band-set JSON
* ``distort``   sampling sweep of the distortion-ratio lower bounds
* ``spectrum``  discretized (H0, H) -> classified spectrum (+ SVG scatter)
* ``ltcheck``   spectrum -> one bound-family report (T1 / T1simplified /
                T2 / T3), CSV + JSON
* ``hansmann``  random-matrix spectral-variation ensemble
* ``sweep``     ltcheck across couplings alpha V with the scaling trend
                flagged

Configs are YAML files (``--config -`` reads JSON from stdin).  A fixed
config and seed reproduce every numeric output byte for byte: no
timestamps are embedded, floats are serialized via repr, and random
draws use numpy's seeded PCG64 generator whose identity is recorded in
the output metadata.

Exit codes: 0 success, 2 config/precondition error, 3 hypothesis
violation, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from . import bandset, hill, ltsums, moebius, operators, schatten
from .errors import BandLTError, ConfigError, exit_code_for

COMMANDS = ("bands", "distort", "spectrum", "ltcheck", "hansmann", "sweep")
THEOREMS = ("T1", "T1simplified", "T2", "T3")


# ---------------------------------------------------------------------------
# config access

class Cfg:
    """Dict wrapper whose errors carry the offending field path."""

    def __init__(self, doc: dict, prefix: str = ""):
        if not isinstance(doc, dict):
            raise ConfigError(f"{prefix or 'config'} must be a mapping")
        self.doc = doc
        self.prefix = prefix

    def _path(self, key: str) -> str:
        return f"{self.prefix}.{key}" if self.prefix else key

    def has(self, key: str) -> bool:
        return key in self.doc

    def raw(self, key: str, default=None):
        return self.doc.get(key, default)

    def sub(self, key: str, required: bool = True) -> "Cfg | None":
        if key not in self.doc:
            if required:
                raise ConfigError(f"missing section '{self._path(key)}'")
            return None
        return Cfg(self.doc[key], self._path(key))

    def number(self, key: str, default=None, required: bool = False):
        if key not in self.doc:
            if required:
                raise ConfigError(f"missing field '{self._path(key)}'")
            return default
        val = self.doc[key]
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ConfigError(f"'{self._path(key)}' must be a number")
        return float(val)

    def integer(self, key: str, default=None, required: bool = False):
        if key not in self.doc:
            if required:
                raise ConfigError(f"missing field '{self._path(key)}'")
            return default
        val = self.doc[key]
        if isinstance(val, bool) or not isinstance(val, int):
            raise ConfigError(f"'{self._path(key)}' must be an integer")
        return int(val)

    def string(self, key: str, default=None, choices=None, required: bool = False):
        if key not in self.doc:
            if required:
                raise ConfigError(f"missing field '{self._path(key)}'")
            return default
        val = self.doc[key]
        if not isinstance(val, str):
            raise ConfigError(f"'{self._path(key)}' must be a string")
        if choices and val not in choices:
            raise ConfigError(f"'{self._path(key)}' must be one of {choices}")
        return val


def _amplitude(raw, path: str) -> complex:
    if isinstance(raw, (int, float)) and not isinstance(raw, bool):
        return complex(raw)
    if isinstance(raw, (list, tuple)) and len(raw) == 2:
        return complex(float(raw[0]), float(raw[1]))
    raise ConfigError(f"'{path}' must be a number or an [re, im] pair")


def perturbation_samples(spec: dict, x: np.ndarray, coupling: float = 1.0) -> np.ndarray:
    """Sample the perturbing potential V on the grid nodes.

    Types: ``zero``; ``bump`` (smooth, compactly supported in
    |x-center| < halfwidth); ``step`` (indicator); ``samples`` (explicit
    [re, im] pairs, one per node).
    """
    cfg = Cfg(spec, "v")
    kind = cfg.string("type", required=True,
                      choices=("zero", "bump", "step", "samples"))
    alpha = coupling * cfg.number("coupling", default=1.0)
    if kind == "zero":
        return np.zeros(x.size, dtype=complex)
    if kind == "samples":
        vals = cfg.raw("values")
        if not isinstance(vals, list) or len(vals) != x.size:
            raise ConfigError("'v.values' must list one [re, im] pair per grid node")
        return alpha * np.array([complex(a, b) for a, b in vals])
    amp = _amplitude(cfg.raw("amplitude", 1.0), "v.amplitude")
    center = cfg.number("center", required=True)
    halfwidth = cfg.number("halfwidth", required=True)
    if not halfwidth > 0:
        raise ConfigError("'v.halfwidth' must be positive")
    t = (x - center) / halfwidth
    if kind == "step":
        profile = (np.abs(t) < 1.0).astype(float)
    else:
        profile = np.zeros_like(t)
        inside = np.abs(t) < 1.0
        profile[inside] = np.exp(1.0 - 1.0 / (1.0 - t[inside] ** 2))
    return alpha * amp * profile


# ---------------------------------------------------------------------------
# model assembly shared by spectrum / ltcheck / sweep

@dataclass
class Model:
    v0: hill.PeriodicPotential
    band_set: bandset.BandSet
    band_meta: dict
    op_h0: operators.DiscretizedOperator
    op_h: operators.DiscretizedOperator
    v_samples: np.ndarray
    nb: schatten.NormBundle
    delta: float


def build_model(cfg: Cfg, coupling: float = 1.0) -> Model:
    v0 = hill.potential_from_spec(cfg.sub("v0").doc)
    grid = cfg.sub("grid")
    if grid.has("length"):
        length = grid.number("length", required=True)
    else:
        length = grid.number("periods", required=True) * v0.period
    n = grid.integer("points", required=True)
    boundary = grid.string("boundary", default="dirichlet",
                           choices=("dirichlet", "periodic"))

    bands_cfg = cfg.sub("bands")
    if bands_cfg.has("file"):
        with open(bands_cfg.string("file", required=True)) as fh:
            I = bandset.from_json(json.load(fh))
        meta = {"source": "file"}
    else:
        e_max = bands_cfg.number("e_max", required=True)
        I, meta = hill.band_edges_report(v0, e_max, bands_cfg.number("scan_step"))
        if bands_cfg.raw("close_with_ray", True):
            I = bandset.close_with_ray(I)

    probe = operators.discretize(0.0, 0.0, length, n, boundary)
    x = probe.grid()
    v0_samples = np.asarray(v0.evaluate(x), dtype=float)
    v_samples = perturbation_samples(cfg.sub("v").doc, x, coupling)
    op_h0 = operators.discretize(v0_samples, 0.0, length, n, boundary)
    op_h = operators.discretize(v0_samples, v_samples, length, n, boundary)

    exps = cfg.sub("exponents", required=False)
    p = exps.number("p", default=2.0) if exps else 2.0
    nb = schatten.norm_bundle(p, v_samples, op_h.spacing, v0_inf=v0.sup_norm)

    delta_raw = cfg.raw("delta", "auto")
    if delta_raw == "auto":
        delta = operators.default_delta(op_h.spacing, I)
    elif isinstance(delta_raw, (int, float)) and not isinstance(delta_raw, bool):
        delta = float(delta_raw)
    else:
        raise ConfigError("'delta' must be 'auto' or a number")
    return Model(v0=v0, band_set=I, band_meta=meta, op_h0=op_h0, op_h=op_h,
                 v_samples=v_samples, nb=nb, delta=delta)


def resolve_omega(cfg: Cfg, omega1: float, theorem: str) -> float:
    raw = cfg.raw("omega", "auto")
    if raw == "auto":
        if theorem == "T1simplified":
            return omega1 - 2.0 * max(1.0, abs(omega1))
        return ltsums.default_omega(omega1)
    if isinstance(raw, (int, float)) and not isinstance(raw, bool):
        return float(raw)
    raise ConfigError("'omega' must be 'auto' or a number")


# ---------------------------------------------------------------------------
# deterministic writers

def _json_bytes(doc) -> bytes:
    return (json.dumps(doc, sort_keys=True, indent=1) + "\n").encode()


def write_json(path: Path, doc) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(_json_bytes(doc))


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([
                repr(v) if isinstance(v, float) else v for v in row
            ])


def lt_report_csv(report: ltsums.LTReport) -> tuple[list[str], list[list]]:
    header = ["theorem", "parameters", "lhs", "rhs_structure",
              "empirical_ratio", "eigenvalue_count"]
    row = [report.theorem, json.dumps(report.parameters, sort_keys=True),
           report.lhs, report.rhs_structure, report.empirical_ratio,
           report.eigenvalue_count]
    return header, [row]


def lt_report_from_csv_row(row: dict) -> ltsums.LTReport:
    """Rebuild an LTReport from a CSV row (round-trip counterpart)."""
    return ltsums.LTReport(
        theorem=row["theorem"],
        lhs=float(row["lhs"]),
        rhs_structure=float(row["rhs_structure"]),
        empirical_ratio=float(row["empirical_ratio"]),
        parameters=json.loads(row["parameters"]),
        eigenvalue_count=int(row["eigenvalue_count"]),
    )


def emit_svg_scatter(report: operators.SpectrumReport, I: bandset.BandSet,
                     path: Path) -> None:
    """Static scatter: bands on the real axis, the delta tube, eigenvalues,
    discrete candidates highlighted, flagged artifacts crossed.

    Output depends only on the report content, so identical inputs give
    identical bytes.
    """
    eigs = report.eigenvalues
    delta = report.delta
    xs = [a for a, _ in I.edges] + [b for _, b in I.edges]
    if I.terminal_ray:
        xs.append(I.ray_start * 1.1 + 1.0)
    ys = [0.0]
    if eigs.size:
        xs += list(eigs.real)
        ys += list(eigs.imag)
    x_lo, x_hi = min(xs) - 1.0, max(xs) + 1.0
    y_amp = max(max(abs(v) for v in ys), 5.0 * delta, 1e-3) * 1.2
    width, height = 900.0, 420.0

    def px(x):
        return (x - x_lo) / (x_hi - x_lo) * (width - 60.0) + 30.0

    def py(y):
        return height / 2.0 - y / y_amp * (height / 2.0 - 20.0)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" '
        f'height="{height:.0f}" viewBox="0 0 {width:.0f} {height:.0f}">',
        f'<rect width="{width:.0f}" height="{height:.0f}" fill="white"/>',
        f'<line x1="{px(x_lo):.2f}" y1="{py(0):.2f}" x2="{px(x_hi):.2f}" '
        f'y2="{py(0):.2f}" stroke="#bbbbbb" stroke-width="1"/>',
    ]
    segments = list(I.edges)
    if I.terminal_ray:
        segments.append((I.ray_start, x_hi))
    for a, b in segments:
        parts.append(
            f'<rect x="{px(a):.2f}" y="{py(delta):.2f}" '
            f'width="{px(b) - px(a):.2f}" height="{py(-delta) - py(delta):.2f}" '
            f'fill="#c8dcf0" stroke="none"/>'
        )
        parts.append(
            f'<line x1="{px(a):.2f}" y1="{py(0):.2f}" x2="{px(b):.2f}" '
            f'y2="{py(0):.2f}" stroke="#1f4e8c" stroke-width="4"/>'
        )
    flagged = set(map(complex, report.boundary_artifacts))
    candidates = set(map(complex, report.discrete_candidates))
    for z in map(complex, eigs):
        cx, cy = px(z.real), py(z.imag)
        if z in flagged:
            parts.append(
                f'<path d="M {cx - 4:.2f} {cy - 4:.2f} L {cx + 4:.2f} {cy + 4:.2f} '
                f'M {cx - 4:.2f} {cy + 4:.2f} L {cx + 4:.2f} {cy - 4:.2f}" '
                f'stroke="#999999" stroke-width="1.5"/>'
            )
        elif z in candidates:
            parts.append(
                f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="5" fill="#c03020" '
                f'stroke="#701000" stroke-width="1"/>'
            )
        else:
            parts.append(
                f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="2" fill="#404040"/>'
            )
    parts.append("</svg>")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes("\n".join(parts).encode())


# ---------------------------------------------------------------------------
# commands

def _outputs(cfg: Cfg, out_dir: Path | None) -> dict[str, Path]:
    out = cfg.sub("output", required=False)
    paths = {}
    if out:
        for kind in ("json", "csv", "svg"):
            name = out.string(kind)
            if name:
                p = Path(name)
                if out_dir is not None and not p.is_absolute():
                    p = out_dir / p
                paths[kind] = p
    return paths


def _wrap(command: str, seed: int | None, result: dict) -> dict:
    return {
        "command": command,
        "seed": seed,
        "rng_family": ltsums.RNG_FAMILY,
        "result": result,
    }


def cmd_bands(cfg: Cfg, seed, outputs) -> dict:
    v0 = hill.potential_from_spec(cfg.sub("v0").doc)
    bands_cfg = cfg.sub("bands")
    I, meta = hill.band_edges_report(
        v0, bands_cfg.number("e_max", required=True), bands_cfg.number("scan_step")
    )
    doc = bandset.to_json(I)
    doc["metadata"] = meta
    if "json" in outputs:
        write_json(outputs["json"], doc)
    return doc


def cmd_distort(cfg: Cfg, seed, outputs) -> dict:
    d = cfg.sub("distort")
    if cfg.sub("bands").has("file"):
        with open(cfg.sub("bands").string("file", required=True)) as fh:
            I = bandset.from_json(json.load(fh))
    else:
        v0 = hill.potential_from_spec(cfg.sub("v0").doc)
        I, _ = hill.band_edges_report(v0, cfg.sub("bands").number("e_max", required=True))
    rng = np.random.default_rng(seed)
    report = moebius.verify_distortion(
        I,
        moebius.MoebiusMap(d.number("omega", required=True)),
        variant=d.string("variant", default="uniform",
                         choices=moebius.VARIANTS),
        n=d.integer("samples", default=10_000),
        rng=rng,
    )
    doc = report.to_json()
    if "json" in outputs:
        write_json(outputs["json"], _wrap("distort", seed, doc))
    return doc


def _spectrum_parts(cfg: Cfg, coupling: float = 1.0):
    model = build_model(cfg, coupling)
    report = operators.spectrum_report(model.op_h, model.band_set, model.delta)
    return model, report


def cmd_spectrum(cfg: Cfg, seed, outputs) -> dict:
    model, report = _spectrum_parts(cfg)
    doc = operators.report_to_json(model.op_h, report)
    doc["band_set"] = bandset.to_json(model.band_set)
    doc["omega1"] = operators.numerical_range_abscissa(model.op_h)
    if "json" in outputs:
        write_json(outputs["json"], _wrap("spectrum", seed, doc))
    if "csv" in outputs:
        d = bandset.dist_to_bands(report.eigenvalues, model.band_set,
                                  treat_as_complete=True)
        cands = set(map(complex, report.discrete_candidates))
        arts = set(map(complex, report.boundary_artifacts))
        rows = [
            [float(z.real), float(z.imag), float(di),
             int(complex(z) in cands), int(complex(z) in arts)]
            for z, di in zip(report.eigenvalues, d)
        ]
        write_csv(outputs["csv"], ["re", "im", "dist", "discrete", "artifact"], rows)
    if "svg" in outputs:
        emit_svg_scatter(report, model.band_set, outputs["svg"])
    return doc


def _lt_report(cfg: Cfg, theorem: str, coupling: float = 1.0) -> ltsums.LTReport:
    model, report = _spectrum_parts(cfg, coupling)
    exps = cfg.sub("exponents", required=False)
    if theorem in ("T1", "T1simplified"):
        omega1 = operators.numerical_range_abscissa(model.op_h)
        omega = resolve_omega(cfg, omega1, theorem)
        if theorem == "T1":
            return ltsums.lt_sum_t1(report, omega, omega1, model.nb)
        return ltsums.lt_sum_t1_simplified(report, omega, omega1, model.nb)
    if theorem == "T2":
        return ltsums.lt_sum_t2(report, model.nb, model.band_set.a1)
    epsilon = exps.number("epsilon", default=0.5) if exps else 0.5
    a_values = cfg.raw("a_values")
    return ltsums.lt_sum_t3(report, model.nb, epsilon, model.v_samples,
                            a_values=a_values)


def cmd_ltcheck(cfg: Cfg, seed, outputs) -> dict:
    theorem = cfg.string("theorem", required=True, choices=THEOREMS)
    report = _lt_report(cfg, theorem)
    if "json" in outputs:
        write_json(outputs["json"], _wrap("ltcheck", seed, report.to_json()))
    if "csv" in outputs:
        header, rows = lt_report_csv(report)
        write_csv(outputs["csv"], header, rows)
    return report.to_json()


def cmd_hansmann(cfg: Cfg, seed, outputs) -> dict:
    h = cfg.sub("hansmann")
    rng = np.random.default_rng(seed)
    report = ltsums.hansmann_ensemble(
        n=h.integer("n", default=50),
        trials=h.integer("trials", default=100),
        p=h.number("p", default=2.0),
        perturbation_scale=h.number("scale", default=0.5),
        rng=rng,
        diagonal=bool(h.raw("diagonal", False)),
    )
    doc = report.to_json()
    if "json" in outputs:
        write_json(outputs["json"], _wrap("hansmann", seed, doc))
    if "csv" in outputs:
        rows = [[i, float(r)] for i, r in enumerate(report.ratios)]
        write_csv(outputs["csv"], ["trial", "ratio"], rows)
    return doc


def cmd_sweep(cfg: Cfg, seed, outputs) -> dict:
    theorem = cfg.string("theorem", required=True, choices=THEOREMS)
    alphas = cfg.raw("alphas")
    if not isinstance(alphas, list) or not alphas:
        raise ConfigError("'alphas' must be a nonempty list of couplings")
    rows = ltsums.coupling_sweep(lambda a: _lt_report(cfg, theorem, a), alphas)
    summary = ltsums.sweep_trend(rows)
    doc = {"rows": rows, "trend": summary, "theorem": theorem}
    if "json" in outputs:
        write_json(outputs["json"], _wrap("sweep", seed, doc))
    if "csv" in outputs:
        header = ["alpha", "theorem", "lhs", "rhs_structure", "empirical_ratio",
                  "lhs_over_alpha_p", "eigenvalue_count"]
        write_csv(outputs["csv"], header,
                  [[r[k] for k in header] for r in rows])
    return doc


_DISPATCH = {
    "bands": cmd_bands,
    "distort": cmd_distort,
    "spectrum": cmd_spectrum,
    "ltcheck": cmd_ltcheck,
    "hansmann": cmd_hansmann,
    "sweep": cmd_sweep,
}


def run(config: dict, command: str | None = None, seed: int | None = None,
        out_dir: str | None = None) -> tuple[int, dict]:
    """Execute a pipeline; returns (exit status, result document)."""
    try:
        cfg = Cfg(config)
        cmd = command or cfg.string("command", choices=COMMANDS)
        if cmd is None:
            raise ConfigError("missing 'command' (or pass one on the CLI)")
        if seed is None:
            seed = cfg.integer("seed", default=None)
        outputs = _outputs(cfg, Path(out_dir) if out_dir else None)
        result = _DISPATCH[cmd](cfg, seed, outputs)
        return 0, result
    except BandLTError as exc:
        return exit_code_for(exc), {"error": str(exc), "type": type(exc).__name__}


def load_config(path: str) -> dict:
    """YAML from a file, or JSON from stdin when path is '-'."""
    if path == "-":
        try:
            return json.load(sys.stdin)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"stdin is not valid JSON: {exc}") from exc
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a mapping")
    return doc


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="band-lt",
        description="Band-spectrum perturbation experiments, batch mode.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True,
                        help="YAML config path, or '-' for JSON on stdin")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out-dir", default=None)
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
    except BandLTError as exc:
        print(f"band-lt: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    status, result = run(config, command=args.command, seed=args.seed,
                         out_dir=args.out_dir)
    if status != 0:
        print(f"band-lt: {result.get('type')}: {result.get('error')}",
              file=sys.stderr)
    else:
        json.dump(result, sys.stdout, sort_keys=True, indent=1)
        print()
    return status


if __name__ == "__main__":
    sys.exit(main())
