"""Command-line front end: coefficients, verification suite, probabilities, grids.

Exit codes: 0 on success, 1 when a verification check fails, 2 on bad input.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import oracle
from .coupling import CouplingCache, CouplingKey, a_coeff, ga_contraction, gamma_coeff
from .modes import ModeIndexError, PolarPoint, enumerate_modes, zernike_eval
from .specfun import hyp1f1_neg_asymptotic, hyp1f1_neg_series
from .turbulence import (
    AO_MODES,
    DEFAULT_N_INNER,
    AoConfig,
    DetectionSpec,
    TurbulenceParams,
    g_tensor,
    g_tensor_vacuum,
    joint_probability_result,
    probability_grid,
)

LOG_FLOOR = -4.5
PERTURB_FACTOR = 1.0 + 1e-6


class InputError(ValueError):
    """Invalid command-line or config input (exit code 2)."""


@dataclass
class RunConfig:
    command: str = "grid"
    pump: tuple = (2, 0)
    detectors: tuple = (1, -1)
    key: tuple | None = None
    k: float = 1e7
    z: float = 5e3
    R: float = 5e-3
    sigma_R: float = 0.0
    ao_mode: str = "none"
    ao_cutoff: int = 0
    n_max: int = 9
    n_inner: int = DEFAULT_N_INNER
    n5_max: int | None = None
    order: int = 6
    perturb: tuple | None = None
    oracle: bool = False
    output_path: str | None = None
    quadrature: dict = field(default_factory=dict)

    @property
    def params(self) -> TurbulenceParams:
        return TurbulenceParams(self.k, self.z, self.R, self.sigma_R)

    @property
    def ao(self) -> AoConfig:
        return AoConfig(self.ao_mode, self.ao_cutoff)


def fmt(x) -> str:
    """Shortest round-trip decimal form."""
    return repr(float(x))


# ---------------------------------------------------------------------------
# coeff / prob
# ---------------------------------------------------------------------------


def run_coeff(config: RunConfig, out=None) -> int:
    out = out if out is not None else sys.stdout
    if config.key is None or len(config.key) != 6:
        raise InputError("coeff needs a key of six integers n1 m1 n2 m2 n3 m3")
    k = config.key
    key = CouplingKey((k[0], k[1]), (k[2], k[3]), (k[4], k[5]))
    print(f"key {' '.join(map(str, k))}", file=out)
    print(f"A {fmt(a_coeff(key))}", file=out)
    print(f"Gamma {fmt(gamma_coeff(key))}", file=out)
    if config.oracle:
        spec = oracle.QuadratureSpec(**config.quadrature)
        ra = oracle.a_coeff_numeric(key, spec)
        rg = oracle.gamma_coeff_numeric(key, spec)
        print(f"A_quadrature {fmt(ra.value)} error {fmt(ra.error)}", file=out)
        print(f"Gamma_quadrature {fmt(rg.value)} error {fmt(rg.error)}", file=out)
    return 0


def run_prob(config: RunConfig, out=None) -> int:
    out = out if out is not None else sys.stdout
    if len(config.detectors) != 4:
        raise InputError("prob needs --detectors N1 M1 N2 M2")
    d = config.detectors
    spec = DetectionSpec(tuple(config.pump), (d[0], d[1]), (d[2], d[3]))
    r = joint_probability_result(spec, config.params, config.ao, config.n_inner, config.n5_max)
    print(f"P_raw {fmt(r.value)}", file=out)
    print(f"P_clamped {fmt(max(r.value, 0.0))}", file=out)
    print(f"imag {fmt(r.imag)}", file=out)
    print(f"tail_estimate {fmt(r.tail)}", file=out)
    print(f"n_inner {r.n_inner}", file=out)
    return 0


# ---------------------------------------------------------------------------
# grid
# ---------------------------------------------------------------------------


def grid_csv(grid) -> str:
    n5 = grid.n5_max if grid.n5_max is not None else "all (up to 2*n_inner)"
    buf = io.StringIO()
    head = [
        ("pump_N", grid.pump.n),
        ("pump_M", grid.pump.m),
        ("M1", grid.m1),
        ("M2", grid.m2),
        ("sigma_R", fmt(grid.params.sigma_R)),
        ("ao_mode", grid.ao.mode),
        ("ao_cutoff", grid.ao.cutoff),
        ("k", fmt(grid.params.k)),
        ("z", fmt(grid.params.z)),
        ("R", fmt(grid.params.R)),
        ("n5_max", n5),
        ("n_inner", grid.n_inner),
        ("normalization", grid.normalization + (" (all cells zero; left unnormalized)" if grid.all_zero else "")),
    ]
    for name, val in head:
        buf.write(f"# {name}={val}\n")
    buf.write("N1,N2,P_raw,P_norm,log10_P_norm_clamped\n")
    for N1, N2 in grid.keys():
        pn = grid.normalized[N1, N2]
        lg = max(math.log10(pn), LOG_FLOOR) if pn > 0 else LOG_FLOOR
        buf.write(f"{N1},{N2},{fmt(grid.raw[N1, N2])},{fmt(pn)},{fmt(lg)}\n")
    return buf.getvalue()


def read_grid_csv(text: str):
    """Parse an emitted grid; returns (meta dict, rows of (N1, N2, P_raw, P_norm, log))."""
    meta, rows = {}, []
    lines = text.splitlines()
    body = [l for l in lines if not l.startswith("#")]
    for l in lines:
        if l.startswith("# ") and "=" in l:
            k, v = l[2:].split("=", 1)
            meta[k] = v
    for l in body[1:]:
        a, b, c, d, e = l.split(",")
        rows.append((int(a), int(b), float(c), float(d), float(e)))
    return meta, rows


def run_grid(config: RunConfig, out=None) -> int:
    out = out if out is not None else sys.stdout
    if len(config.detectors) != 2:
        raise InputError("grid needs --detectors M1 M2 (azimuthal pair)")
    m1, m2 = config.detectors
    grid = probability_grid(tuple(config.pump), m1, m2, config.n_max, config.params, config.ao,
                            config.n_inner, config.n5_max)
    text = grid_csv(grid)
    if config.output_path in (None, "-"):
        out.write(text)
    else:
        try:
            Path(config.output_path).write_text(text)
        except OSError as exc:
            raise InputError(f"cannot write {config.output_path}: {exc}") from exc
    return 0


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


@dataclass
class Check:
    name: str
    value: float
    tol: float
    passed: bool


def _check(name, value, tol) -> Check:
    return Check(name, float(value), float(tol), bool(value < tol))


def verification_checks(order: int = 6, perturb=None) -> list[Check]:
    """The invariant suite used by ``verify``; each check reports its worst deviation."""
    perturb_map = {}
    if perturb is not None:
        p = perturb
        perturb_map[CouplingKey((p[0], p[1]), (p[2], p[3]), (p[4], p[5]))] = PERTURB_FACTOR
    cache = CouplingCache(perturb=perturb_map)
    spec = oracle.QuadratureSpec()
    checks = []
    low = min(order, 4)

    modes = enumerate_modes(low)
    dev = 0.0
    for a in modes:
        for b in modes:
            v = oracle.disk_integral(lambda p: zernike_eval(a, p) * np.conj(zernike_eval(b, p)), spec)
            dev = max(dev, abs(v - (math.pi if a == b else 0.0)))
    checks.append(_check(f"orthonormality n<={low}", dev, 1e-10))

    dev = 0.0
    for key in oracle.canonical_keys(order):
        dev = max(dev, abs(cache.a(key) - oracle.a_coeff_numeric(key, spec).value))
    checks.append(_check(f"A closed form vs quadrature n<={order}", dev, 1e-10))

    dev = 0.0
    for key in oracle.canonical_keys(low):
        g = cache.gamma(key)
        r = oracle.gamma_coeff_numeric(key, spec).value
        # within relative 1e-4 or absolute 1e-6; the score is below 1 when either holds
        score = min(abs(g - r) / 1e-6, abs(g - r) / (1e-4 * abs(g)) if g else math.inf)
        dev = max(dev, score)
    checks.append(_check(f"Gamma closed form vs quadrature n<={low} (error score)", dev, 1.0))

    dev = 0.0
    for key in oracle.canonical_keys(order):
        g = cache.gamma(key)
        dev = max(dev, abs(g - oracle.gamma_coeff_series(key).value) / max(abs(g), 1.0))
    checks.append(_check(f"Gamma closed form vs series route n<={order}", dev, 1e-12))

    dev = 0.0
    allm = enumerate_modes(order)
    for N in allm:
        for N1 in allm:
            dev = max(dev, abs(ga_contraction(N, N1, cache) - (math.pi / 4 if N == N1 else 0.0)))
    checks.append(_check(f"Gamma-A orthogonality n<={order}", dev, 1e-10))

    r10 = oracle.completeness_residual(PolarPoint(0.3, 0.7), PolarPoint(0.4, 1.1), 10)
    r30 = oracle.completeness_residual(PolarPoint(0.3, 0.7), PolarPoint(0.4, 1.1), 30)
    checks.append(Check("mixed completeness residual decreases 10 -> 30", r30, r10, r30 < r10))

    dev = 0.0
    for a, b in ((1.0, 2.0), (1.5, 4.0), (3.0, 6.0)):
        for x in (40.0, 60.0, 80.0):
            dev = max(dev, abs(hyp1f1_neg_series(a, b, x) / hyp1f1_neg_asymptotic(a, b, x) - 1.0))
    checks.append(_check("1F1 series vs asymptotic overlap", dev, 1e-8))

    if order >= 3:
        dev = 0.0
        for sigma in (0.01, 0.1, 0.5):
            params = TurbulenceParams(sigma_R=sigma)
            for n5 in range(0, 11, 2):
                ref = oracle.g_tensor_numeric(n5, params).value
                dev = max(dev, abs(g_tensor(n5, params) / ref - 1.0))
        checks.append(_check("G closed form vs quadrature", dev, 1e-6))

        params = TurbulenceParams(sigma_R=1e-4)
        ratios = [g_tensor(n, params) / g_tensor_vacuum(n, params) for n in (0, 2, 4)]
        checks.append(_check("G / G_vac spread at sigma_R=1e-4", max(ratios) - min(ratios), 1e-3))

        vac = probability_grid((2, 0), 1, -1, 9, TurbulenceParams(), cache=cache)
        ref = {k: gamma_coeff(CouplingKey((k[0], 1), (k[1], -1), (2, 0))) ** 2 for k in vac.cells}
        tot = sum(ref.values())
        dev = max(abs(vac.normalized[k] - ref[k] / tot) for k in ref)
        checks.append(_check("vacuum grid equals normalized |Gamma|^2", dev, 1e-10))

        g = probability_grid((2, 0), 1, -1, 5, TurbulenceParams(sigma_R=0.1), cache=cache)
        sym = max(abs(g.raw[a, b] - g.raw[b, a]) for a, b in g.raw)
        checks.append(_check("grid detector-exchange symmetry", sym, 1e-12))
        checks.append(_check("grid imaginary residue", max(abs(v) for v in g.imag.values()), 1e-12))
    return checks


def run_verify(config: RunConfig, out=None) -> int:
    out = out if out is not None else sys.stdout
    checks = verification_checks(config.order, config.perturb)
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        print(f"{status} {c.name}: value={c.value:.3e} tol={c.tol:.1e}", file=out)
    ok = all(c.passed for c in checks)
    print(f"{sum(c.passed for c in checks)}/{len(checks)} checks passed", file=out)
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------

_CONFIG_FIELDS = {f for f in RunConfig.__dataclass_fields__}


def _load_config(path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise InputError("config must be a JSON object")
    unknown = set(data) - _CONFIG_FIELDS
    if unknown:
        raise InputError(f"unknown config fields: {sorted(unknown)}")
    for name in ("pump", "detectors", "key", "perturb"):
        if data.get(name) is not None:
            data[name] = tuple(data[name])
    return data


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zernturb",
        description="Zernike two-photon coupling tensors and turbulence crosstalk grids.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
        p.add_argument("--out", dest="output_path", help="output path ('-' for stdout)")

    def physics(p):
        p.add_argument("--pump", nargs=2, type=int, metavar=("N", "M"))
        p.add_argument("--sigma-r", dest="sigma_R", type=float)
        p.add_argument("--ao-mode", choices=AO_MODES)
        p.add_argument("--ao-cutoff", type=int)
        p.add_argument("--k", type=float)
        p.add_argument("--z", type=float)
        p.add_argument("--R", type=float)
        p.add_argument("--n-inner", type=int)
        p.add_argument("--n5-max", type=int)

    p = sub.add_parser("coeff", help="print A and Gamma for one key")
    common(p)
    p.add_argument("key", nargs=6, type=int, metavar="n1 m1 n2 m2 n3 m3")
    p.add_argument("--oracle", action="store_true", default=None, help="also print quadrature values")

    p = sub.add_parser("verify", help="run the invariant suite")
    common(p)
    p.add_argument("--order", type=int, help="radial order bound (default 6)")
    p.add_argument("--perturb", nargs=6, type=int, metavar="I",
                   help="multiply Gamma for this key by 1+1e-6 (sensitivity check)")

    p = sub.add_parser("prob", help="joint probability for one detector pair")
    common(p)
    physics(p)
    p.add_argument("--detectors", nargs=4, type=int, metavar=("N1", "M1", "N2", "M2"))

    p = sub.add_parser("grid", help="probability grid as CSV")
    common(p)
    physics(p)
    p.add_argument("--detectors", nargs=2, type=int, metavar=("M1", "M2"))
    p.add_argument("--n-max", type=int)
    return parser


def config_from_args(args) -> RunConfig:
    values = {}
    if getattr(args, "config", None):
        values.update(_load_config(args.config))
    for name, val in vars(args).items():
        if name in _CONFIG_FIELDS and val is not None:
            values[name] = tuple(val) if isinstance(val, list) else val
    values["command"] = args.command
    cfg = RunConfig(**values)
    if cfg.sigma_R < 0:
        raise InputError("sigma_R must be non-negative")
    return cfg


COMMANDS = {"coeff": run_coeff, "verify": run_verify, "prob": run_prob, "grid": run_grid}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = config_from_args(args)
        return COMMANDS[config.command](config)
    except (InputError, ModeIndexError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
