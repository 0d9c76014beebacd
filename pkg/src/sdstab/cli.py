"""Command-line front end: synthesize / simulate / check-lie / check-patchwork.

One INI config describes one deterministic experiment; all sampling is
seeded, integration is fixed-step, and CSV output is byte-identical across
repeated runs with the same config and seed.

Exit codes: 0 all checks passed; 1 certificate or verification failure;
2 configuration error; 3 numerical failure.
"""

import argparse
import configparser
import os
import sys

import numpy as np

from . import registry
from .errors import (
    ConfigError,
    ControllerError,
    NoCertifiedStepError,
    NotStabilizableError,
    NumericalFailure,
    OffsetSelectionError,
    UncoveredPointError,
)
from .exprs import ExprSyntaxError, coord_names, parse_scalar
from .liecalc import FAIL, ExprScalarField, ExprVectorField, check_prop1_point
from .odeint import IntegrationConfig
from .patchwork import verify_patchwork
from .sampling import ball_points
from .sdfctl import (
    FrozenGainController,
    PatchworkController,
    PerSampleQuadratic,
    ZeroController,
    certify_decrease,
    run_closed_loop,
)
from .sysmodel import AffineSystem, StateLinearSystem, make_uniform_partition
from .synth import synthesize_gain

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _fmt(v):
    return repr(float(v))


class Config:
    """Typed access to one INI experiment description."""

    def __init__(self, parser):
        self.cp = parser

    @classmethod
    def load(cls, path):
        parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
        try:
            read = parser.read(path)
        except configparser.Error as exc:
            raise ConfigError("cannot parse config %s: %s" % (path, exc)) from exc
        if not read:
            raise ConfigError("config file %s not found" % path)
        return cls(parser)

    def has(self, section, key=None):
        if key is None:
            return self.cp.has_section(section)
        return self.cp.has_option(section, key)

    def get(self, section, key, default=None, required=False):
        if self.cp.has_option(section, key):
            return self.cp.get(section, key).strip()
        if required:
            raise ConfigError("missing [%s] %s" % (section, key))
        return default

    def get_float(self, section, key, default=None, required=False):
        raw = self.get(section, key, required=required)
        if raw is None:
            return default
        try:
            return float(raw)
        except ValueError:
            raise ConfigError("[%s] %s must be a number, got %r" % (section, key, raw)) from None

    def get_int(self, section, key, default=None, required=False):
        raw = self.get(section, key, required=required)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError:
            raise ConfigError("[%s] %s must be an integer, got %r" % (section, key, raw)) from None


def _parse_vector(text):
    try:
        return np.array([float(tok) for tok in text.split(",")])
    except ValueError:
        raise ConfigError("cannot parse vector %r" % text) from None


def _parse_vectors(text):
    return [_parse_vector(chunk) for chunk in text.split(";") if chunk.strip()]


def _expr_matrix(text, dim, rows, cols):
    """Rows split on ';', entries on ',', each an expression in x1..xn."""
    names = coord_names(dim)
    try:
        row_texts = [r for r in text.split(";")]
        if len(row_texts) != rows:
            raise ConfigError("expected %d matrix rows, got %d" % (rows, len(row_texts)))
        entries = []
        for r in row_texts:
            row = [parse_scalar(e, names) for e in r.split(",")]
            if len(row) != cols:
                raise ConfigError("expected %d entries per row, got %d" % (cols, len(row)))
            entries.append(row)
    except ExprSyntaxError as exc:
        raise ConfigError("bad matrix expression: %s" % exc) from exc

    def matrix(x):
        xs = list(np.asarray(x, dtype=float))
        return np.array([[float(e.eval(xs)) for e in row] for row in entries])

    return matrix


def _build_system(cfg):
    """Returns (kind, system) with kind in {state-linear, affine}."""
    name = cfg.get("system", "registry")
    if name is not None:
        if name in registry.SYSTEM_BUILDERS:
            return "state-linear", registry.SYSTEM_BUILDERS[name]()
        if name in registry.AFFINE_BUILDERS:
            return "affine", registry.AFFINE_BUILDERS[name]().system
        raise ConfigError(
            "unknown registry system %r (known: %s)"
            % (name, ", ".join(sorted(list(registry.SYSTEM_BUILDERS) + list(registry.AFFINE_BUILDERS))))
        )
    kind = cfg.get("system", "type", required=True)
    dim = cfg.get_int("system", "dim", required=True)
    if kind == "state-linear":
        m = cfg.get_int("system", "inputs", default=1)
        A = _expr_matrix(cfg.get("system", "A", required=True), dim, dim, dim)
        B = _expr_matrix(cfg.get("system", "B", required=True), dim, dim, m)
        return "state-linear", StateLinearSystem(A, B, dim, m)
    if kind == "affine":
        try:
            f = ExprVectorField.from_text(cfg.get("system", "f", required=True), dim)
            g = ExprVectorField.from_text(cfg.get("system", "g", required=True), dim)
        except ExprSyntaxError as exc:
            raise ConfigError("bad vector field: %s" % exc) from exc
        return "affine", AffineSystem(f, g)
    raise ConfigError("unknown system type %r" % kind)


def _integration_config(cfg):
    step = cfg.get_float("integrator", "step", default=1e-3)
    blowup = cfg.get_float("integrator", "blowup", default=1e6)
    try:
        return IntegrationConfig(step=step, blowup_norm=blowup)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _build_patchwork(cfg, seed):
    name = cfg.get("patchwork", "registry")
    offsets_raw = cfg.get("patchwork", "offsets")
    offsets = list(_parse_vector(offsets_raw)) if offsets_raw else None
    if name is not None:
        if name not in registry.PATCHWORK_BUILDERS:
            raise ConfigError("unknown patchwork registry entry %r" % name)
        return registry.PATCHWORK_BUILDERS[name](offsets=offsets, seed=seed)
    raise ConfigError("inline patchwork families need a [patchwork] registry entry")


# -- synthesize -----------------------------------------------------------------


def cmd_synthesize(cfg, out_dir, seed, quiet):
    kind, sys_obj = _build_system(cfg)
    if kind != "state-linear":
        raise ConfigError("gain synthesis needs a state-linear system")
    pts_raw = cfg.get("synthesize", "points")
    if pts_raw is not None:
        points = _parse_vectors(pts_raw)
    else:
        radius = cfg.get_float("synthesize", "radius", default=1.0)
        samples = cfg.get_int("synthesize", "samples", default=32)
        points = [np.zeros(sys_obj.dim_state)] + list(
            ball_points(sys_obj.dim_state, samples, radius, seed=seed)
        )

    failures = 0
    eig_lo, eig_hi = np.inf, -np.inf
    for xi in points:
        A, B = sys_obj.matrices_at(xi)
        try:
            res = synthesize_gain(A, B)
        except NotStabilizableError as exc:
            failures += 1
            print("point=%s  NOT STABILIZABLE: %s" % (np.round(xi, 6).tolist(), exc))
            continue
        eigs = np.linalg.eigvalsh(res.lyapunov)
        eig_lo = min(eig_lo, float(eigs[0]))
        eig_hi = max(eig_hi, float(eigs[-1]))
        if not quiet:
            print(
                "point=%s  gain=%s  decay=%s  abscissa=%s  eigP=[%s, %s]"
                % (
                    np.round(xi, 6).tolist(),
                    np.round(res.gain, 6).tolist(),
                    _fmt(res.decay),
                    _fmt(res.abscissa),
                    _fmt(eigs[0]),
                    _fmt(eigs[-1]),
                )
            )
    if failures == 0 and np.isfinite(eig_lo):
        print("uniform-bounds: %s <= P <= %s over %d points" % (_fmt(eig_lo), _fmt(eig_hi), len(points)))
    print("RESULT %s %d %d" % ("pass" if failures == 0 else "fail", len(points), failures))
    return EXIT_OK if failures == 0 else EXIT_FAILED


# -- simulate -------------------------------------------------------------------


def _write_trajectory_csv(path, rows, n, m, with_w):
    header = ["t"] + ["x%d" % (i + 1) for i in range(n)] + ["u%d" % (j + 1) for j in range(m)]
    header += ["V"] + (["W"] if with_w else [])
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_certificate_csv(path, cert):
    with open(path, "w", newline="") as fh:
        fh.write("k,T_k,V_start,V_end,L_k,Vmax,bound_ok,C_k\n")
        for ic in cert.intervals:
            fh.write(
                "%d,%s,%s,%s,%s,%s,%d,%s\n"
                % (
                    ic.index,
                    _fmt(ic.t_start),
                    _fmt(ic.v_start),
                    _fmt(ic.v_end),
                    _fmt(ic.margin),
                    _fmt(ic.v_max),
                    1 if ic.bound_ok else 0,
                    _fmt(ic.excursion_ratio),
                )
            )


def _trajectory_rows(run, V_provider, W=None):
    rows = []
    per_interval = hasattr(V_provider, "for_interval")
    for k, rec in enumerate(run.records):
        Vk = V_provider.for_interval(rec) if per_interval else V_provider
        sl = slice(1, None) if k > 0 else slice(None)
        times = rec.traj.times[sl]
        states = rec.traj.states[sl]
        inputs = rec.traj.inputs[sl]
        for t, x, u in zip(times, states, inputs):
            row = [t, *x, *u, float(Vk(x))]
            if W is not None:
                try:
                    row.append(W(x))
                except UncoveredPointError:
                    row.append(float("nan"))
            rows.append(row)
    return rows


def cmd_simulate(cfg, out_dir, seed, quiet):
    kind, sys_obj = _build_system(cfg)
    plant = sys_obj.as_general()
    icfg = _integration_config(cfg)

    ctrl_type = cfg.get("controller", "type", default="frozen-gain")
    W = None
    if ctrl_type in ("frozen-gain", "frozen-gain-zoh"):
        if kind != "state-linear":
            raise ConfigError("the frozen-gain controller needs a state-linear system")
        ctrl = FrozenGainController(sys_obj, icfg, zero_order_hold=ctrl_type.endswith("zoh"))
    elif ctrl_type == "zero":
        ctrl = ZeroController(dim_input=plant.dim_input)
    elif ctrl_type == "patchwork":
        if kind != "state-linear":
            raise ConfigError("patchwork piece plans are frozen-gain and need a state-linear system")
        W, _ = _build_patchwork(cfg, seed)
        plans = [FrozenGainController(sys_obj, icfg) for _ in W.family.pieces]
        ctrl = PatchworkController(W, plans, dim_input=plant.dim_input)
    else:
        raise ConfigError("unknown controller type %r" % ctrl_type)

    h = cfg.get_float("partition", "h", required=True)
    count = cfg.get_int("partition", "count", default=2)
    try:
        partition = make_uniform_partition(h, count)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    horizon = cfg.get_float("run", "horizon", required=True)
    x0s = _parse_vectors(cfg.get("run", "x0", required=True))
    final_norm = cfg.get_float("run", "final_norm", default=1e-2)

    cert_kind = cfg.get("run", "certificate", default="per-sample-quadratic")
    if cert_kind == "per-sample-quadratic":
        V_provider = PerSampleQuadratic()
    elif cert_kind == "expression":
        try:
            V_provider = ExprScalarField.from_text(
                cfg.get("run", "V", required=True), plant.dim_state
            )
        except ExprSyntaxError as exc:
            raise ConfigError("bad V expression: %s" % exc) from exc
    else:
        raise ConfigError("unknown certificate kind %r" % cert_kind)

    n_checks = 0
    n_failures = 0
    for i, x0 in enumerate(x0s):
        try:
            run = run_closed_loop(plant, ctrl, partition, x0, horizon, icfg)
        except ControllerError as exc:
            print("run %d: controller error: %s" % (i, exc))
            n_checks += 1
            n_failures += 1
            continue
        cert = certify_decrease(run, V_provider)
        final = float(np.linalg.norm(run.final_state()))
        ok_norm = final <= final_norm and not run.escaped
        n_checks += len(cert.intervals) + 1
        n_failures += len(cert.failures) + (0 if ok_norm else 1)

        rows = _trajectory_rows(run, V_provider, W=W)
        traj_path = os.path.join(out_dir, "traj_%d.csv" % i)
        cert_path = os.path.join(out_dir, "cert_%d.csv" % i)
        _write_trajectory_csv(traj_path, rows, plant.dim_state, plant.dim_input, with_w=W is not None)
        _write_certificate_csv(cert_path, cert)
        if not quiet:
            print(
                "run %d: x0=%s final|x|=%s %s; %s; wrote %s, %s"
                % (
                    i,
                    np.round(x0, 6).tolist(),
                    _fmt(final),
                    "ok" if ok_norm else "ABOVE THRESHOLD",
                    cert.summary(),
                    traj_path,
                    cert_path,
                )
            )
            for line in cert.failures[:10]:
                print("   ", line)
    print("RESULT %s %d %d" % ("pass" if n_failures == 0 else "fail", n_checks, n_failures))
    return EXIT_OK if n_failures == 0 else EXIT_FAILED


# -- check-lie ------------------------------------------------------------------


def _grid_points(extent, count):
    axis = np.linspace(-extent, extent, count)
    for a in axis:
        for b in axis:
            if a == 0.0 and b == 0.0:
                continue
            yield np.array([a, b])


def cmd_check_lie(cfg, out_dir, seed, quiet):
    extent = cfg.get_float("grid", "extent", default=2.0)
    count = cfg.get_int("grid", "points", default=41)
    name = cfg.get("system", "registry")

    n_points = 0
    n_fail = 0
    if name in registry.AFFINE_BUILDERS:
        entry = registry.AFFINE_BUILDERS[name]()
        for p in _grid_points(extent, count):
            rp = entry.classify(p)
            rc = entry.classify_integrator_form(p)
            n_points += 1
            bad = rp.classification == FAIL or rc.classification == FAIL
            n_fail += 1 if bad else 0
            if not quiet or bad:
                wit = {k: round(v, 6) for k, v in rp.witnesses.items()}
                print(
                    "p=(%s, %s)  pointwise=%s  integrator=%s  %s"
                    % (_fmt(p[0]), _fmt(p[1]), rp.classification, rc.classification, wit)
                )
    else:
        kind, sys_obj = _build_system(cfg)
        if kind != "affine":
            raise ConfigError("pointwise checks need an affine system")
        v_text = cfg.get("lie", "V", required=True)
        try:
            V = ExprScalarField.from_text(v_text, sys_obj.dim_state)
        except ExprSyntaxError as exc:
            raise ConfigError("bad V expression: %s" % exc) from exc
        if abs(V(np.zeros(sys_obj.dim_state))) > 1e-12:
            raise ConfigError("V must vanish at the origin")
        pts = list(_grid_points(extent, count))
        if min(V(p) for p in pts) <= 0:
            raise ConfigError("V is not positive away from the origin on the grid")
        for p in pts:
            rp = check_prop1_point(sys_obj, V, p, n_max=2)
            n_points += 1
            n_fail += 1 if rp.classification == FAIL else 0
            if not quiet or rp.classification == FAIL:
                print("p=(%s, %s)  pointwise=%s" % (_fmt(p[0]), _fmt(p[1]), rp.classification))

    print("RESULT %s %d %d" % ("pass" if n_fail == 0 else "fail", n_points, n_fail))
    return EXIT_OK if n_fail == 0 else EXIT_FAILED


# -- check-patchwork -------------------------------------------------------------


def cmd_check_patchwork(cfg, out_dir, seed, quiet):
    samples = cfg.get_int("patchwork", "samples", default=10_000)
    radius = cfg.get_float("patchwork", "radius", default=2.0)
    try:
        W, sel = _build_patchwork(cfg, seed)
    except OffsetSelectionError as exc:
        print("offset selection failed at %s: %s" % (exc.point, exc))
        print("RESULT fail 1 1")
        return EXIT_FAILED
    if sel is not None and not quiet:
        print("offsets: %s (base %s, spread %s)" % (
            [_fmt(c) for c in sel.offsets], _fmt(sel.c0), _fmt(sel.delta)))
    report = verify_patchwork(W, radius, samples=samples, seed=seed)
    for line in report.lines():
        print(line)
    n_checks = len(report.checks)
    n_fail = sum(0 if c.passed else 1 for c in report.checks)
    print("RESULT %s %d %d" % ("pass" if n_fail == 0 else "fail", n_checks, n_fail))
    return EXIT_OK if n_fail == 0 else EXIT_FAILED


# -- entry point ------------------------------------------------------------------


COMMANDS = {
    "synthesize": cmd_synthesize,
    "simulate": cmd_simulate,
    "check-lie": cmd_check_lie,
    "check-patchwork": cmd_check_patchwork,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="sdstab",
        description="Sampled-data stabilization toolkit: synthesis, certified runs, pointwise checks",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="experiment config (INI)")
        p.add_argument("--out", default=".", help="output directory for CSV files")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--quiet", action="store_true", help="suppress per-point/per-interval detail")
    args = parser.parse_args(argv)

    try:
        cfg = Config.load(args.config)
        seed = args.seed if args.seed is not None else cfg.get_int("experiment", "seed", default=0)
        os.makedirs(args.out, exist_ok=True)
        kind = cfg.get("experiment", "kind", default=args.command)
        if kind != args.command:
            raise ConfigError(
                "config is for %r but the %r command was invoked" % (kind, args.command)
            )
        return COMMANDS[args.command](cfg, args.out, seed, args.quiet)
    except (ConfigError, ExprSyntaxError, ValueError) as exc:
        print("configuration error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure,) as exc:
        print("numerical failure: %s" % exc, file=sys.stderr)
        return EXIT_NUMERICAL
    except (NotStabilizableError, NoCertifiedStepError) as exc:
        print("verification failure: %s" % exc, file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
