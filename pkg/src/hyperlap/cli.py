"""Command-line driver: reproducible experiment runs from JSON configs.

    hyperlap <command> --config cfg.json [--out dir] [--seed N] [--threads n] [--svg]

Commands: spherical, ktilde, hessian, beams, tubes, hecke, decay.
Exit codes: 0 ok, 2 usage/domain, 3 resource, 4 accuracy-not-met.
Outputs are deterministic for a fixed config + seed (CSV with LF endings and
'.' decimals; JSON reports; optional SVG log-log plots without timestamps).
"""

import argparse
import csv
import json
import os
import sys
from fractions import Fraction

import numpy as np

from . import group_core as gc
from .errors import AccuracyError, DomainError, ResourceError

CONFIG_VERSION = 1


def _load_config(path, known_keys):
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DomainError(f"cannot read config: {exc}")
    if not isinstance(cfg, dict):
        raise DomainError("config must be an object")
    if cfg.get("version") != CONFIG_VERSION:
        raise DomainError(f"config version must be {CONFIG_VERSION}")
    unknown = set(cfg) - set(known_keys) - {"version"}
    if unknown:
        raise DomainError(f"unknown config keys: {sorted(unknown)}")
    return cfg


def _outdir(args):
    out = args.out or "hyperlap-out"
    os.makedirs(out, exist_ok=True)
    return out


def _write_csv(path, header, rows):
    with open(path, "w", newline="\n") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(row)


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _sample_rng(root_seed: int, index: int):
    return np.random.default_rng(np.random.SeedSequence(entropy=root_seed,
                                                        spawn_key=(index,)))


def _maybe_svg(args, path, xs, ys, fit, title, xlabel, ylabel):
    if not args.svg:
        return
    from .svg import scatter_with_fit

    scatter_with_fit(path, xs, ys, fit=fit, title=title, xlabel=xlabel,
                     ylabel=ylabel)


# ---------------------------------------------------------------------------
# commands


def cmd_spherical(args):
    from .fitting import dyadic_envelope, loglog_fit
    from .special_functions import spherical_h2, spherical_h3

    cfg = _load_config(args.config, {"st_min", "st_max", "n_samples", "t_max"})
    st_min = cfg.get("st_min", 1.0)
    st_max = cfg.get("st_max", 500.0)
    n = int(cfg.get("n_samples", 400))
    t_max = cfg.get("t_max", 2.0)
    rng = _sample_rng(args.seed, 0)
    out = _outdir(args)
    rows = []
    sts, v2, v3 = [], [], []
    for i in range(n):
        st = np.exp(rng.uniform(np.log(st_min), np.log(st_max)))
        t = rng.uniform(0.15 * t_max, t_max)
        s = st / t
        a2 = abs(spherical_h2(s, t))
        a3 = abs(spherical_h3(s, t))
        rows.append((f"{s:.8g}", f"{t:.8g}", f"{st:.8g}", f"{a2:.10e}", f"{a3:.10e}"))
        sts.append(st)
        v2.append(a2)
        v3.append(a3)
    _write_csv(os.path.join(out, "spherical_sweep.csv"),
               ["s", "t", "st", "abs_h2", "abs_h3"], rows)
    c2x, e2 = dyadic_envelope(np.array(sts), np.array(v2))
    c3x, e3 = dyadic_envelope(np.array(sts), np.array(v3))
    fit2 = loglog_fit(c2x, e2)
    fit3 = loglog_fit(c3x, e3)
    _write_json(os.path.join(out, "spherical_envelopes.json"),
                {"h2_envelope_fit": fit2.as_dict(), "h3_envelope_fit": fit3.as_dict(),
                 "st_range": [st_min, st_max]})
    _maybe_svg(args, os.path.join(out, "spherical_h2.svg"), c2x, e2, fit2,
               "plane spherical envelope", "st", "envelope")
    _maybe_svg(args, os.path.join(out, "spherical_h3.svg"), c3x, e3, fit3,
               "3-space spherical envelope", "st", "envelope")
    print(f"h2 envelope exponent {fit2.exponent:+.3f}  "
          f"h3 envelope exponent {fit3.exponent:+.3f}")
    return 0


def cmd_ktilde(args):
    from .fitting import loglog_fit
    from .oscillatory import verify_ktilde_regimes
    from .transforms import PWKernel

    cfg = _load_config(args.config, {"lams", "betas", "eps"})
    lams = cfg.get("lams", [100.0, 200.0, 400.0])
    betas = tuple(cfg.get("betas", [4.0, 16.0, 64.0]))
    eps = cfg.get("eps", 12.0)
    out = _outdir(args)
    report = {"lams": lams, "betas": list(betas), "eps": eps, "per_lam": {}}
    glob = []
    for lam in lams:
        ker = PWKernel(float(lam), eps=float(eps), t_support=2.3)
        rep = verify_ktilde_regimes(float(lam), betas=betas, kernel=ker)
        rows = [(f"{s:.8g}", f"{v.real:.10e}", f"{v.imag:.10e}", f"{abs(v):.10e}")
                for s, v in zip(rep["s_grid"], rep["curve"])]
        _write_csv(os.path.join(out, f"ktilde_lam{int(lam)}.csv"),
                   ["s", "re", "im", "abs"], rows)
        report["per_lam"][str(lam)] = {
            "global_sup": rep["global_sup"], "near_sup": rep["near_sup"],
            "far_sup": {str(b): v for b, v in rep["far_sup"].items()}}
        glob.append(rep["global_sup"])
    lam_fit = loglog_fit(lams, glob) if len(lams) >= 2 else None
    if lam_fit:
        report["global_sup_lam_slope"] = lam_fit.as_dict()
    beta_fits = {}
    for lam in lams:
        fars = [report["per_lam"][str(lam)]["far_sup"][str(b)] for b in betas]
        beta_fits[str(lam)] = loglog_fit(list(betas), fars).as_dict()
    report["far_sup_beta_slopes"] = beta_fits
    _write_json(os.path.join(out, "ktilde_regimes.json"), report)
    print(json.dumps({"lam_slope": report.get("global_sup_lam_slope", {}).get("exponent"),
                      "beta_slopes": {k: v["exponent"] for k, v in beta_fits.items()}}))
    return 0


def cmd_hessian(args):
    from .oscillatory import critical_point_residual, d_rho_matrix, hessian_F

    cfg = _load_config(args.config, {"rhos", "fd_step"})
    rhos = cfg.get("rhos", [0.0, 0.3, 0.6])
    if not rhos:
        raise DomainError("empty rho grid")
    step = cfg.get("fd_step", 1e-4)
    out = _outdir(args)
    report = []
    for rho in rhos:
        hess, det = hessian_F(float(rho), step=step)
        ref = d_rho_matrix(float(rho))
        resid, psi, theta = critical_point_residual(float(rho), step=step)
        report.append({
            "rho": rho,
            "det": det,
            "det_reference": 16.0 * (1.0 - rho * rho),
            "entry_max_error": float(np.max(np.abs(hess - ref))),
            "gradient_residual": resid,
            "psi": psi, "theta": theta,
        })
    _write_json(os.path.join(out, "hessian_report.json"), {"rows": report})
    for row in report:
        print(f"rho={row['rho']}: det={row['det']:.6f} "
              f"(ref {row['det_reference']:.6f}), entry err {row['entry_max_error']:.2e}")
    return 0


def cmd_beams(args):
    from .beams import (beam_decompose, beam_l1_l2, classify_beams,
                        max_l1_l2_ratio, random_band_spectral)
    from .transforms import get_constants

    cfg = _load_config(args.config, {"lam", "beta", "eps1", "n_phi", "deltas",
                                     "save_family"})
    lam = float(cfg.get("lam", 400.0))
    beta = float(cfg.get("beta", 2.0))
    eps1 = float(cfg.get("eps1", 0.05))
    n_phi = int(cfg.get("n_phi", 1))
    deltas = cfg.get("deltas", [1.0, 0.2, 0.05])
    c2, _ = get_constants()
    out = _outdir(args)
    rows = []
    summary = []
    for i in range(n_phi):
        rng = _sample_rng(args.seed, i)
        phi = random_band_spectral(lam, beta, rng)
        fam = beam_decompose(phi, lam, beta, eps1, c2)
        const = fam.square_sum_constant()
        ratios = beam_l1_l2(fam)
        for (m, n), r in sorted(ratios.items()):
            rows.append((i, m, n, f"{fam.beam_l2()[(m, n)]:.8e}", f"{r:.8e}"))
        entry = {"phi_index": i, "square_sum_constant": const,
                 "recon_residual": fam.recon_residual,
                 "max_l1_l2": max_l1_l2_ratio(fam), "classes": {}}
        for d in deltas:
            big, _small = classify_beams(fam, float(d))
            entry["classes"][str(d)] = len(big)
        summary.append(entry)
        if cfg.get("save_family") and i == 0:
            from .storage import save_beam_family

            save_beam_family(os.path.join(out, "family_0"), fam)
    _write_csv(os.path.join(out, "beam_norms.csv"),
               ["phi_index", "m", "n", "l2", "l1_over_l2"], rows)
    _write_json(os.path.join(out, "beam_summary.json"),
                {"lam": lam, "beta": beta, "eps1": eps1, "runs": summary})
    for e in summary:
        print(f"phi {e['phi_index']}: C={e['square_sum_constant']:.4f} "
              f"recon={e['recon_residual']:.2e} max_l1l2={e['max_l1_l2']:.4f}")
    return 0


def cmd_tubes(args):
    from .geometry_tubes import TubeSpec, build_beam_grid, count_tube_beams

    cfg = _load_config(args.config, {"lam", "beta", "eps1", "delta", "omega",
                                     "n_tubes", "t_half", "center_on_beams"})
    lam = float(cfg.get("lam", 400.0))
    beta = float(cfg.get("beta", 2.0))
    eps1 = float(cfg.get("eps1", 0.05))
    delta = float(cfg.get("delta", 0.1))
    omega = float(cfg.get("omega", 0.0))
    n_tubes = int(cfg.get("n_tubes", 200))
    t_half = float(cfg.get("t_half", 2.5))
    center = bool(cfg.get("center_on_beams", True))
    grid = build_beam_grid(lam, beta, eps1)
    bound = (1.0 + delta * grid.n1) * (1.0 + delta * grid.n2)
    out = _outdir(args)
    rows = []
    ratios = []
    for i in range(n_tubes):
        rng = _sample_rng(args.seed, i)
        if center and i % 2 == 0:
            m = int(rng.integers(0, grid.n1))
            n = int(rng.integers(0, grid.n2 + 1))
            base = grid.base_element(m, n) @ gc.random_element(rng, 0.05)
        else:
            base = gc.random_element(rng, 0.3)
        tube = TubeSpec(base, delta, t_half)
        cnt = count_tube_beams(tube, grid)
        ratio = cnt / bound
        ratios.append(ratio)
        rows.append((i, f"{lam:g}", f"{beta:g}", f"{eps1:g}", f"{delta:g}",
                     f"{omega:g}", cnt, f"{bound:.6f}", f"{ratio:.6f}"))
    _write_csv(os.path.join(out, "tube_counts.csv"),
               ["seed", "lam", "beta", "eps1", "delta", "omega", "count",
                "bound", "ratio"], rows)
    _write_json(os.path.join(out, "tube_summary.json"),
                {"lam": lam, "beta": beta, "delta": delta,
                 "bound": bound, "max_ratio": max(ratios),
                 "mean_ratio": float(np.mean(ratios))})
    print(f"max count/bound = {max(ratios):.4f} over {n_tubes} tubes")
    return 0


def cmd_hecke(args):
    from .hecke_amplifier import (EigenData, amplifier_norms, dichotomy_scan,
                                  product_table)

    cfg = _load_config(args.config, {"q_values", "products", "n_tau",
                                     "amplifier_qs", "regime"})
    q_values = cfg.get("q_values", [2, 3, 5, 7, 97])
    products = cfg.get("products", [[2, 1, 1], [3, 1, 1], [25, 1, 1]])
    n_tau = int(cfg.get("n_tau", 1000))
    out = _outdir(args)
    tables = [product_table(int(q), int(a), int(b)) for q, a, b in products]
    _write_json(os.path.join(out, "hecke_products.json"), {"tables": tables})
    n_checked = dichotomy_scan([int(q) for q in q_values], n_tau=n_tau)
    amps = cfg.get("amplifier_qs", [5, 7, 11, 13])
    regime = cfg.get("regime", "split")
    datas = [EigenData.from_tau1(int(q), Fraction(1, 2), regime) for q in amps]
    l1, l2sq, a_o = amplifier_norms(datas)
    _write_json(os.path.join(out, "hecke_report.json"),
                {"dichotomy_checks": n_checked,
                 "amplifier": {"l1": str(l1), "l2_sq": str(l2sq),
                               "a_O": str(a_o), "n_places": len(datas)}})
    print(f"dichotomy checks: {n_checked}; a_O = {a_o} over {len(datas)} places")
    return 0


def cmd_decay(args):
    from .fitting import loglog_fit
    from .oscillatory import (eval_J_rho, eval_pair_integral, kn_radial_split)
    from .transforms import PWKernel

    cfg = _load_config(args.config, {"mode", "r_values", "rho", "s_values",
                                     "lam", "beta", "eps0", "n_g", "betas"})
    mode = cfg.get("mode", "j_rho")
    out = _outdir(args)
    if mode == "j_rho":
        r_values = cfg.get("r_values", [100.0, 200.0, 400.0, 800.0])
        rho = float(cfg.get("rho", 0.0))
        rows = []
        mags = []
        for r in r_values:
            res = eval_J_rho(float(r), rho)
            rows.append((f"{r:g}", f"{rho:g}", f"{res.value.real:.10e}",
                         f"{res.value.imag:.10e}", f"{abs(res.value):.10e}",
                         f"{res.est_error:.3e}"))
            mags.append(abs(res.value))
        _write_csv(os.path.join(out, "j_rho.csv"),
                   ["r", "rho", "value_re", "value_im", "abs", "est_error"], rows)
        fit = loglog_fit(r_values, mags)
        _write_json(os.path.join(out, "j_rho_fit.json"), fit.as_dict())
        _maybe_svg(args, os.path.join(out, "j_rho.svg"), r_values, mags, fit,
                   "tube phase integral", "r", "|J|")
        print(f"J decay exponent {fit.exponent:+.3f} (R2 {fit.r2:.3f})")
        return 0
    if mode == "pair":
        s_values = cfg.get("s_values", [100.0, 200.0, 400.0, 800.0])
        beta = float(cfg.get("beta", 2.0))
        n_g = int(cfg.get("n_g", 3))
        rows = []
        fits = {}
        for i in range(n_g):
            rng = _sample_rng(args.seed, i)
            g = gc.random_element(rng, 0.5)
            mags = []
            for s in s_values:
                res = eval_pair_integral(float(s), float(s), float(s) + beta / 2.0, g)
                rows.append((i, f"{s:g}", f"{res.value.real:.10e}",
                             f"{res.value.imag:.10e}", f"{abs(res.value):.10e}",
                             f"{res.est_error:.3e}"))
                mags.append(max(abs(res.value), 1e-300))
            fits[str(i)] = loglog_fit(s_values, mags).as_dict()
        _write_csv(os.path.join(out, "pair_integrals.csv"),
                   ["g_index", "s", "value_re", "value_im", "abs", "est_error"],
                   rows)
        _write_json(os.path.join(out, "pair_fits.json"), fits)
        print(json.dumps({k: v["exponent"] for k, v in fits.items()}))
        return 0
    if mode == "kn_split":
        lam = float(cfg.get("lam", 400.0))
        eps0 = float(cfg.get("eps0", 0.05))
        betas = cfg.get("betas", [4.0, 16.0, 64.0])
        ker = PWKernel(lam, eps=1.0)
        s_far = np.linspace(lam / 2.0, 1.5 * lam, 120)
        sups = []
        rows = []
        for beta in betas:
            split = kn_radial_split(lam, float(beta), eps0, kernel=ker)
            k1 = np.abs(split.k1_hat(s_far))
            sups.append(float(np.max(k1)))
            rows.append((f"{beta:g}", f"{sups[-1]:.10e}"))
        fit = loglog_fit(betas, sups)
        _write_csv(os.path.join(out, "kn_split.csv"), ["beta", "far_sup_k1"], rows)
        _write_json(os.path.join(out, "kn_split_fit.json"), fit.as_dict())
        _maybe_svg(args, os.path.join(out, "kn_split.svg"), betas, sups, fit,
                   "radial split far-regime sup", "beta", "sup |k1_hat|")
        print(f"k1_hat beta-slope {fit.exponent:+.3f}")
        return 0
    raise DomainError(f"unknown decay mode {mode!r}")


COMMANDS = {
    "spherical": cmd_spherical,
    "ktilde": cmd_ktilde,
    "hessian": cmd_hessian,
    "beams": cmd_beams,
    "tubes": cmd_tubes,
    "hecke": cmd_hecke,
    "decay": cmd_decay,
}


def build_parser():
    p = argparse.ArgumentParser(prog="hyperlap", description=__doc__)
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="JSON config path")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--seed", type=int, default=0, help="root seed")
    p.add_argument("--threads", type=int, default=0,
                   help="worker threads (0 = hardware count); results do not "
                        "depend on this")
    p.add_argument("--svg", action="store_true", help="emit SVG plots")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.threads:
        os.environ.setdefault("NUMBA_NUM_THREADS", str(args.threads))
    try:
        return COMMANDS[args.command](args)
    except DomainError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except ResourceError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return 3
    except AccuracyError as exc:
        print(f"accuracy error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
