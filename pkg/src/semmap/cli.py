"""Command-line entry point: ``semmap <command> ...``.

Exit status is 0 on success, 1 when evaluation fails and 2 on unreadable or
malformed input (including bad flags).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from semmap import formats
from semmap.ablation import AblationConfig, run_ablation
from semmap.errors import EvaluationError, FormatError
from semmap.instances import CONFIDENCE_MODES, ClusterParams, extract_object_map
from semmap.quality import error_breakdown_curves, map3d, omq, pr_curve
from semmap.trajectory import evaluate_trajectory
from semmap.vocabulary import BACKGROUND_NAME

EXIT_OK, EXIT_EVAL, EXIT_IO = 0, 1, 2


def _emit(rows, fmt, out=None):
    """Print ``(name, value)`` rows as an aligned table, JSON or CSV."""
    out = sys.stdout if out is None else out
    if fmt == "json":
        out.write(json.dumps(dict(rows), indent=2, sort_keys=True) + "\n")
    elif fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["metric", "value"])
        w.writerows((k, "" if v is None else v) for k, v in rows)
        out.write(buf.getvalue())
    else:
        width = max((len(k) for k, _ in rows), default=0)
        for k, v in rows:
            val = f"{v:.4f}" if isinstance(v, float) else str(v)
            out.write(f"{k:<{width}}  {val}\n")


def _fmt(args):
    if args.json and args.csv:
        raise FormatError("choose at most one of --json and --csv")
    return "json" if args.json else "csv" if args.csv else "text"


def cmd_evaluate(args):
    est, gt = formats.load_object_map(args.est), formats.load_object_map(args.gt)
    fmt = _fmt(args)
    want_all = not (args.omq or args.map3d or args.breakdown)
    rows = []
    if args.map3d or want_all:
        s = map3d(est, gt)
        rows += [("mAP3D", s.map3d), ("mAP25", s.map25), ("mAP50", s.map50)]
    if args.omq or want_all:
        r = omq(est, gt)
        rows += [("OMQ", r.omq), ("mPOQ", r.mPOQ), ("mLQ", r.mLQ), ("mSQ", r.mSQ),
                 ("mFPQ", r.mFPQ), ("n_tp", r.n_tp), ("n_fn", r.n_fn), ("n_fp", r.n_fp)]
    if args.breakdown:
        rows += [(f"AP[{label}]", c.ap) for label, c in error_breakdown_curves(est, gt).items()]
    _emit(rows, fmt)


def cmd_extract(args):
    cloud = formats.load_labeled_cloud(args.cloud)
    params = ClusterParams(args.link, args.min_points)
    m = extract_object_map(cloud, params, confidence_mode=args.confidence_mode)
    if args.out is None:
        sys.stdout.write(json.dumps(formats.object_map_to_dict(m), indent=2, sort_keys=True) + "\n")
    else:
        formats.save_object_map(m, args.out)
        print(f"{len(m)} objects -> {args.out}")


def cmd_traj(args):
    est, gt = formats.load_trajectory(args.est), formats.load_trajectory(args.gt)
    e = evaluate_trajectory(est, gt, max_dt=args.max_dt, align=not args.no_align, delta=args.delta)
    rows = [("ATE_rmse_m", e.ate_rmse), ("RPE_trans_rmse_m", e.rpe_trans_rmse),
            ("RPE_rot_rmse_deg", e.rpe_rot_rmse), ("length_m", e.trajectory_length)]
    _emit(rows, _fmt(args))


def cmd_ablate(args):
    config = formats.load_config(args.config) if args.config else AblationConfig()
    config.root_seed = args.seed
    report = run_ablation(config)
    path = formats.save_report(report, args.out)
    header = ["case", "rmAP", "rAP25", "rAP50", "rOMQ"]
    print("  ".join(f"{h:>6}" for h in header))
    for case, ratios in report.mean_ratios.items():
        vals = ["   n/a" if ratios[k] is None else f"{ratios[k]:6.3f}" for k in header[1:]]
        print(f"{case:>6}  " + "  ".join(vals))
    print(f"report -> {path}")


def cmd_curves(args):
    est, gt = formats.load_object_map(args.est), formats.load_object_map(args.gt)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    n = 0
    for label, c in error_breakdown_curves(est, gt).items():
        formats.save_curve_csv(c, out / f"breakdown_{label}.csv")
        n += 1
    names = [BACKGROUND_NAME] + list(gt.class_vocabulary)
    classes = sorted(set(gt.class_ids.tolist()) | set(est.class_ids.tolist()))
    for cid in classes:
        for thr in (0.25, 0.50, 0.75):
            c = pr_curve(est, gt, cid, thr)
            if c is not None:
                name = names[cid].replace(" ", "_")
                formats.save_curve_csv(c, out / f"pr_{name}_iou{round(thr * 100):02d}.csv")
                n += 1
    print(f"{n} curves -> {out}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="semmap", description="Evaluate 3D semantic object maps.")
    sub = p.add_subparsers(dest="command", required=True)

    def outputs(sp):
        sp.add_argument("--json", action="store_true", help="print JSON instead of a table")
        sp.add_argument("--csv", action="store_true", help="print CSV instead of a table")

    e = sub.add_parser("evaluate", help="score an estimated map against ground truth")
    e.add_argument("--est", required=True, help="estimated map JSON")
    e.add_argument("--gt", required=True, help="ground-truth map JSON")
    e.add_argument("--omq", action="store_true", help="object map quality and sub-metrics")
    e.add_argument("--map3d", action="store_true", help="mAP over 3D IoU thresholds")
    e.add_argument("--breakdown", action="store_true", help="AP of each error-breakdown curve")
    outputs(e)
    e.set_defaults(func=cmd_evaluate)

    x = sub.add_parser("extract", help="cluster a labelled PLY cloud into a cuboid map")
    x.add_argument("--cloud", required=True, help="PLY with x, y, z, class_id")
    x.add_argument("--link", type=float, default=ClusterParams.max_link_distance,
                   help="single-linkage distance in meters (default %(default)s)")
    x.add_argument("--min-points", type=int, default=ClusterParams.min_cluster_points,
                   help="smallest cluster kept (default %(default)s)")
    x.add_argument("--confidence-mode", choices=CONFIDENCE_MODES, default="unit")
    x.add_argument("--out", help="output map JSON (default: stdout)")
    x.set_defaults(func=cmd_extract)

    t = sub.add_parser("traj", help="ATE and RPE of a TUM trajectory")
    t.add_argument("--est", required=True)
    t.add_argument("--gt", required=True)
    t.add_argument("--no-align", action="store_true", help="skip rigid alignment before ATE")
    t.add_argument("--delta", type=int, default=1, help="RPE frame offset (default %(default)s)")
    t.add_argument("--max-dt", type=float, default=0.02,
                   help="association tolerance in seconds (default %(default)s)")
    outputs(t)
    t.set_defaults(func=cmd_traj)

    a = sub.add_parser("ablate", help="run Cases I-IV on synthetic scenes")
    a.add_argument("--config", help="ablation config JSON (default: built-in defaults)")
    a.add_argument("--out", required=True, help="output directory")
    a.add_argument("--seed", type=int, required=True, help="root seed")
    a.set_defaults(func=cmd_ablate)

    c = sub.add_parser("curves", help="write PR and breakdown curves as CSV")
    c.add_argument("--est", required=True)
    c.add_argument("--gt", required=True)
    c.add_argument("--out", required=True, help="output directory")
    c.set_defaults(func=cmd_curves)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (FormatError, OSError) as exc:
        print(f"semmap: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (EvaluationError, ValueError) as exc:
        print(f"semmap: error: {exc}", file=sys.stderr)
        return EXIT_EVAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
