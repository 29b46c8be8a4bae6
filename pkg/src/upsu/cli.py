"""Command line entry point: ``upsu <command> [options]``.

Exit status is 0 on success, 2 for configuration or input errors and 3
when a protocol session is aborted.
"""

import argparse
import csv
import dataclasses
import json
import logging
import sys
import time

import mpmath

from . import attack, net
from .errors import CapacityExceeded, ConfigError, ParamsTooSmall, ProtocolAbort, UpsuError
from .field import DEFAULT_PRIME, PrimeField
from .he.base import KeyPair, PublicKey, SecretKey
from .protocol import ProtocolParams, run_local
from .rng import Csprng

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_ABORT = 3

KEYFILE_SCHEMA = 1
REPORT_SCHEMA = 1
LEAK_COLUMNS = ["n", "k", "p_analytic", "p_empirical", "trials", "seed", "log2_p_analytic", "log10_complement"]
BENCH_COLUMNS = [
    "n", "m", "protocol", "backend", "max_depth", "receiver_ops", "sender_ops",
    "receiver_bytes", "sender_bytes", "comm_bytes", "seconds",
]


# ---------------------------------------------------------------- inputs


def read_elements(path, p):
    """One decimal or 0x-prefixed hex integer per line; blank lines and ``#`` comments are skipped."""
    out = []
    first = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            try:
                x = int(text, 16) if text.lower().startswith("0x") else int(text, 10)
            except ValueError:
                raise ConfigError(f"{path}:{lineno}: not an integer: {text!r}") from None
            if not 0 <= x < p:
                raise ConfigError(f"{path}:{lineno}: {x} is outside [0, {p})")
            if x in first:
                raise ConfigError(f"{path}:{lineno}: duplicate of line {first[x]}")
            first[x] = lineno
            out.append(x)
    return out


def write_elements(path, elements):
    data = "".join(f"{x}\n" for x in sorted(elements))
    if path in (None, "-"):
        sys.stdout.write(data)
    else:
        with open(path, "w") as fh:
            fh.write(data)


def _int_to_json(v):
    return hex(int(v))


def save_keypair(path, role, kp):
    doc = {
        "schema": KEYFILE_SCHEMA,
        "role": role,
        "scheme": kp.public.scheme,
        "tag": kp.public.tag.hex(),
        "public": {k: _int_to_json(v) for k, v in kp.public.params.items()},
        "secret": {k: _int_to_json(v) for k, v in kp.secret.params.items()},
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)


def load_keypair(path, role):
    import gmpy2

    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("schema") != KEYFILE_SCHEMA or doc.get("role") != role:
        raise ConfigError(f"{path} is not a {role} key file")
    tag = bytes.fromhex(doc["tag"])
    conv = gmpy2.mpz if doc["scheme"] == "paillier" else int
    pub = {k: conv(int(v, 16)) for k, v in doc["public"].items()}
    sec = {k: conv(int(v, 16)) for k, v in doc["secret"].items()}
    return KeyPair(PublicKey(doc["scheme"], tag, pub), SecretKey(doc["scheme"], tag, sec))


_KEY_SCHEMES = {("receiver", "transparent"): "transparent-lhe", ("receiver", "paillier"): "paillier"}


def load_role_keys(path, role, params):
    if not path:
        return None
    kp = load_keypair(path, role)
    want = _KEY_SCHEMES.get((role, params.backend), "transparent-fhe")
    if kp.public.scheme != want:
        raise ConfigError(f"{path} holds {kp.public.scheme} keys, this run needs {want}")
    return kp


# ---------------------------------------------------------------- params


def _pow2(text):
    v = int(text)
    if v < 1 or v & (v - 1):
        raise argparse.ArgumentTypeError(f"{text} is not a power of two")
    return v


def params_from_args(args):
    try:
        field = PrimeField(args.prime)
    except (ValueError, UpsuError) as exc:
        raise ConfigError(f"unusable prime {args.prime}: {exc}") from exc
    return ProtocolParams(
        protocol=args.protocol,
        backend=args.backend,
        field=field,
        sender_capacity=args.capacity,
        receiver_capacity=args.receiver_capacity,
        slots=args.slots,
        paillier_bits=args.paillier_bits,
        use_hint=not args.no_hint,
    )


def _add_protocol_options(p):
    g = p.add_argument_group("protocol parameters")
    g.add_argument("--protocol", type=int, choices=(1, 2, 3), default=1)
    g.add_argument("--backend", choices=("transparent", "paillier"), default="transparent")
    g.add_argument("--capacity", type=_pow2, default=32, help="public bound on the sender set size")
    g.add_argument("--receiver-capacity", type=_pow2, default=None)
    g.add_argument("--prime", type=int, default=DEFAULT_PRIME)
    g.add_argument("--slots", type=int, default=1024)
    g.add_argument("--paillier-bits", type=int, default=None)
    g.add_argument("--no-hint", action="store_true", help="do not send the inverse hint (P2/P3)")


def _rng(seed, label):
    return Csprng(None if seed is None else (seed, label))


# ---------------------------------------------------------------- commands


def cmd_keygen(args):
    params = params_from_args(args)
    rng = _rng(args.seed, "keygen")
    scheme = params.lhe_scheme() if args.role == "receiver" else params.fhe_scheme()
    kp = scheme.keygen(rng)
    save_keypair(args.out, args.role, kp)
    print(f"wrote {args.role} {kp.public.scheme} key pair to {args.out}")
    return EXIT_OK


def _metrics_table(m):
    rows = [
        ("protocol", m.protocol),
        ("backend", m.backend),
        ("n", m.n),
        ("m", m.m),
        ("capacity", m.capacity),
        ("max_depth", m.max_depth),
        ("receiver_ops", m.receiver_ops),
        ("sender_ops", m.sender_ops),
    ]
    rows += [(f"bytes_{k}", v) for k, v in m.bytes.items()]
    rows += [("comm_bytes", m.comm_bytes)]
    w = max(len(k) for k, _ in rows)
    return "\n".join(f"{k:<{w}}  {v}" for k, v in rows)


def cmd_run(args):
    params = params_from_args(args)
    p = params.field.p
    X = read_elements(args.receiver_set, p)
    Y = read_elements(args.sender_set, p)
    lhe = load_role_keys(args.receiver_keys, "receiver", params)
    fhe = load_role_keys(args.sender_keys, "sender", params)
    t0 = time.perf_counter()
    union, metrics = run_local(X, Y, params, seed=args.seed, lhe_keys=lhe, fhe_keys=fhe)
    elapsed = time.perf_counter() - t0
    if args.output:
        write_elements(args.output, union)
    if args.json:
        doc = {"schema": REPORT_SCHEMA, "union": sorted(union), "seconds": elapsed, "metrics": metrics.as_dict()}
        print(json.dumps(doc, sort_keys=True))
    else:
        if not args.output:
            write_elements("-", union)
        print(_metrics_table(metrics), file=sys.stderr if not args.output else sys.stdout)
    return EXIT_OK


def cmd_receiver(args):
    params = params_from_args(args)
    X = read_elements(args.set, params.field.p)
    keys = load_role_keys(args.keys, "receiver", params)
    rng = _rng(args.seed, "receiver")

    def report(res):
        if res.ok:
            if args.output:
                write_elements(args.output, res.union)
            if args.json:
                print(json.dumps({"schema": REPORT_SCHEMA, "status": "ok", "union": sorted(res.union), "bytes": res.sent}))
            elif not args.output:
                write_elements("-", res.union)
        else:
            print(f"session aborted: {res.error}", file=sys.stderr)

    if args.persist:
        results = net.serve_receiver(
            args.listen, X, params, rng, keys, args.timeout, persist=True, max_sessions=args.sessions,
            on_session=report,
        )
        return EXIT_OK if all(r.ok for r in results) else EXIT_ABORT
    res = net.serve_receiver(args.listen, X, params, rng, keys, args.timeout)
    report(res)
    return EXIT_OK if res.ok else EXIT_ABORT


def cmd_sender(args):
    params = params_from_args(args)
    Y = read_elements(args.set, params.field.p)
    keys = load_role_keys(args.keys, "sender", params)
    res = net.run_sender(args.connect, Y, params, _rng(args.seed, "sender"), keys, args.timeout)
    if args.json:
        print(json.dumps({"schema": REPORT_SCHEMA, "status": res.status, "error": res.error, "bytes": res.sent}))
    elif res.ok:
        print("status: ok")
    else:
        print(f"status: aborted ({res.error})", file=sys.stderr)
    return EXIT_OK if res.ok else EXIT_ABORT


def _fmt(x, digits=12):
    return mpmath.nstr(x, digits, min_fixed=-4, max_fixed=4)


def cmd_leak_prob(args):
    if args.k is None and args.m is None:
        raise ConfigError("give --m (bins default to m + ceil(log2 m)) or --k")
    rows = []
    for n in args.n:
        if n < 4:
            raise ConfigError(f"n = {n}: a leak needs at least four elements")
        k = args.k if args.k is not None else attack.default_bins(args.m)
        if k < 3:
            raise ConfigError(f"k = {k}: need at least three bins")
        lp = attack.leak_probability(n, k)
        emp = ""
        if args.trials:
            emp = repr(attack.estimate_leak_probability(n, k, args.trials, args.seed).frequency)
        rows.append(
            {
                "n": n,
                "k": k,
                "p_analytic": _fmt(lp.probability),
                "p_empirical": emp,
                "trials": args.trials or 0,
                "seed": args.seed,
                "log2_p_analytic": _fmt(lp.log2_probability, 8),
                "log10_complement": _fmt(lp.log10_complement, 10),
            }
        )
    if args.json:
        print(json.dumps({"schema": REPORT_SCHEMA, "rows": rows}))
    else:
        w = csv.DictWriter(sys.stdout, LEAK_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return EXIT_OK


def cmd_attack(args):
    if args.k < 1:
        raise ConfigError("need at least one bin")
    scheme = attack.HashScheme(args.k, seed=args.seed)
    res = attack.attack_until_leak(range(args.n), scheme, pool=range(args.n, 1 << 62))
    w = res.witness
    doc = {
        "schema": REPORT_SCHEMA,
        "k": args.k,
        "n": args.n,
        "seed": args.seed,
        "additions": len(res.additions),
        "bound": attack.attack_bound(args.k, args.n),
        "witness_elements": list(w.elements),
        "witness_bins": list(w.bins),
        "verified": w.verify(scheme) and attack.detect_leak(res.table) == w,
    }
    if args.json:
        print(json.dumps(doc))
    else:
        for key in ("k", "n", "seed", "additions", "bound"):
            print(f"{key}: {doc[key]}")
        print(f"witness: elements {w.elements} in bins {w.bins}")
        print(f"verified: {doc['verified']}")
    return EXIT_OK


def cmd_bench(args):
    base = params_from_args(args)
    rng = Csprng(args.seed)
    p = base.field.p
    m = args.m if args.m is not None else base.sender_capacity
    lhe = base.lhe_scheme().keygen(rng.spawn("lhe"))
    fhe = base.fhe_scheme().keygen(rng.spawn("fhe"))
    Y = list(dict.fromkeys(int(v) for v in rng.spawn("Y").field_elements(p - 1, m)))
    rows = []
    for e in args.sweep:
        n = 1 << e
        X = list(dict.fromkeys(int(v) for v in rng.spawn(("X", n)).field_elements(p - 1, n)))
        params = dataclasses.replace(base, receiver_capacity=None)
        t0 = time.perf_counter()
        _, met = run_local(X, Y, params, seed=(args.seed, n), lhe_keys=lhe, fhe_keys=fhe)
        rows.append(
            {
                "n": met.n, "m": met.m, "protocol": met.protocol, "backend": met.backend,
                "max_depth": met.max_depth, "receiver_ops": met.receiver_ops, "sender_ops": met.sender_ops,
                "receiver_bytes": met.receiver_bytes, "sender_bytes": met.sender_bytes,
                "comm_bytes": met.comm_bytes, "seconds": round(time.perf_counter() - t0, 4),
            }
        )
    if args.json:
        print(json.dumps({"schema": REPORT_SCHEMA, "rows": rows}))
    else:
        w = csv.DictWriter(sys.stdout, BENCH_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return EXIT_OK


def _sweep(text):
    lo, sep, hi = text.partition("..")
    try:
        return list(range(int(lo), int(hi) + 1)) if sep else [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad sweep {text!r}; use 6..12 or 6,8,10") from None


def build_parser():
    ap = argparse.ArgumentParser(prog="upsu", description="Unbalanced private set union toolkit.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keygen", help="generate a key pair for one role")
    _add_protocol_options(p)
    p.add_argument("--role", choices=("receiver", "sender"), required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", default=None)
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("run", help="run both roles in-process and report metrics")
    _add_protocol_options(p)
    p.add_argument("--receiver-set", "--set", dest="receiver_set", required=True)
    p.add_argument("--sender-set", required=True)
    p.add_argument("--receiver-keys")
    p.add_argument("--sender-keys")
    p.add_argument("--seed", default=None)
    p.add_argument("--output", "-o")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_run)

    for name, func in (("receiver", cmd_receiver), ("sender", cmd_sender)):
        p = sub.add_parser(name, help=f"run the {name} over TCP")
        _add_protocol_options(p)
        p.add_argument("--set", required=True)
        p.add_argument("--keys")
        p.add_argument("--seed", default=None)
        p.add_argument("--timeout", type=float, default=None, help=f"seconds (default ${net.TIMEOUT_ENV} or 60)")
        p.add_argument("--json", action="store_true")
        if name == "receiver":
            p.add_argument("--listen", required=True, metavar="HOST:PORT")
            p.add_argument("--output", "-o")
            p.add_argument("--persist", action="store_true", help="keep serving sessions")
            p.add_argument("--sessions", type=int, default=None, help="stop after this many sessions")
        else:
            p.add_argument("--connect", required=True, metavar="HOST:PORT")
        p.set_defaults(func=func)

    p = sub.add_parser("leak-prob", help="probability of a partitioning leak (CSV)")
    p.add_argument("--n", type=int, nargs="+", required=True)
    p.add_argument("--m", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--trials", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_leak_prob)

    p = sub.add_parser("attack", help="add elements until a leak witness appears")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("bench", help="metrics across receiver set sizes (CSV)")
    _add_protocol_options(p)
    p.add_argument("--sweep", type=_sweep, default=list(range(6, 13)), help="log2 n values, e.g. 6..12")
    p.add_argument("--m", type=int, default=None, help="sender set size (default: capacity)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, CapacityExceeded, ParamsTooSmall, FileNotFoundError, PermissionError, IsADirectoryError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ProtocolAbort, OSError) as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except UpsuError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
