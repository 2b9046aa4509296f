"""
topolab command line tool.

Every command prints a certificate envelope (JSON by default) that
``topolab verify`` can replay later:

    topolab witness no-smog-chain --radius 1/10
    topolab non0 construct --instance gamma1 --radius 1 --depth 10 -o gamma1.json
    topolab non0 verify gamma1.json --tolerance 1/1000
    topolab finite report --group z4.json --base "0,2;0"
    topolab abelian prufer --orders 6,4,9
"""

import argparse
import logging
import sys

import yaml

from topolab import __version__
from topolab.envelope import (CertificateEnvelope, default_premise_inputs, dump, emit,
                              load_document, verify_envelope)
from topolab.errors import SchemaError, TopolabError, UsageError
from topolab.exact_core import FinSeq, TailSeq, as_rational, format_rational, seq_from_json, seq_to_json
from topolab.finite_lab import FiniteGroup, cyclic_group
from topolab.property_witnesses import Claim
from topolab.sequence_spaces import SubgroupDescriptor, SubgroupTag, SpaceKind
from topolab.subsum_engine import INSTANCES

# claim -> the flags its inputs are read from
CLAIM_INPUTS = {
    Claim.SMOG_SEPARATOR: ("a", "space"),
    Claim.UNBOUNDED_MULTIPLE: ("a", "space", "bound"),
    Claim.NO_SMOG_CHAIN: ("radius",),
    Claim.NOT_TA_SUBGROUP: ("space",),
    Claim.TD_SEPARATOR: ("a",),
    Claim.Q_TA: ("q", "eps"),
    Claim.OPLUS_SMOG_SEPARATOR: ("a",),
    Claim.OPLUS_MOD_S_INDEX: ("a",),
}

# rejected embeddings are precondition failures, everything else a verification failure
KERNEL_COMMANDS = {"finite embed", "abelian quotient"}


class ArgumentParser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"Error: {message}", file=sys.stderr)
        sys.exit(UsageError.exit_code)


def parse_seq(text):
    """
    Read a sequence argument.

    Examples:
    - "1:1/2,3:-1" -> FinSeq with a(1) = 1/2, a(3) = -1
    - "" -> the zero FinSeq
    - "0,1/2|1/3" -> TailSeq (0, 1/2, 1/3, 1/3, ...)
    - '{"support": {"1": "1/2"}}' -> JSON form
    """
    text = text.strip()
    if text.startswith("{"):
        return seq_from_json(yaml.safe_load(text))
    if "|" in text:
        prefix, tail = text.split("|", 1)
        values = [as_rational(part.strip()) for part in prefix.split(",") if part.strip()]
        return TailSeq(tuple(values), as_rational(tail.strip()))
    entries = []
    for part in text.split(","):
        if not part.strip():
            continue
        index, sep, value = part.partition(":")
        if not sep:
            raise UsageError(f"Sequence entry '{part}' must look like index:value")
        try:
            entries.append((int(index), as_rational(value.strip())))
        except ValueError:
            raise UsageError(f"Bad sequence index in '{part}'") from None
    return FinSeq(tuple(entries))


def parse_sets(text):
    """Read "0,2;0" as [[0, 2], [0]]."""
    try:
        return [sorted({int(x) for x in part.split(",") if x.strip()}) for part in text.split(";")]
    except ValueError:
        raise UsageError(f"Sets must be ';'-separated lists of integers, got '{text}'") from None


def parse_ints(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"Expected comma separated integers, got '{text}'") from None


def parse_descriptor(text):
    """COORD_ZERO:3, COORD_INT:1 or BALL_GENERATED:GAMMA0:1/10"""
    tag, _, rest = text.partition(":")
    try:
        tag = SubgroupTag(tag.upper())
    except ValueError:
        raise UsageError(f"Unknown subgroup tag in '{text}'") from None
    if tag is SubgroupTag.BALL_GENERATED:
        space, _, radius = rest.partition(":")
        return SubgroupDescriptor.ball_generated(SpaceKind.parse(space), radius)
    try:
        return SubgroupDescriptor(tag, n=int(rest))
    except ValueError:
        raise UsageError(f"Subgroup '{text}' needs a coordinate index") from None


def load_group(args):
    if getattr(args, "cyclic", None):
        return cyclic_group(args.cyclic)
    if not getattr(args, "group", None):
        raise UsageError("A group is required (--group FILE or --cyclic N)")
    return FiniteGroup.from_json(load_document(args.group))


def _rational_text(text):
    return format_rational(as_rational(text))


# ----------------------------
# Handlers
# ----------------------------

def seq_inputs(args):
    inputs = {"a": seq_to_json(parse_seq(args.a))}
    if getattr(args, "b", None) is not None:
        inputs["b"] = seq_to_json(parse_seq(args.b))
    for key in ("norm", "lattice", "space", "modulo"):
        if getattr(args, key, None) is not None:
            inputs[key] = getattr(args, key)
    if getattr(args, "radius", None) is not None:
        inputs["radius"] = _rational_text(args.radius)
    if getattr(args, "subgroup", None) is not None:
        inputs["subgroup"] = parse_descriptor(args.subgroup).to_json()
    return inputs


def witness_inputs(args):
    claim = Claim(args.claim)
    inputs = {}
    for key in CLAIM_INPUTS[claim]:
        value = getattr(args, key)
        if value is None:
            raise UsageError(f"{claim.value} needs --{key}")
        if key == "a":
            value = seq_to_json(parse_seq(value))
        elif key in ("bound", "radius", "q", "eps"):
            value = _rational_text(value)
        inputs[key] = value
    return {"claim": claim.value, "inputs": inputs}


def non0_inputs(args):
    radius = _rational_text(args.radius)
    inputs = {"instance": args.instance, "radius": radius,
              "premises": default_premise_inputs(radius)}
    if args.command == "construct":
        inputs["depth"] = args.depth
        inputs["partial"] = args.partial
    return inputs


def finite_inputs(args):
    if args.command == "factorize":
        if args.cyclic_factors:
            factors = [cyclic_group(n) for n in parse_ints(args.cyclic_factors)]
        else:
            factors = [FiniteGroup.from_json(load_document(path)) for path in args.factor or []]
        U = {}
        for item in args.neighborhood or []:
            index, sep, elements = item.partition("=")
            if not sep or not index.strip().isdigit():
                raise UsageError(f"Neighborhood '{item}' must look like index=elements")
            U[str(int(index))] = parse_ints(elements)
        return {"factors": [G.to_json() for G in factors], "J": parse_ints(args.indices),
                "U": U, "g": parse_ints(args.element)}
    inputs = {"group": load_group(args).to_json()}
    if args.command in ("report", "embed"):
        inputs["base"] = parse_sets(args.base)
    elif args.command == "metric":
        inputs.update(chain=parse_sets(args.chain), x=args.x, y=args.y)
    elif args.command == "extend":
        inputs.update(N=parse_ints(args.normal), U=parse_ints(args.neighborhood_set))
    return inputs


def abelian_inputs(args):
    if args.command == "prufer":
        return {"orders": parse_ints(args.orders)}
    inputs = {"group": load_group(args).to_json()}
    if args.command == "quotient":
        inputs["base"] = parse_sets(args.base)
    return inputs


INPUT_BUILDERS = {
    "seq": seq_inputs,
    "witness": witness_inputs,
    "non0": non0_inputs,
    "finite": finite_inputs,
    "abelian": abelian_inputs,
}


def write_output(text, args):
    if args.output:
        with open(args.output, "w", encoding="utf-8") as f:
            f.write(text + "\n")
    else:
        print(text)


def run_emitting(args):
    name = args.group_name if args.group_name == "witness" else f"{args.group_name} {args.command}"
    inputs = INPUT_BUILDERS[args.group_name](args)
    env = emit(name, inputs)
    write_output(dump(env.to_json(), args.format), args)
    if env.verified:
        return 0
    if name in KERNEL_COMMANDS:
        print(f"Error: embedding has nontrivial kernel {env.payload['kernel']}", file=sys.stderr)
        return 2
    print(f"Error: {name} produced an unverified payload", file=sys.stderr)
    return 3


def run_verify(args, required_command=None):
    env = CertificateEnvelope.from_json(load_document(args.file))
    if required_command and env.command != required_command:
        raise SchemaError(f"Expected a '{required_command}' certificate, got '{env.command}'")
    tolerance = as_rational(args.tolerance) if getattr(args, "tolerance", None) else None
    result = verify_envelope(env, tolerance=tolerance)
    write_output(dump({"command": env.command, "ok": result.ok, "failure": result.failure,
                       "detail": result.detail}, args.format), args)
    if not result.ok:
        print(f"Error: verification failed at '{result.failure}': {result.detail}", file=sys.stderr)
        return 3
    return 0


# ----------------------------
# Parser
# ----------------------------

def _common():
    common = ArgumentParser(add_help=False)
    common.add_argument("-o", "--output", help="Optional output file path. Defaults to <stdout>")
    common.add_argument("--format", choices=["json", "yaml"], default="json",
                        help="Output format (default: json)")
    common.add_argument("--log-level", default="WARNING",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
                        help="Logging level on <stderr> (default: WARNING)")
    return common


def build_parser():
    common = _common()
    parser = ArgumentParser(prog="topolab",
                            description="Decide and certify properties of topological groups")
    parser.add_argument("-v", "--version", action="version", version=f"%(prog)s {__version__}")
    groups = parser.add_subparsers(dest="group_name", required=True, metavar="COMMAND")

    # seq
    seq = groups.add_parser("seq", help="Exact sequence group operations")
    seq_cmds = seq.add_subparsers(dest="command", required=True)
    for name, with_b in (("add", True), ("norm", False), ("member", False), ("equiv", True),
                         ("space-member", False), ("dist", True), ("subgroup-member", False),
                         ("coset-ball", False)):
        sub = seq_cmds.add_parser(name, parents=[common])
        sub.add_argument("a", help="Sequence: 'n:q,...', 'p0,p1|tail' or JSON")
        if with_b:
            sub.add_argument("b", help="Second sequence")
        if name == "norm":
            sub.add_argument("--norm", choices=["sup", "l1"], default="sup")
        if name in ("member", "equiv"):
            sub.add_argument("--lattice", required=True, choices=["R", "S", "OPLUS_Z"])
        if name in ("space-member", "dist", "coset-ball"):
            sub.add_argument("--space", required=name != "coset-ball", default="GAMMA0",
                             choices=[kind.value for kind in SpaceKind])
        if name == "subgroup-member":
            sub.add_argument("--subgroup", required=True,
                             help="COORD_ZERO:n, COORD_INT:n or BALL_GENERATED:SPACE:r")
            sub.add_argument("--modulo", choices=["R", "S", "OPLUS_Z"])
        if name == "coset-ball":
            sub.add_argument("--radius", required=True, help="Rational radius p/q")
            sub.add_argument("--modulo", choices=["S", "OPLUS_Z"], default="S")
        sub.set_defaults(handler=run_emitting)

    # witness
    witness = groups.add_parser("witness", parents=[common], help="Certify a property-table claim")
    witness.add_argument("claim", choices=[claim.value for claim in Claim])
    witness.add_argument("--a", help="Input sequence")
    witness.add_argument("--space", choices=[kind.value for kind in SpaceKind])
    for key in ("bound", "radius", "q", "eps"):
        witness.add_argument(f"--{key}", help="Rational p/q")
    witness.set_defaults(handler=run_emitting, command=None)

    # non0
    non0 = groups.add_parser("non0", help="First-exit construction over subsums")
    non0_cmds = non0.add_subparsers(dest="command", required=True)
    for name in ("construct", "premises"):
        sub = non0_cmds.add_parser(name, parents=[common])
        sub.add_argument("--instance", choices=sorted(INSTANCES), default="gamma1")
        sub.add_argument("--radius", default="1", help="Ball radius p/q (default: 1)")
        if name == "construct":
            sub.add_argument("--depth", type=int, default=2)
            sub.add_argument("--partial", action="store_true",
                             help="Stop at the achieved depth instead of failing at the index cap")
        sub.set_defaults(handler=run_emitting)
    sub = non0_cmds.add_parser("verify", parents=[common])
    sub.add_argument("file")
    sub.add_argument("--tolerance", help="Required bound p/q on the last nu gap")
    sub.set_defaults(handler=lambda args: run_verify(args, "non0 construct"))

    # finite
    finite = groups.add_parser("finite", help="Finite filtered groups")
    finite_cmds = finite.add_subparsers(dest="command", required=True)
    for name in ("report", "embed", "metric", "extend", "factorize"):
        sub = finite_cmds.add_parser(name, parents=[common])
        if name != "factorize":
            source = sub.add_mutually_exclusive_group()
            source.add_argument("--group", help="Group file: {order, mul} or {degree, generators}")
            source.add_argument("--cyclic", type=int, help="Use Z/N")
        if name in ("report", "embed"):
            sub.add_argument("--base", required=True, help="Base sets, e.g. '0,2;0'")
        if name == "metric":
            sub.add_argument("--chain", required=True, help="Subgroup chain, e.g. '0,1,2,3;0,2;0'")
            sub.add_argument("x", type=int)
            sub.add_argument("y", type=int)
        if name == "extend":
            sub.add_argument("--normal", required=True, help="Normal subgroup N, e.g. '0,2'")
            sub.add_argument("--neighborhood", dest="neighborhood_set", required=True,
                             help="Symmetric set U containing 0")
        if name == "factorize":
            factors = sub.add_mutually_exclusive_group(required=True)
            factors.add_argument("--cyclic", dest="cyclic_factors", help="Cyclic factor orders, e.g. '5,7'")
            factors.add_argument("--factor", action="append", help="Factor group file (repeatable)")
            sub.add_argument("--indices", default="", help="The index set J, e.g. '0,1'")
            sub.add_argument("--neighborhood", action="append", help="i=elements, e.g. '0=0,1,4'")
            sub.add_argument("--element", required=True, help="Coordinates of g, e.g. '3,2'")
        sub.set_defaults(handler=run_emitting)

    # abelian
    abelian = groups.add_parser("abelian", help="Embeddings of finite abelian groups")
    abelian_cmds = abelian.add_subparsers(dest="command", required=True)
    sub = abelian_cmds.add_parser("prufer", parents=[common])
    sub.add_argument("--orders", required=True, help="Cyclic orders, e.g. '6,4,9'")
    sub.set_defaults(handler=run_emitting)
    for name in ("quotient", "decompose"):
        sub = abelian_cmds.add_parser(name, parents=[common])
        source = sub.add_mutually_exclusive_group()
        source.add_argument("--group", help="Abelian group file")
        source.add_argument("--cyclic", type=int, help="Use Z/N")
        if name == "quotient":
            sub.add_argument("--base", required=True, help="Base subgroups, e.g. '0,2;0'")
        sub.set_defaults(handler=run_emitting)

    # verify
    sub = groups.add_parser("verify", parents=[common], help="Replay a certificate file")
    sub.add_argument("file")
    sub.add_argument("--tolerance", help="Cauchy gap bound for subsum certificates")
    sub.set_defaults(handler=run_verify)
    return parser


def run(argv=None):
    """Parse arguments, dispatch, and return the process exit code."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.handler(args)
    except TopolabError as e:
        print(f"Error: {e}", file=sys.stderr)
        return e.exit_code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
