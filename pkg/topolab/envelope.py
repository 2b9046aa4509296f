"""
Certificate envelopes.

Every command turns JSON inputs into a JSON payload. The envelope keeps
both, together with the verdict reached when the payload was produced:

    {"schemaVersion": "1", "command": ..., "inputs": ..., "payload": ...,
     "verified": ...}

``verify_envelope`` replays a stored envelope with the library alone.
Witness records have their checks re-run, subsum certificates go
through ``verify_certificate``, and every other payload is recomputed
from the inputs and compared field by field.
"""

import json
import logging
from dataclasses import dataclass

import yaml

from topolab.abelian_universal import (CyclicDecomposition, decompose_abelian_table,
                                       prufer_embedding, quotient_product_embedding)
from topolab.config import load_settings
from topolab.errors import PreconditionError, SchemaError, TopolabError, VerificationError
from topolab.exact_core import (format_rational, l1_norm, parse_rational, seq_add,
                                seq_from_json, seq_to_json, sup_norm)
from topolab.finite_lab import (FilteredGroup, FiniteGroup, SubgroupChain,
                                extension_open_subgroup, na_metric_from_chain,
                                product_ta_factorization, property_report, sym_embedding)
from topolab.property_witnesses import Claim, WitnessRecord, certify, replay
from topolab.sequence_spaces import (LatticeKind, SpaceKind, SubgroupDescriptor,
                                     coset_ball_member, lattice_equiv, lattice_member,
                                     metric_dist, space_member, subgroup_member)
from topolab.subsum_engine import (DEFAULT_MAX_INDEX, DEFAULT_PREMISE_TERMS, DEFAULT_TRIALS,
                                   SubsumCertificate, VerificationResult, builtin_instance,
                                   check_premises, construct, verify_certificate)

log = logging.getLogger(__name__)

SCHEMA_VERSION = "1"
ENVELOPE_KEYS = {"schemaVersion", "command", "inputs", "payload", "verified"}


@dataclass(frozen=True)
class CertificateEnvelope:
    command: str
    inputs: dict
    payload: dict
    verified: bool
    schema_version: str = SCHEMA_VERSION

    def to_json(self):
        return {
            "schemaVersion": self.schema_version,
            "command": self.command,
            "inputs": self.inputs,
            "payload": self.payload,
            "verified": self.verified,
        }

    @classmethod
    def from_json(cls, data):
        if not isinstance(data, dict):
            raise SchemaError("Certificate must be a JSON object")
        if set(data) != ENVELOPE_KEYS:
            raise SchemaError(f"Envelope keys {sorted(data)} differ from {sorted(ENVELOPE_KEYS)}")
        if data["schemaVersion"] != SCHEMA_VERSION:
            raise SchemaError(f"Unsupported schemaVersion {data['schemaVersion']!r}")
        if data["command"] not in COMMANDS:
            raise SchemaError(f"Unknown command {data['command']!r}")
        if not isinstance(data["inputs"], dict) or not isinstance(data["payload"], dict):
            raise SchemaError("Envelope inputs and payload must be JSON objects")
        if not isinstance(data["verified"], bool):
            raise SchemaError("Envelope 'verified' must be a boolean")
        return cls(data["command"], data["inputs"], data["payload"], data["verified"])


def dump(document, fmt="json"):
    """Serialize with sorted keys; YAML output goes through plain JSON types first."""
    plain = json.loads(json.dumps(document))
    if fmt == "yaml":
        return yaml.safe_dump(plain, default_flow_style=False, sort_keys=True, width=120)
    return json.dumps(plain, sort_keys=True, indent=2)


def load_document(path):
    """
    Read a JSON file, or a YAML file when the name ends in .yaml/.yml.

    PyYAML caps plain mapping keys at 1024 characters; subsum support
    maps key on longer indices, so JSON never goes through it.
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            if str(path).lower().endswith((".yaml", ".yml")):
                return yaml.safe_load(f)
            return json.load(f)
    except (yaml.YAMLError, json.JSONDecodeError) as e:
        raise SchemaError(f"Error parsing '{path}': {e}") from None
    except FileNotFoundError:
        raise SchemaError(f"File '{path}' not found") from None


# ----------------------------
# Commands
# ----------------------------

@dataclass(frozen=True)
class Command:
    name: str
    compute: object
    replay: object = None


COMMANDS = {}


def command(name, replay=None):
    def register(compute):
        COMMANDS[name] = Command(name, compute, replay)
        return compute
    return register


def _seq(inputs, key):
    return seq_from_json(inputs[key])


def _group(data):
    return FiniteGroup.from_json(data)


def _filtered(inputs):
    return FilteredGroup(_group(inputs["group"]), tuple(tuple(B) for B in inputs["base"]))


def _lattice(inputs, key="lattice"):
    return None if inputs.get(key) is None else LatticeKind.parse(inputs[key])


@command("seq add")
def _seq_add(inputs):
    return {"sum": seq_to_json(seq_add(_seq(inputs, "a"), _seq(inputs, "b")))}, True


@command("seq norm")
def _seq_norm(inputs):
    norm = {"sup": sup_norm, "l1": l1_norm}.get(inputs["norm"])
    if norm is None:
        raise PreconditionError(f"Unknown norm '{inputs['norm']}' (expected sup or l1)")
    return {"value": format_rational(norm(_seq(inputs, "a")))}, True


@command("seq member")
def _seq_member(inputs):
    return {"member": lattice_member(_seq(inputs, "a"), _lattice(inputs))}, True


@command("seq equiv")
def _seq_equiv(inputs):
    return {"equivalent": lattice_equiv(_seq(inputs, "a"), _seq(inputs, "b"), _lattice(inputs))}, True


@command("seq space-member")
def _seq_space_member(inputs):
    return {"member": space_member(_seq(inputs, "a"), SpaceKind.parse(inputs["space"]))}, True


@command("seq dist")
def _seq_dist(inputs):
    distance = metric_dist(_seq(inputs, "a"), _seq(inputs, "b"), SpaceKind.parse(inputs["space"]))
    return {"distance": format_rational(distance)}, True


@command("seq subgroup-member")
def _seq_subgroup_member(inputs):
    desc = SubgroupDescriptor.from_json(inputs["subgroup"])
    return {"member": subgroup_member(_seq(inputs, "a"), desc, _lattice(inputs, "modulo"))}, True


@command("seq coset-ball")
def _seq_coset_ball(inputs):
    result = coset_ball_member(_seq(inputs, "a"), inputs["radius"], SpaceKind.parse(inputs["space"]),
                               _lattice(inputs, "modulo"))
    return result.to_json(), True


def _replay_witness(inputs, payload):
    record = WitnessRecord.from_json(payload)
    if record.claim.value != inputs["claim"] or record.inputs != inputs["inputs"]:
        raise VerificationError("witness inputs", "payload does not echo the envelope inputs")
    checks = replay(record)
    for name, ok in checks:
        if not ok:
            raise VerificationError(name, f"claim {record.claim.value}")
    if list(record.checks) != checks[:-1]:
        raise VerificationError("stored checks", "recorded checks differ from the replay")
    return record.accepted


@command("witness", replay=_replay_witness)
def _witness(inputs):
    try:
        claim = Claim(inputs["claim"])
    except ValueError:
        raise PreconditionError(f"Unknown claim '{inputs['claim']}'") from None
    record = certify(claim, inputs["inputs"])
    return record.to_json(), record.accepted


def _premises(inst, inputs):
    p = inputs["premises"]
    return check_premises(inst, N=int(p["N"]), B=p["B"], trials=int(p["trials"]),
                          max_index=int(p["max_index"]), seed=int(p["seed"]))


def default_premise_inputs(radius, settings=None):
    settings = settings or load_settings()
    return {"N": DEFAULT_PREMISE_TERMS, "B": radius, "trials": DEFAULT_TRIALS,
            "max_index": DEFAULT_MAX_INDEX, "seed": settings.seed}


def _replay_non0(inputs, payload, tolerance=None):
    cert = SubsumCertificate.from_json(payload)
    radius = parse_rational(str(inputs["radius"]))
    if cert.instance != inputs["instance"] or cert.radius != radius:
        raise VerificationError("instance", "certificate names another instance or radius")
    if cert.requested_depth != int(inputs["depth"]):
        raise VerificationError("depth", "requested depth differs from the inputs")
    if not inputs.get("partial", False) and not cert.complete:
        raise VerificationError("depth", f"achieved {cert.depth} of {cert.requested_depth}")
    inst = builtin_instance(cert.instance, cert.radius)
    if _premises(inst, inputs).to_json() != cert.premises:
        raise VerificationError("premises", "premise report differs from the inputs' replay")
    result = verify_certificate(cert, tolerance=tolerance)
    if not result.ok:
        raise VerificationError(result.failure, result.detail)
    return True


@command("non0 construct", replay=_replay_non0)
def _non0_construct(inputs):
    inst = builtin_instance(inputs["instance"], inputs["radius"])
    cert = construct(inst, int(inputs["depth"]), _premises(inst, inputs),
                     partial=bool(inputs.get("partial", False)))
    return cert.to_json(), verify_certificate(cert).ok


@command("non0 premises")
def _non0_premises(inputs):
    report = _premises(builtin_instance(inputs["instance"], inputs["radius"]), inputs)
    return report.to_json(), report.passed


@command("finite report")
def _finite_report(inputs):
    return property_report(_filtered(inputs)).to_json(), True


@command("finite embed")
def _finite_embed(inputs):
    report = sym_embedding(_filtered(inputs))
    return report.to_json(), report.accepted


@command("finite metric")
def _finite_metric(inputs):
    group = _group(inputs["group"])
    chain = SubgroupChain(group, tuple(tuple(U) for U in inputs["chain"]))
    x, y = int(inputs["x"]), int(inputs["y"])
    return {"distance": format_rational(na_metric_from_chain(chain, x, y))}, True


@command("finite extend")
def _finite_extend(inputs):
    trace = extension_open_subgroup(_group(inputs["group"]), inputs["N"], inputs["U"])
    return trace.to_json(), all(ok for _, ok in trace.checks)


@command("finite factorize")
def _finite_factorize(inputs):
    factors = [_group(data) for data in inputs["factors"]]
    U = {int(i): tuple(Ui) for i, Ui in inputs["U"].items()}
    g_prime, hs = product_ta_factorization(factors, inputs["J"], U, inputs["g"])
    return {"gPrime": list(g_prime), "h": [list(h) for h in hs]}, True


@command("abelian prufer")
def _abelian_prufer(inputs):
    embedding = prufer_embedding(CyclicDecomposition(tuple(inputs["orders"])))
    return embedding.to_json(), embedding.report.accepted


@command("abelian quotient")
def _abelian_quotient(inputs):
    report = quotient_product_embedding(_filtered(inputs))
    return report.to_json(), report.accepted


@command("abelian decompose")
def _abelian_decompose(inputs):
    decomposition, generators = decompose_abelian_table(_group(inputs["group"]))
    return {"orders": list(decomposition.orders), "generators": list(generators)}, True


def emit(name, inputs):
    """Run a command and wrap its payload in an envelope."""
    payload, verified = COMMANDS[name].compute(inputs)
    log.info("%s: verified=%s", name, verified)
    return CertificateEnvelope(name, inputs, json.loads(json.dumps(payload)), verified)


def _first_difference(stored, fresh, path="payload"):
    if isinstance(stored, dict) and isinstance(fresh, dict):
        for key in sorted(set(stored) | set(fresh)):
            if key not in stored or key not in fresh:
                return f"{path}.{key}"
            found = _first_difference(stored[key], fresh[key], f"{path}.{key}")
            if found:
                return found
        return None
    if isinstance(stored, list) and isinstance(fresh, list):
        if len(stored) != len(fresh):
            return f"{path} (length)"
        for i, (a, b) in enumerate(zip(stored, fresh)):
            found = _first_difference(a, b, f"{path}[{i}]")
            if found:
                return found
        return None
    if stored != fresh or type(stored) is not type(fresh):
        return path
    return None


def _recompute(env):
    payload, verified = COMMANDS[env.command].compute(env.inputs)
    difference = _first_difference(env.payload, json.loads(json.dumps(payload)))
    if difference:
        raise VerificationError("payload recomputation", difference)
    return verified


def verify_envelope(env, tolerance=None):
    """
    Replay an envelope, ignoring its stored verdict until the end.

    Returns a VerificationResult naming the first failure. A payload
    that cannot even be read counts as a failure here; only a broken
    envelope raises SchemaError.
    """
    cmd = COMMANDS[env.command]
    try:
        if cmd.replay is None:
            verified = _recompute(env)
        elif cmd.replay is _replay_non0:
            verified = _replay_non0(env.inputs, env.payload, tolerance)
        else:
            verified = cmd.replay(env.inputs, env.payload)
        if verified != env.verified:
            raise VerificationError("verified flag", f"stored {env.verified}, replay gives {verified}")
    except VerificationError as e:
        log.info("%s rejected: %s", env.command, e)
        return VerificationResult(False, e.failure, e.detail)
    except (KeyError, TypeError, ValueError, TopolabError) as e:
        log.info("%s rejected while replaying: %s", env.command, e)
        return VerificationResult(False, "replay", str(e) or type(e).__name__)
    return VerificationResult(True)
