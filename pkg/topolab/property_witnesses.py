"""
Witness generators for the property table of the sequence groups.

Each claim has three parts:
- a typed operation returning the witness itself,
- a builder turning JSON inputs into a JSON witness,
- a checker re-deriving every assertion from (inputs, witness).

The checker never looks at stored booleans, so a WitnessRecord read
back from disk is verified by calling ``replay`` on it.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from topolab.errors import PreconditionError, SchemaError, SearchExhaustedError, ZeroElementError
from topolab.exact_core import (FinSeq, as_rational, format_rational, parse_rational,
                                seq_from_json, seq_to_json, sup_norm, unit)
from topolab.sequence_spaces import (LatticeKind, SpaceKind, SubgroupDescriptor, SubgroupTag,
                                     coordinate_sum, coset_ball_member, descriptor_contains,
                                     frozen_indices, lattice_equiv, lattice_member, lattice_step,
                                     require_member, space_member, subgroup_member)

log = logging.getLogger(__name__)

# Radius of the ball shown to sit inside {b : b(1) ∈ Z}; below the step 1/2! of coordinate 1.
NOT_TA_RADIUS = Fraction(1, 4)
MAX_HALVINGS = 256


class Claim(Enum):
    SMOG_SEPARATOR = "smog-separator"
    UNBOUNDED_MULTIPLE = "unbounded-multiple"
    NO_SMOG_CHAIN = "no-smog-chain"
    NOT_TA_SUBGROUP = "not-ta-subgroup"
    TD_SEPARATOR = "td-separator"
    Q_TA = "q-ta"
    OPLUS_SMOG_SEPARATOR = "oplus-smog-separator"
    OPLUS_MOD_S_INDEX = "oplus-mod-s-index"


@dataclass(frozen=True)
class WitnessRecord:
    claim: Claim
    inputs: dict
    witness: dict
    checks: tuple

    @property
    def accepted(self):
        return all(ok for _, ok in self.checks)

    def failures(self):
        return [name for name, ok in self.checks if not ok]

    def to_json(self):
        return {
            "claim": self.claim.value,
            "inputs": self.inputs,
            "witness": self.witness,
            "checks": [[name, ok] for name, ok in self.checks],
        }

    @classmethod
    def from_json(cls, data):
        try:
            return cls(Claim(data["claim"]), data["inputs"], data["witness"],
                       tuple((str(name), bool(ok)) for name, ok in data["checks"]))
        except (KeyError, TypeError, ValueError) as e:
            raise SchemaError(f"Bad witness record: {e}") from None


# ----------------------------
# Typed operations
# ----------------------------

def _require_nonzero(a):
    if a.is_zero():
        raise ZeroElementError("The zero sequence has no separating witness")


def smog_separator(a, space):
    """
    The open subgroup {b : b(n) = 0} for the least n with a(n) ≠ 0.

    Examples:
    - e3/24 -> COORD_ZERO(3)
    - e0 − e5 -> COORD_ZERO(0)
    """
    require_member(a, space)
    _require_nonzero(a)
    return SubgroupDescriptor.coord_zero(a.support[0])


def unbounded_multiple(a, space, bound):
    """
    Least m with sup_norm(m·a) > bound.

    sup_norm(m·a) = m·sup_norm(a), so m = floor(bound / sup_norm(a)) + 1.
    """
    require_member(a, space)
    _require_nonzero(a)
    bound = as_rational(bound)
    if bound <= 0:
        raise PreconditionError("Bound must be positive")
    return math.floor(bound / sup_norm(a)) + 1


def _least_inside_index(radius):
    # least n with 1/(n+1) < r
    return math.floor(1 / radius)


def quotient_no_smog_chain(radius):
    """
    Least n with e_n/(n+1) in the open ball of radius r, together with
    the record certifying that e0 mod S lies in the subgroup the ball
    generates in Gamma0/S.
    """
    radius = as_rational(radius)
    if radius <= 0:
        raise PreconditionError("Radius must be positive")
    record = certify(Claim.NO_SMOG_CHAIN, {"radius": format_rational(radius)})
    return record.witness["n"], record


def not_ta_subgroup(space):
    """{b : b(1) ∈ Z} mod S: open, proper, and containing S."""
    if space not in (SpaceKind.GAMMA0, SpaceKind.GAMMA1):
        raise PreconditionError(f"Quotients by S are taken in GAMMA0 or GAMMA1, not {space.name}")
    record = certify(Claim.NOT_TA_SUBGROUP, {"space": space.value})
    return SubgroupDescriptor.coord_int(1), record


def td_separator(a):
    """
    A radius r = 2^-k with a mod S outside (B0(0, r) ∩ Gamma1) mod S,
    found by halving from r = 1.
    """
    require_member(a, SpaceKind.GAMMA1)
    if lattice_member(a, LatticeKind.S_LATTICE):
        raise ZeroElementError("a lies in S, so its coset is zero")
    radius = Fraction(1)
    for halvings in range(MAX_HALVINGS + 1):
        if not coset_ball_member(a, radius, SpaceKind.GAMMA1).member:
            log.debug("td separator found after %d halvings", halvings)
            return radius
        radius /= 2
    raise SearchExhaustedError(f"No separating radius down to 2^-{MAX_HALVINGS}")


def q_ta_witness(q, eps):
    """
    Write q as k equal parts of absolute value below eps, k minimal:
    the eps-ball of Q generates Q.

    Examples:
    - q = 5/3, eps = 1/10 -> 17 copies of 5/51
    - q = 0 -> []
    """
    q, eps = as_rational(q), as_rational(eps)
    if eps <= 0:
        raise PreconditionError("eps must be positive")
    if q == 0:
        return []
    k = math.floor(abs(q) / eps) + 1
    return [q / k] * k


def oplus_smog_separator(a):
    """
    COORD_INT(n) for the least n with a(n) ∉ Z: an open subgroup of
    Gamma0 containing the direct sum of Z and missing a.
    """
    require_member(a, SpaceKind.GAMMA0)
    for n, value in a.entries:
        if value.denominator != 1:
            return SubgroupDescriptor.coord_int(n)
    raise ZeroElementError("a is an integer sequence, so its coset modulo OPLUS_Z is zero")


def oplus_mod_s_index(a):
    """Image of a mod S under (direct sum of Z)/S ≅ Z."""
    return coordinate_sum(a)


# ----------------------------
# Builders and checkers
# ----------------------------

def _holds(predicate):
    """Evaluate a check; a precondition failure on tampered data is a failed check."""
    try:
        return bool(predicate())
    except (PreconditionError, SchemaError, KeyError, TypeError, ValueError, ZeroDivisionError):
        return False


def _rational(data, key):
    return parse_rational(str(data[key]))


def _build_smog_separator(inputs):
    a, space = seq_from_json(inputs["a"]), SpaceKind.parse(inputs["space"])
    desc = smog_separator(a, space)
    radius = min(abs(a[desc.n]), lattice_step(desc.n))
    return {"subgroup": desc.to_json(), "radius": format_rational(radius)}


def _check_smog_separator(inputs, witness):
    a, space = seq_from_json(inputs["a"]), SpaceKind.parse(inputs["space"])
    desc = SubgroupDescriptor.from_json(witness["subgroup"])
    radius = _rational(witness, "radius")
    n = desc.n
    return [
        ("input in space", _holds(lambda: space_member(a, space))),
        ("input nonzero", not a.is_zero()),
        ("coordinate-zero descriptor", desc.tag is SubgroupTag.COORD_ZERO),
        ("least nonzero coordinate",
         _holds(lambda: a[n] != 0 and all(m >= n for m in a.support))),
        ("excludes input", _holds(lambda: not subgroup_member(a, desc))),
        ("contains zero", _holds(lambda: subgroup_member(FinSeq.zero(), desc))),
        ("radius is min(|a(n)|, lattice step)",
         _holds(lambda: radius == min(abs(a[n]), lattice_step(n)))),
        ("open: ball vanishes on coordinate n",
         _holds(lambda: radius > 0 and n in frozen_indices(radius))),
    ]


def _build_unbounded_multiple(inputs):
    a, space = seq_from_json(inputs["a"]), SpaceKind.parse(inputs["space"])
    m = unbounded_multiple(a, space, _rational(inputs, "bound"))
    return {"m": m, "norm": format_rational(sup_norm(a.scale(m)))}


def _check_unbounded_multiple(inputs, witness):
    a, space = seq_from_json(inputs["a"]), SpaceKind.parse(inputs["space"])
    bound, m = _rational(inputs, "bound"), int(witness["m"])
    return [
        ("input in space", _holds(lambda: space_member(a, space))),
        ("input nonzero", not a.is_zero()),
        ("bound positive", bound > 0),
        ("norm of multiple", _holds(lambda: _rational(witness, "norm") == sup_norm(a.scale(m)))),
        ("multiple escapes ball", m >= 1 and sup_norm(a.scale(m)) > bound),
        ("least multiple", m == 1 or sup_norm(a.scale(m - 1)) <= bound),
    ]


def _build_no_smog_chain(inputs):
    radius = _rational(inputs, "radius")
    if radius <= 0:
        raise PreconditionError("Radius must be positive")
    n = _least_inside_index(radius)
    return {
        "n": n,
        "element": seq_to_json(unit(n, Fraction(1, n + 1))),
        "relation": seq_to_json(unit(0) - unit(n)),
    }


def _check_no_smog_chain(inputs, witness):
    radius = _rational(inputs, "radius")
    n = int(witness["n"])
    element = seq_from_json(witness["element"])
    relation = seq_from_json(witness["relation"])
    e0 = unit(0)
    ball = _holds(lambda: SubgroupDescriptor.ball_generated(SpaceKind.GAMMA0, radius))
    return [
        ("radius positive", radius > 0),
        ("element is e_n/(n+1)", n >= 0 and element == unit(n, Fraction(1, n + 1))),
        ("element in GAMMA0", _holds(lambda: space_member(element, SpaceKind.GAMMA0))),
        ("element in ball", sup_norm(element) < radius),
        ("least n", n == 0 or Fraction(1, n) >= radius),
        ("relation is e0 - e_n", relation == e0 - unit(n)),
        ("relation in S", _holds(lambda: lattice_member(relation, LatticeKind.S_LATTICE))),
        ("(n+1)-multiple congruent to e0",
         _holds(lambda: lattice_equiv(element.scale(n + 1), e0, LatticeKind.S_LATTICE))),
        ("e0 nonzero mod S",
         _holds(lambda: not lattice_equiv(e0, FinSeq.zero(), LatticeKind.S_LATTICE))),
        ("e0 in ball-generated subgroup",
         ball and _holds(lambda: subgroup_member(
             e0, SubgroupDescriptor.ball_generated(SpaceKind.GAMMA0, radius),
             LatticeKind.S_LATTICE))),
    ]


def _build_not_ta_subgroup(inputs):
    space = SpaceKind.parse(inputs["space"])
    if space not in (SpaceKind.GAMMA0, SpaceKind.GAMMA1):
        raise PreconditionError(f"Quotients by S are taken in GAMMA0 or GAMMA1, not {space.name}")
    return {
        "subgroup": SubgroupDescriptor.coord_int(1).to_json(),
        "radius": format_rational(NOT_TA_RADIUS),
        "excluded": seq_to_json(unit(1, Fraction(1, 2))),
    }


def _check_not_ta_subgroup(inputs, witness):
    space = SpaceKind.parse(inputs["space"])
    desc = SubgroupDescriptor.from_json(witness["subgroup"])
    radius = _rational(witness, "radius")
    excluded = seq_from_json(witness["excluded"])
    s = LatticeKind.S_LATTICE
    return [
        ("space admits quotient by S", space in (SpaceKind.GAMMA0, SpaceKind.GAMMA1)),
        ("coordinate-integer descriptor", desc.tag is SubgroupTag.COORD_INT),
        ("contains S", descriptor_contains(desc, s)),
        ("open: radius within lattice step",
         _holds(lambda: 0 < radius <= lattice_step(desc.n))),
        ("open: ball vanishes on coordinate n",
         _holds(lambda: desc.n in frozen_indices(radius))),
        ("excluded element in space", _holds(lambda: space_member(excluded, space))),
        ("excluded element outside ball", _holds(lambda: space.norm(excluded) >= radius)),
        ("proper: excludes element mod S", _holds(lambda: not subgroup_member(excluded, desc, s))),
    ]


def _build_td_separator(inputs):
    a = seq_from_json(inputs["a"])
    radius = td_separator(a)
    return {
        "radius": format_rational(radius),
        "halvings": radius.denominator.bit_length() - 1,
        "search": coset_ball_member(a, radius, SpaceKind.GAMMA1).to_json(),
    }


def _check_td_separator(inputs, witness):
    a = seq_from_json(inputs["a"])
    radius, halvings = _rational(witness, "radius"), int(witness["halvings"])
    return [
        ("input in GAMMA1", _holds(lambda: space_member(a, SpaceKind.GAMMA1))),
        ("input not in S", _holds(lambda: not lattice_member(a, LatticeKind.S_LATTICE))),
        ("radius is 2^-halvings", halvings >= 0 and radius == Fraction(1, 2**halvings)),
        ("coset outside ball",
         _holds(lambda: not coset_ball_member(a, radius, SpaceKind.GAMMA1).member)),
        ("first radius to separate",
         halvings == 0 or _holds(lambda: coset_ball_member(a, 2 * radius, SpaceKind.GAMMA1).member)),
    ]


def _build_q_ta(inputs):
    parts = q_ta_witness(_rational(inputs, "q"), _rational(inputs, "eps"))
    return {"k": len(parts), "parts": [format_rational(p) for p in parts]}


def _check_q_ta(inputs, witness):
    q, eps = _rational(inputs, "q"), _rational(inputs, "eps")
    k = int(witness["k"])
    parts = [parse_rational(str(p)) for p in witness["parts"]]
    return [
        ("eps positive", eps > 0),
        ("k parts", len(parts) == k),
        ("equal parts", k == 0 or all(p == q / k for p in parts)),
        ("sum is q", sum(parts, Fraction(0)) == q),
        ("parts inside eps-ball", all(abs(p) < eps for p in parts)),
        ("k minimal", k == 0 or k == 1 or abs(q) / (k - 1) >= eps),
    ]


def _build_oplus_smog_separator(inputs):
    a = seq_from_json(inputs["a"])
    desc = oplus_smog_separator(a)
    return {"subgroup": desc.to_json(), "radius": format_rational(lattice_step(desc.n))}


def _check_oplus_smog_separator(inputs, witness):
    a = seq_from_json(inputs["a"])
    desc = SubgroupDescriptor.from_json(witness["subgroup"])
    radius = _rational(witness, "radius")
    oplus = LatticeKind.OPLUS_Z
    return [
        ("input in GAMMA0", _holds(lambda: space_member(a, SpaceKind.GAMMA0))),
        ("input not in OPLUS_Z", _holds(lambda: not lattice_member(a, oplus))),
        ("coordinate-integer descriptor", desc.tag is SubgroupTag.COORD_INT),
        ("least non-integer coordinate",
         _holds(lambda: a[desc.n].denominator != 1
                and all(v.denominator == 1 for m, v in a.entries if m < desc.n))),
        ("contains OPLUS_Z", descriptor_contains(desc, oplus)),
        ("excludes input mod OPLUS_Z", _holds(lambda: not subgroup_member(a, desc, oplus))),
        ("open: ball vanishes on coordinate n",
         _holds(lambda: radius > 0 and desc.n in frozen_indices(radius))),
    ]


def _build_oplus_mod_s_index(inputs):
    return {"index": oplus_mod_s_index(seq_from_json(inputs["a"]))}


def _check_oplus_mod_s_index(inputs, witness):
    a = seq_from_json(inputs["a"])
    index = int(witness["index"])
    s = LatticeKind.S_LATTICE
    return [
        ("input in OPLUS_Z", _holds(lambda: lattice_member(a, LatticeKind.OPLUS_Z))),
        ("index is coordinate sum", _holds(lambda: coordinate_sum(a) == index)),
        ("congruent to index * e0", _holds(lambda: lattice_equiv(a, unit(0, index), s))),
        ("zero exactly on S", _holds(lambda: (index == 0) == lattice_member(a, s))),
    ]


CLAIMS = {
    Claim.SMOG_SEPARATOR: (_build_smog_separator, _check_smog_separator),
    Claim.UNBOUNDED_MULTIPLE: (_build_unbounded_multiple, _check_unbounded_multiple),
    Claim.NO_SMOG_CHAIN: (_build_no_smog_chain, _check_no_smog_chain),
    Claim.NOT_TA_SUBGROUP: (_build_not_ta_subgroup, _check_not_ta_subgroup),
    Claim.TD_SEPARATOR: (_build_td_separator, _check_td_separator),
    Claim.Q_TA: (_build_q_ta, _check_q_ta),
    Claim.OPLUS_SMOG_SEPARATOR: (_build_oplus_smog_separator, _check_oplus_smog_separator),
    Claim.OPLUS_MOD_S_INDEX: (_build_oplus_mod_s_index, _check_oplus_mod_s_index),
}


def _run_checks(claim, inputs, witness):
    _, checker = CLAIMS[claim]
    try:
        return checker(inputs, witness)
    except PreconditionError as e:
        log.debug("%s record rejected while parsing: %s", claim.value, e)
        return [("record well formed", False)]
    except (KeyError, TypeError, ValueError) as e:
        raise SchemaError(f"Malformed {claim.value} record: {e}") from None


def certify(claim, inputs):
    """Build the witness for JSON inputs and attach its checks."""
    builder, _ = CLAIMS[claim]
    witness = builder(inputs)
    checks = _run_checks(claim, inputs, witness)
    record = WitnessRecord(claim, inputs, witness, tuple(checks))
    log.info("%s: %d checks, accepted=%s", claim.value, len(checks), record.accepted)
    return record


def replay(record):
    """
    Re-run every check of a record from its stored inputs and witness,
    then rebuild the witness from the inputs alone and require the two
    to agree. Returns the list of (check name, outcome).
    """
    checks = list(_run_checks(record.claim, record.inputs, record.witness))
    builder, _ = CLAIMS[record.claim]
    try:
        rebuilt = builder(record.inputs)
    except PreconditionError:
        rebuilt = None
    checks.append(("witness reproduces from inputs", rebuilt == record.witness))
    return checks
