"""
The first-exit construction over subsums of a null sequence.

Given terms a_n converging to 0 in a group with invariant metric d, a
valuation nu on finite subsums and a radius r, the construction picks
blocks of consecutive terms

    c_m = sum over k <= m of (a_{n'_k} + ... + a_{n_k})

so that every c_m lies in the open ball B(0, r) while its escort
c_m + a_{n_m + 1} lies outside. The points and escorts get arbitrarily
close while nu(c_m) converges, which is the data showing that the
ball's trace on the convergent subsums is not clopen.

The ball itself plays the role of the open neighbourhood U, so
membership is an exact rational comparison.
"""

import logging
import math
import random
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

from topolab.config import load_settings
from topolab.errors import PreconditionError, SchemaError, SearchExhaustedError, VerificationError
from topolab.exact_core import (FinSeq, TailSeq, as_rational, format_rational, l1_norm,
                                parse_rational, seq_from_json, seq_to_json, sup_norm, unit)
from topolab.sequence_spaces import SpaceKind, space_member

log = logging.getLogger(__name__)

DEFAULT_PREMISE_TERMS = 2048
DEFAULT_TRIALS = 200
DEFAULT_MAX_INDEX = 50
TERM_CHECK_LIMIT = 256


class Valuation(Enum):
    L1 = "L1"
    SUP = "SUP"

    def __call__(self, x):
        return l1_norm(x) if self is Valuation.L1 else sup_norm(x)


@dataclass(frozen=True)
class SubsumInstance:
    """
    A subsum space: terms a_n, valuation nu, radius r and rho = sup d(y, 0)
    (None stands for infinity).

    ``first_inside(g)`` may return the least n with nu(a_n) < g; it is
    only meaningful when nu = d(0, .) exactly and nu(a_n) is antitone.
    ``index_limit`` bounds the indices whose terms can be materialized.
    """

    name: str
    space: SpaceKind
    term: object
    nu: Valuation
    radius: Fraction
    rho: Fraction = None
    first_inside: object = None
    index_limit: int = None
    builtin: bool = False

    def distance(self, x):
        return self.space.norm(x)

    def inside(self, x):
        return self.distance(x) < self.radius

    def zero(self):
        return TailSeq() if self.space is SpaceKind.C_CAP_R else FinSeq()

    def a(self, n):
        if self.index_limit is not None and n > self.index_limit:
            raise SearchExhaustedError(
                f"term index {n} exceeds the materialization limit {self.index_limit}")
        return self.term(n)

    def block(self, start, stop):
        """a_start + ... + a_stop (empty when stop < start)."""
        total = self.zero()
        for n in range(start, stop + 1):
            total = total + self.a(n)
        return total


def gamma1_term(n):
    """e_n/(n+1) in Gamma1."""
    return unit(n, Fraction(1, n + 1))


def c_cap_r_term(n):
    """(0, ..., 0, 1, 1, ...)/(n+1) with n leading zeros, in c ∩ R."""
    return TailSeq((0,) * n, Fraction(1, n + 1))


def harmonic_first_inside(gap):
    # least n with 1/(n+1) < gap
    return math.floor(1 / gap)


def gamma1_instance(radius=1, settings=None):
    return SubsumInstance("gamma1", SpaceKind.GAMMA1, gamma1_term, Valuation.L1,
                          as_rational(radius), first_inside=harmonic_first_inside,
                          builtin=True)


def c_cap_r_instance(radius=1, settings=None):
    settings = settings or load_settings()
    return SubsumInstance("c_cap_r", SpaceKind.C_CAP_R, c_cap_r_term, Valuation.SUP,
                          as_rational(radius), first_inside=harmonic_first_inside,
                          index_limit=settings.index_cap, builtin=True)


INSTANCES = {
    "gamma1": gamma1_instance,
    "c_cap_r": c_cap_r_instance,
}


def builtin_instance(name, radius, settings=None):
    try:
        factory = INSTANCES[name]
    except KeyError:
        raise PreconditionError(
            f"Unknown instance '{name}' (expected one of {', '.join(sorted(INSTANCES))})") from None
    radius = as_rational(radius)
    if radius <= 0:
        raise PreconditionError("Radius must be positive")
    return factory(radius, settings)


# ----------------------------
# Premises
# ----------------------------

@dataclass(frozen=True)
class PremiseResult:
    name: str
    passed: bool
    mode: str
    detail: str = ""
    violation: object = None

    def to_json(self):
        return {"name": self.name, "passed": self.passed, "mode": self.mode,
                "detail": self.detail, "violation": self.violation}


@dataclass(frozen=True)
class PremiseReport:
    results: tuple
    parameters: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(result.passed for result in self.results)

    def __getitem__(self, name):
        for result in self.results:
            if result.name == name:
                return result
        raise KeyError(name)

    def to_json(self):
        return {"parameters": self.parameters,
                "results": [result.to_json() for result in self.results]}


def _check_terms(inst, limit):
    previous = None
    for n in range(limit + 1):
        term = inst.a(n)
        if not space_member(term, inst.space):
            return PremiseResult("terms", False, "exact", f"a_{n} is not in {inst.space.name}",
                                 {"index": n})
        norm = inst.distance(term)
        if previous is not None and norm > previous:
            return PremiseResult("terms", False, "exact", f"d(0, a_{n}) increases",
                                 {"index": n})
        previous = norm
    return PremiseResult("terms", True, "exact",
                         f"a_0..a_{limit} in {inst.space.name}, d(0, a_n) antitone")


def _check_div(inst, N, bound):
    total = Fraction(0)
    for n in range(N + 1):
        total += inst.nu(inst.a(n))
        if total > bound:
            return PremiseResult("div", True, "exact",
                                 f"partial sum up to index {n} exceeds {format_rational(bound)}")
    return PremiseResult("div", False, "exact",
                         f"partial sums up to index {N} stay below {format_rational(bound)}",
                         {"N": N, "sum": format_rational(total)})


def _sample_index_sets(trials, max_index, rng):
    population = range(max_index + 1)
    for _ in range(trials):
        size = rng.randint(1, min(8, max_index + 1))
        yield sorted(rng.sample(population, size))


def check_premises(inst, N=DEFAULT_PREMISE_TERMS, B=None, trials=DEFAULT_TRIALS,
                   max_index=DEFAULT_MAX_INDEX, seed=None):
    """
    Check the premises of the construction on a finite window.

    - div: some partial sum of nu(a_n), n <= N, exceeds B (default r).
    - change: nu is additive on ``trials`` random finite index sets of
      maximal index ``max_index``.
    - conv and bound: checked as the identity nu(x) = d(0, x) on every
      generated subsum; exact for built-in instances, sampled only for
      others.
    - rho: r < rho.
    Failures are report entries, never exceptions.
    """
    B = inst.radius if B is None else as_rational(B)
    if seed is None:
        seed = load_settings().seed
    rng = random.Random(seed)
    parameters = {"N": N, "B": format_rational(B), "trials": trials,
                  "max_index": max_index, "seed": seed}

    results = [_check_terms(inst, min(N, TERM_CHECK_LIMIT)), _check_div(inst, N, B)]

    change_violation = identity_violation = None
    subsums = 0
    for X in _sample_index_sets(trials, max_index, rng):
        terms = [inst.a(n) for n in X]
        total = inst.zero()
        for term in terms:
            total = total + term
        subsums += 1
        if change_violation is None and inst.nu(total) != sum((inst.nu(t) for t in terms), Fraction(0)):
            change_violation = {"X": X}
        for x in [total] + terms:
            if identity_violation is None and inst.nu(x) != inst.distance(x):
                identity_violation = {"X": X}
    results.append(PremiseResult("change", change_violation is None, "sampled",
                                 f"additivity on {subsums} index sets", change_violation))
    mode = "exact identity on generated subsums" if inst.builtin else "sampled only"
    for name in ("conv", "bound"):
        results.append(PremiseResult(name, identity_violation is None, mode,
                                     "nu(x) = d(0, x)", identity_violation))

    if inst.rho is None:
        results.append(PremiseResult("rho", True, "exact", "rho is infinite"))
    else:
        results.append(PremiseResult("rho", inst.radius < inst.rho, "exact",
                                     f"r < rho = {format_rational(inst.rho)}"))
    report = PremiseReport(tuple(results), parameters)
    log.info("premises for %s: passed=%s", inst.name, report.passed)
    return report


# ----------------------------
# Construction
# ----------------------------

@dataclass(frozen=True)
class SubsumCertificate:
    instance: str
    radius: Fraction
    requested_depth: int
    nprime: tuple
    n: tuple
    c: tuple
    nu: tuple
    escorts: tuple
    premises: dict

    @property
    def depth(self):
        return len(self.nprime)

    @property
    def complete(self):
        return self.depth == self.requested_depth

    def to_json(self):
        return {
            "instance": {"name": self.instance, "radius": format_rational(self.radius)},
            "depth": self.depth,
            "requested_depth": self.requested_depth,
            "nprime": list(self.nprime),
            "n": list(self.n),
            "c": [seq_to_json(point) for point in self.c],
            "escorts": [seq_to_json(point) for point in self.escorts],
            "nu": [format_rational(value) for value in self.nu],
            "premises": self.premises,
        }

    @classmethod
    def from_json(cls, data):
        try:
            cert = cls(
                instance=str(data["instance"]["name"]),
                radius=parse_rational(str(data["instance"]["radius"])),
                requested_depth=int(data["requested_depth"]),
                nprime=tuple(int(k) for k in data["nprime"]),
                n=tuple(int(k) for k in data["n"]),
                c=tuple(seq_from_json(point) for point in data["c"]),
                nu=tuple(parse_rational(str(value)) for value in data["nu"]),
                escorts=tuple(seq_from_json(point) for point in data["escorts"]),
                premises=data["premises"],
            )
            if int(data["depth"]) != cert.depth:
                raise SchemaError(f"depth {data['depth']} disagrees with {cert.depth} blocks")
            return cert
        except (KeyError, TypeError, ValueError) as e:
            raise SchemaError(f"Bad subsum certificate: {e}") from None


def _first_inside(inst, c, after, cap):
    """Least n > after with c + a_n inside the ball."""
    if inst.first_inside is not None:
        gap = inst.radius - inst.nu(c)
        candidate = max(after + 1, inst.first_inside(gap))
        if not inst.inside(c + inst.a(candidate)):
            raise VerificationError("membership at n′", f"locator index {candidate} is outside")
        return candidate
    for n in range(after + 1, after + 1 + cap):
        if inst.inside(c + inst.a(n)):
            return n
    raise SearchExhaustedError(f"no index in ({after}, {after + cap}] re-enters the ball")


def _first_exit(inst, running, start, cap):
    """Scan i > start until running + a_i leaves the ball; return (i - 1, inside sum, escort)."""
    i = start
    for _ in range(cap):
        following = running + inst.a(i + 1)
        if not inst.inside(following):
            return i, running, following
        running = following
        i += 1
    raise SearchExhaustedError(f"running sum from index {start} stays inside for {cap} terms")


def construct(inst, depth, premises=None, index_cap=None, partial=False):
    """
    Run the greedy first-exit construction to the given depth.

    n'_{m+1} is the least n > n_m with d(0, c_m + a_n) < r; n_{m+1} is
    one less than the first index at which the running sum
    c_m + a_{n'_{m+1}} + ... leaves the ball. With ``partial`` the
    certificate stops at the achieved depth when a scan hits its cap.
    """
    if depth < 0:
        raise PreconditionError("Depth must be a natural number")
    if index_cap is None:
        index_cap = load_settings().index_cap
    if premises is None:
        premises = check_premises(inst)
    if not premises.passed:
        failed = [result.name for result in premises.results if not result.passed]
        raise PreconditionError(f"Premises fail for {inst.name}: {', '.join(failed)}")

    c = inst.zero()
    points, values, escorts = [c], [inst.nu(c)], []
    nprimes, ns = [], []
    last = -1
    for m in range(depth):
        try:
            nprime = _first_inside(inst, c, last, index_cap)
            last, c_next, escort = _first_exit(inst, c + inst.a(nprime), nprime, index_cap)
        except SearchExhaustedError as e:
            if not partial:
                raise
            log.warning("stopping %s at depth %d of %d: %s", inst.name, m, depth, e)
            break
        if last < nprime:
            raise VerificationError("first exit", f"block {m + 1} is empty")
        if inst.nu(c_next) <= values[-1]:
            raise VerificationError("nu increasing", f"at index {m + 1}")
        c = c_next
        nprimes.append(nprime)
        ns.append(last)
        points.append(c)
        values.append(inst.nu(c))
        escorts.append(escort)
        log.debug("block %d: n'=%d n=%d nu=%s", m + 1, nprime, last, values[-1])

    cert = SubsumCertificate(inst.name, inst.radius, depth, tuple(nprimes), tuple(ns),
                             tuple(points), tuple(values), tuple(escorts), premises.to_json())
    log.info("%s r=%s: depth %d of %d", inst.name, inst.radius, cert.depth, depth)
    return cert


# ----------------------------
# Verification
# ----------------------------

@dataclass(frozen=True)
class VerificationResult:
    ok: bool
    failure: str = None
    detail: str = None

    def __bool__(self):
        return self.ok


def _expect(condition, failure, detail=None):
    """Raise on a failed check; a callable ``detail`` is only rendered on failure."""
    if not condition:
        raise VerificationError(failure, detail() if callable(detail) else detail)


def _verify_blocks(cert, inst, index_cap):
    M = cert.depth
    _expect(len(cert.n) == M and len(cert.c) == M + 1 and len(cert.nu) == M + 1
            and len(cert.escorts) == M and M <= cert.requested_depth,
            "structure", "list lengths disagree with the depth")

    previous = -1
    for m in range(M):
        _expect(previous < cert.nprime[m] <= cert.n[m], "index interleave", f"block {m + 1}")
        previous = cert.n[m]

    # Replay every block from the index lists alone
    c, last = inst.zero(), -1
    recomputed, escorts = [c], []
    for m in range(M):
        nprime, stop = cert.nprime[m], cert.n[m]
        _expect(inst.inside(c + inst.a(nprime)), "membership at n′",
                lambda: f"block {m + 1}, n′ = {nprime}")
        if inst.first_inside is not None:
            earlier = [nprime - 1] if nprime - 1 > last else []
        else:
            earlier = range(last + 1, nprime)
            _expect(len(earlier) <= index_cap, "least n′", f"block {m + 1} exceeds the index cap")
        for n in earlier:
            _expect(not inst.inside(c + inst.a(n)), "least n′",
                    lambda: f"block {m + 1}, index {n} is inside")
        running = c
        for i in range(nprime, stop + 1):
            running = running + inst.a(i)
            _expect(inst.inside(running), "running sum inside",
                    lambda: f"block {m + 1}, index {i}")
        escort = running + inst.a(stop + 1)
        _expect(not inst.inside(escort), "first exit",
                lambda: f"block {m + 1}, index {stop + 1}")
        c, last = running, stop
        recomputed.append(c)
        escorts.append(escort)
    return recomputed, escorts


def verify_certificate(cert, tolerance=None, index_cap=None, settings=None):
    """
    Replay a certificate from its index lists.

    Recomputes every c_m, re-asserts membership and exit conditions,
    compares stored points, nu values and escorts, then checks that nu
    increases, that escorts sit at distance d(0, a_{n_m+1}) from their
    points with those distances antitone, that the last nu gap is below
    ``tolerance`` when one is given, and that the premise report
    reproduces. Returns a VerificationResult naming the first failure.
    """
    settings = settings or load_settings()
    if index_cap is None:
        index_cap = settings.index_cap
    try:
        inst = builtin_instance(cert.instance, cert.radius, settings)
        recomputed, escorts = _verify_blocks(cert, inst, index_cap)

        for m, (stored, fresh) in enumerate(zip(cert.c, recomputed)):
            _expect(stored == fresh, "c_m recomputation", f"index {m}")
        for m, (stored, point) in enumerate(zip(cert.nu, recomputed)):
            _expect(stored == inst.nu(point), "nu recomputation", f"index {m}")
        for m, (stored, fresh) in enumerate(zip(cert.escorts, escorts)):
            _expect(stored == fresh, "escort recomputation", f"index {m + 1}")

        for m in range(1, len(cert.nu)):
            _expect(cert.nu[m] > cert.nu[m - 1], "nu increasing", f"index {m}")
            if inst.builtin:
                _expect(cert.nu[m] < inst.radius, "nu bound", f"index {m}")

        gaps = []
        for m, (point, escort) in enumerate(zip(recomputed[1:], escorts), start=1):
            gap = inst.distance(escort - point)
            _expect(gap == inst.distance(inst.a(cert.n[m - 1] + 1)), "escort distance", f"index {m}")
            if gaps and inst.builtin:
                _expect(gap <= gaps[-1], "escort distance", f"index {m} is farther than index {m - 1}")
            gaps.append(gap)

        if tolerance is not None and cert.depth >= 2:
            tolerance = as_rational(tolerance)
            gap = cert.nu[-1] - cert.nu[-2]
            _expect(gap < tolerance, "cauchy gap",
                    f"nu(c_M) - nu(c_M-1) = {format_rational(gap)}")

        _verify_premises(cert, inst)
    except VerificationError as e:
        log.info("certificate rejected: %s", e)
        return VerificationResult(False, e.failure, e.detail)
    except (SearchExhaustedError, PreconditionError) as e:
        return VerificationResult(False, "replay", str(e))
    return VerificationResult(True)


def _verify_premises(cert, inst):
    try:
        parameters = cert.premises["parameters"]
        replayed = check_premises(inst, N=int(parameters["N"]), B=parameters["B"],
                                  trials=int(parameters["trials"]),
                                  max_index=int(parameters["max_index"]),
                                  seed=int(parameters["seed"]))
    except (KeyError, TypeError, ValueError) as e:
        raise VerificationError("premises", f"unreadable premise report: {e}") from None
    _expect(replayed.passed, "premises", "premises fail on replay")
    _expect(replayed.to_json() == cert.premises, "premises", "stored report differs from replay")


def enumerate_subsums(inst, indices):
    """All finite subsums over subsets of ``indices``, keyed by frozenset."""
    indices = list(indices)
    subsums = {}
    for mask in range(1 << len(indices)):
        X = frozenset(n for bit, n in enumerate(indices) if mask >> bit & 1)
        total = inst.zero()
        for n in sorted(X):
            total = total + inst.a(n)
        subsums[X] = total
    return subsums
