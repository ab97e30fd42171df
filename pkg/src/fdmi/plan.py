"""Sideband planning: where each sub-exposure image lives in the Fourier plane.

A plan assigns every frame a mask whose carrier places the frame's
spectrum on a disk of ``band_radius`` around ``+-carrier``; the baseband
disk around DC holds the sum of all frames. Geometry is evaluated on the
periodic (toroidal) spectrum of a sampled image, so a disk that crosses
the Nyquist edge wraps to the opposite side rather than escaping it.
"""

from dataclasses import dataclass
from fractions import Fraction
import json
import math

import numpy as np

from .exceptions import PlanningError, ValidationError
from .fourier import fold, torus_distance
from .masks import WAVEFORMS, MaskSpec

#: Square-wave harmonics weaker than this fraction of ``b`` are ignored.
HARMONIC_FLOOR = 0.01
#: Hard cap on the harmonic order enumerated for square waves.
HARMONIC_CAP = 64

_EPS = 1e-12
_MERGE_TOL = 1e-9
_ENTRY_FIELDS = ("waveform", "u0", "v0", "a", "b", "phase", "band_radius")
_PLAN_FIELDS = ("entries", "baseband_radius")


@dataclass(frozen=True)
class PlanEntry:
    mask: MaskSpec
    band_radius: float

    def __post_init__(self):
        r = self.band_radius
        if isinstance(r, bool) or not isinstance(r, (int, float, np.floating, np.integer)):
            raise ValidationError(f"band_radius must be a number, got {r!r}")
        if not math.isfinite(r) or r <= 0:
            raise ValidationError(f"band_radius must be positive and finite, got {r}")
        object.__setattr__(self, "band_radius", float(r))


@dataclass(frozen=True)
class SidebandPlan:
    """Carriers, waveforms and band radii for a set of sub-exposure frames."""

    entries: tuple = ()
    baseband_radius: float = 0.0

    def __post_init__(self):
        entries = tuple(self.entries)
        for i, e in enumerate(entries):
            if not isinstance(e, PlanEntry):
                raise ValidationError(f"entries[{i}] must be a PlanEntry, got {type(e).__name__}")
        object.__setattr__(self, "entries", entries)
        rb = self.baseband_radius
        if isinstance(rb, bool) or not isinstance(rb, (int, float, np.floating, np.integer)):
            raise ValidationError(f"baseband_radius must be a number, got {rb!r}")
        if not math.isfinite(rb) or rb < 0:
            raise ValidationError(f"baseband_radius must be non-negative and finite, got {rb}")
        object.__setattr__(self, "baseband_radius", float(rb))

    def __len__(self):
        return len(self.entries)

    @property
    def masks(self):
        return [e.mask for e in self.entries]

    def rescaled(self, factor):
        """Plan with carriers and radii multiplied by ``factor`` (e.g. SLM to sensor units)."""
        factor = float(factor)
        entries = []
        for e in self.entries:
            m = e.mask
            spec = MaskSpec(m.waveform, m.u0 * factor, m.v0 * factor, m.a, m.b, m.phase)
            entries.append(PlanEntry(spec, e.band_radius * factor))
        return SidebandPlan(tuple(entries), self.baseband_radius * factor)

    def to_dict(self):
        return {
            "entries": [
                {
                    "waveform": e.mask.waveform,
                    "u0": e.mask.u0,
                    "v0": e.mask.v0,
                    "a": e.mask.a,
                    "b": e.mask.b,
                    "phase": e.mask.phase,
                    "band_radius": e.band_radius,
                }
                for e in self.entries
            ],
            "baseband_radius": self.baseband_radius,
        }

    @classmethod
    def from_dict(cls, doc):
        """Build a plan from its JSON document, rejecting unknown or missing fields."""
        if not isinstance(doc, dict):
            raise ValidationError("plan document must be a JSON object")
        _check_fields(doc, _PLAN_FIELDS, "plan")
        raw_entries = doc["entries"]
        if not isinstance(raw_entries, list):
            raise ValidationError("plan field 'entries' must be a list")
        entries = []
        for i, raw in enumerate(raw_entries):
            where = f"entries[{i}]"
            if not isinstance(raw, dict):
                raise ValidationError(f"{where} must be a JSON object")
            _check_fields(raw, _ENTRY_FIELDS, where)
            if not isinstance(raw["waveform"], str):
                raise ValidationError(f"{where}.waveform must be a string")
            for key in _ENTRY_FIELDS[1:]:
                value = raw[key]
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise ValidationError(f"{where}.{key} must be a number, got {value!r}")
            try:
                spec = MaskSpec(raw["waveform"], raw["u0"], raw["v0"], raw["a"], raw["b"], raw["phase"])
                entries.append(PlanEntry(spec, raw["band_radius"]))
            except ValidationError as exc:
                raise ValidationError(f"{where}: {exc}") from None
        rb = doc["baseband_radius"]
        if isinstance(rb, bool) or not isinstance(rb, (int, float)):
            raise ValidationError(f"plan field 'baseband_radius' must be a number, got {rb!r}")
        return cls(tuple(entries), rb)

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _check_fields(doc, expected, where):
    unknown = sorted(set(doc) - set(expected))
    if unknown:
        raise ValidationError(f"{where}: unknown field(s) {', '.join(map(repr, unknown))}")
    missing = [k for k in expected if k not in doc]
    if missing:
        raise ValidationError(f"{where}: missing field(s) {', '.join(map(repr, missing))}")


# --------------------------------------------------------------------------
# geometry


@dataclass(frozen=True)
class Disk:
    label: str
    center: tuple
    radius: float
    owner: int  # entry index, -1 for the baseband
    order: int  # harmonic order, 0 for the baseband


@dataclass(frozen=True)
class Violation:
    """A pair of overlapping pass-band disks, or a disk too wide for the spectrum."""

    kind: str  # "overlap" or "escape"
    first: str
    second: str
    overlap: float

    def __str__(self):
        if self.kind == "escape":
            return f"{self.first} exceeds the Nyquist square by {self.overlap:.6g} cycles/pixel"
        return f"{self.first} overlaps {self.second} by {self.overlap:.6g} cycles/pixel"


def harmonic_orders(spec):
    """Harmonic orders that carry energy for a mask waveform."""
    if spec.waveform == "cosine":
        return [1]
    if spec.waveform == "square":
        # odd harmonics have amplitude 2b/(pi*k); keep those above the floor
        kmax = min(HARMONIC_CAP, int(math.floor(2.0 / (math.pi * HARMONIC_FLOOR))))
        return list(range(1, kmax + 1, 2))
    return []


def folded_harmonics(spec):
    """Distinct folded positions ``(k, sign, (u, v))`` of a mask's sidebands.

    Harmonics that land exactly on an earlier position (including the
    fundamental or its conjugate) are merged into it.
    """
    if not spec.is_modulated:
        return []
    c = np.array([spec.u0, spec.v0])
    out = []
    for k in harmonic_orders(spec):
        for sign in (1, -1):
            p = fold(sign * k * c)
            if any(torus_distance(p, q) < _MERGE_TOL for _, _, q in out):
                continue
            out.append((k, sign, (float(p[0]), float(p[1]))))
    return out


def plan_disks(plan, baseband_radius=None):
    """All pass-band disks implied by a plan; the baseband disk comes first."""
    rb = plan.baseband_radius if baseband_radius is None else baseband_radius
    disks = [Disk("baseband", (0.0, 0.0), rb, -1, 0)]
    for i, entry in enumerate(plan.entries):
        for k, sign, p in folded_harmonics(entry.mask):
            s = "+" if sign > 0 else "-"
            what = "carrier" if k == 1 else f"harmonic {k}"
            disks.append(Disk(f"entry {i} {s}{what} at ({p[0]:.6g}, {p[1]:.6g})", p, entry.band_radius, i, k))
    return disks


def _conjugate_index(disks):
    centers = np.array([d.center for d in disks])
    owners = np.array([d.owner for d in disks])
    conj = np.arange(len(disks))
    for i, d in enumerate(disks):
        same = np.flatnonzero(owners == d.owner)
        dist = torus_distance(centers[same], -centers[i])
        j = same[np.argmin(dist)]
        if dist.min() < _MERGE_TOL:
            conj[i] = j
    return conj


def check_plan(plan):
    """List every invariant violation of a plan; empty iff the plan is sound.

    Conjugate-mirrored collisions are reported once.
    """
    disks = plan_disks(plan)
    violations = []
    for d in disks:
        if d.radius > 0.5:
            violations.append(Violation("escape", d.label, d.label, 2.0 * d.radius - 1.0))
    if len(disks) < 2:
        return violations
    centers = np.array([d.center for d in disks])
    radii = np.array([d.radius for d in disks])
    dist = torus_distance(centers[:, None, :], centers[None, :, :])
    overlap = radii[:, None] + radii[None, :] - dist
    conj = _conjugate_index(disks)
    seen = set()
    ii, jj = np.nonzero(np.triu(overlap > _EPS, k=1))
    for i, j in zip(ii.tolist(), jj.tolist()):
        key = frozenset((i, j))
        mirror = frozenset((int(conj[i]), int(conj[j])))
        if mirror in seen:
            continue
        seen.add(key)
        violations.append(Violation("overlap", disks[i].label, disks[j].label, float(overlap[i, j])))
    return violations


# --------------------------------------------------------------------------
# planner


def _canonical_candidates(gw, gh):
    """Carriers on a ``1/gw x 1/gh`` grid, one per conjugate pair, excluding DC."""
    pts = []
    for i in range(0, gw // 2 + 1):
        u = i / gw
        for j in range(-((gh - 1) // 2), gh // 2 + 1):
            v = j / gh
            if i == 0 and j <= 0:
                continue
            if 2 * i == gw and j < 0:
                continue
            pts.append((u, v))
    return np.array(pts, dtype=np.float64)


def _square_phase(u, v):
    # a quarter of the per-sample phase step keeps every sample off a zero
    # crossing, which gives a balanced duty cycle for any even period
    fu = Fraction(u).limit_denominator(1 << 16)
    fv = Fraction(v).limit_denominator(1 << 16)
    period = math.lcm(fu.denominator, fv.denominator)
    return math.pi / (2 * period)


def _make_spec(waveform, c, a, b):
    u, v = float(c[0]), float(c[1])
    phase = _square_phase(u, v) if waveform == "square" else 0.0
    return MaskSpec(waveform, u, v, a, b, phase)


def _slot_orders(cands, n):
    """Candidate index orderings, one per entry slot, for each packing strategy."""
    u, v = cands[:, 0], cands[:, 1]
    rho = np.hypot(u, v)
    ang = np.arctan2(v, u)
    if n <= 4:
        def along(sel):
            idx = np.flatnonzero(sel)
            return idx[np.argsort(-rho[idx], kind="stable")]

        presets = [
            along(v == 0),
            along(u == 0),
            along(np.abs(fold(u - v)) < _EPS),
            along(np.abs(fold(u + v)) < _EPS),
        ]
        return [presets[:n]]
    inside_out = np.lexsort((ang, np.round(rho, 12)))
    outside_in = np.lexsort((ang, -np.round(rho, 12)))
    return [[inside_out] * n, [outside_in] * n]


def _pack_cosine(cands, slots, r, rb):
    avail = np.hypot(cands[:, 0], cands[:, 1]) >= r + rb - _EPS
    self_d = torus_distance(cands, -cands)
    avail &= (self_d < _MERGE_TOL) | (self_d >= 2 * r - _EPS)
    chosen = []
    for order in slots:
        ok = order[avail[order]]
        if ok.size == 0:
            return None
        idx = int(ok[0])
        chosen.append(idx)
        c = cands[idx]
        avail &= torus_distance(cands, c) >= 2 * r - _EPS
        avail &= torus_distance(cands, -c) >= 2 * r - _EPS
    return [cands[i] for i in chosen]


def _pack_square(cands, harmonics, slots, r, rb):
    placed = np.zeros((0, 2))
    chosen = []
    used = set()
    for order in slots:
        pick = None
        for idx in order:
            idx = int(idx)
            if idx in used or harmonics[idx] is None:
                continue
            pts = harmonics[idx]
            if np.any(np.hypot(pts[:, 0], pts[:, 1]) < r + rb - _EPS):
                continue
            if len(pts) > 1:
                own = torus_distance(pts[:, None, :], pts[None, :, :])
                np.fill_diagonal(own, np.inf)
                if np.any(own < 2 * r - _EPS):
                    continue
            if placed.size and np.any(torus_distance(pts[:, None, :], placed[None, :, :]) < 2 * r - _EPS):
                continue
            pick = idx
            break
        if pick is None:
            return None
        used.add(pick)
        chosen.append(cands[pick])
        placed = np.vstack([placed, harmonics[pick]])
    return chosen


class _Packer:
    def __init__(self, n, waveform, gw, gh, a, b):
        self.n, self.waveform, self.a, self.b = n, waveform, a, b
        cands = _canonical_candidates(gw, gh)
        if waveform == "cosine":
            cands = cands[(np.abs(cands[:, 0]) < 0.5) & (np.abs(cands[:, 1]) < 0.5)]
            self.harmonics = None
        else:
            # square carriers are restricted to periods dividing 16 pixels so
            # their harmonics fold onto a small closed set of positions
            on_lattice = (np.abs(cands * 16 - np.round(cands * 16)) < 1e-9).all(axis=1)
            cands = cands[on_lattice]
            self.harmonics = []
            for c in cands:
                pts = [p for _, _, p in folded_harmonics(_make_spec("square", c, a, b))]
                self.harmonics.append(np.array(pts))
        self.cands = cands
        self.strategies = _slot_orders(cands, n)
        if self.harmonics is not None:
            size = np.array([len(h) for h in self.harmonics])
            rho = np.hypot(cands[:, 0], cands[:, 1])
            if n > 4:
                self.strategies = [[np.lexsort((-rho, size))] * n]

    def pack(self, r, rb):
        for slots in self.strategies:
            if self.waveform == "cosine":
                got = _pack_cosine(self.cands, slots, r, rb)
            else:
                got = _pack_square(self.cands, self.harmonics, slots, r, rb)
            if got is not None:
                return got
        return None

    def plan(self, r, rb):
        got = self.pack(r, rb)
        if got is None:
            return None
        entries = tuple(PlanEntry(_make_spec(self.waveform, c, self.a, self.b), r) for c in got)
        return SidebandPlan(entries, rb)


def plan_sidebands(n, waveform="cosine", band_radius="auto", *, baseband_radius=None,
                   shape=None, grid=64, a=0.5, b=0.5, tol=1e-4):
    """Lay out ``n`` non-overlapping sidebands.

    Parameters
    ----------
    n : int
        Number of sub-exposure frames.
    waveform : {"cosine", "square"}
        Mask waveform used for every entry.
    band_radius : float or "auto"
        Pass-band radius in cycles/pixel. ``"auto"`` bisects for the largest
        radius that still packs, to within ``tol``.
    baseband_radius : float, optional
        Radius of the DC disk; defaults to the band radius.
    shape : (H, W), optional
        Snap carriers to the frequency bins of this image size. Without it
        carriers are multiples of ``1/grid``, which is bin-exact for any
        dimension divisible by ``grid``.

    Returns
    -------
    SidebandPlan
        A plan for which :func:`check_plan` reports nothing.

    Notes
    -----
    Up to two frames use axis carriers, up to four add both diagonals;
    larger counts are packed greedily ring by ring over the half plane
    ``u > 0`` (conjugates are implicit).
    """
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ValidationError(f"n must be a positive integer, got {n!r}")
    n = int(n)
    if waveform not in WAVEFORMS or waveform == "constant":
        raise ValidationError(f"waveform must be 'cosine' or 'square', got {waveform!r}")
    if shape is not None:
        gh, gw = int(shape[0]), int(shape[1])
    else:
        gh = gw = int(grid)
    if gw < 2 or gh < 2:
        raise ValidationError(f"frequency grid too coarse: {gw}x{gh}")
    packer = _Packer(n, waveform, gw, gh, a, b)

    def rb_for(r):
        return r if baseband_radius is None else float(baseband_radius)

    def max_feasible():
        lo, hi = tol / 2, 0.5
        if packer.pack(lo, rb_for(lo)) is None:
            return None
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if packer.pack(mid, rb_for(mid)) is None:
                hi = mid
            else:
                lo = mid
        return lo

    if band_radius == "auto":
        r = max_feasible()
        if r is None:
            raise PlanningError(f"cannot place {n} {waveform} sidebands on a {gw}x{gh} grid", None)
        return packer.plan(r, rb_for(r))
    r = float(band_radius)
    if not math.isfinite(r) or r <= 0:
        raise ValidationError(f"band_radius must be positive, got {band_radius!r}")
    plan = packer.plan(r, rb_for(r))
    if plan is None:
        best = max_feasible()
        raise PlanningError(
            f"cannot place {n} {waveform} sidebands with band radius {r:g}; "
            f"maximum feasible radius is {best if best is None else round(best, 6)}",
            best,
        )
    return plan
