"""Plain-text schedule files: parsing, validation, canonical serialization.

Grammar (line oriented, '#' starts a comment, tokens are key=value pairs):

    system qubits=<int>
    freq q=<int> value=<float> unit=<MHz|GHz>
    g0 value=<float> unit=MHz
    decay q=<int|all> value=<float> unit=MHz
    dephase q=<int|all> value=<float> unit=MHz
    pulse t=<float> q=<int> angle=<float>pi axis=<x|y|flip>
    window t=<float> dur=<float> loop=<a>,<b>,<c> phi=<float>pi,<float>pi,<float>pi

Times are ns.  Linear frequencies convert to rad/ns with a factor 2*pi,
decay rates convert to 1/ns without it.  Angles are written as multiples of
pi so serialized values round-trip without pi-rounding noise.

A parsed document stores the declared numbers exactly as written (in their
declared units); unit conversion happens only in `ScheduleDocument.to_runtime`.
Documents canonicalize their event order on construction (events sorted by
time, pulses keyed by qubit within a tick), and `serialize` emits fixed
6-significant-digit floats, so parse(serialize(doc)) == doc field by field.
Same-time pulses on one qubit keep their written order and are applied in
that order.

Parsing emits a UserWarning (never an error) for windows whose flux is not
a quarter turn, since those windows cannot transfer excitations cleanly.
"""

import math
import re
import warnings
from dataclasses import dataclass, field

from .dynamics import NoiseRates
from .errors import ParseError
from .hamiltonian import LoopWindow, SystemConfig, loop_flux
from .protocol import Schedule
from .states import PulseEvent
from .units import ghz_to_rad_per_ns, mhz_to_rad_per_ns, rate_mhz_to_per_ns

_ANGLE_RE = re.compile(r"^([-+]?[0-9.eE+-]+)pi$")

AXIS_PHASES = {"x": 0.0, "y": math.pi / 2.0}


@dataclass(frozen=True)
class FreqDirective:
    qubit: int
    value: float
    unit: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class RateDirective:
    qubit: object  # int or "all"
    value: float  # MHz
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class PulseDirective:
    time: float
    qubit: int
    angle_pi: float
    axis: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class WindowDirective:
    time: float
    duration: float
    loop: tuple
    phi_pi: tuple
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ScheduleDocument:
    """A schedule file's contents, in declared units, canonically ordered."""

    qubits: int
    g0_mhz: float = None
    freqs: tuple = ()
    decays: tuple = ()
    dephases: tuple = ()
    pulses: tuple = ()
    windows: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "freqs", tuple(self.freqs))
        object.__setattr__(self, "decays", tuple(self.decays))
        object.__setattr__(self, "dephases", tuple(self.dephases))
        object.__setattr__(
            self,
            "pulses",
            tuple(sorted(self.pulses, key=lambda p: (p.time, p.qubit))),
        )
        object.__setattr__(
            self,
            "windows",
            tuple(sorted(self.windows, key=lambda w: (w.time, w.loop))),
        )

    def to_runtime(self):
        """(SystemConfig, Schedule, NoiseRates) in internal units."""
        n = self.qubits
        omega = [0.0] * n
        for f in self.freqs:
            omega[f.qubit - 1] = (
                mhz_to_rad_per_ns(f.value) if f.unit == "MHz" else ghz_to_rad_per_ns(f.value)
            )
        decay = [0.0] * n
        dephasing = [0.0] * n
        for directives, rates in ((self.decays, decay), (self.dephases, dephasing)):
            for d in directives:
                r = rate_mhz_to_per_ns(d.value)
                if d.qubit == "all":
                    rates[:] = [r] * n
                else:
                    rates[d.qubit - 1] = r
        g0 = mhz_to_rad_per_ns(self.g0_mhz) if self.g0_mhz is not None else 1.0
        config = SystemConfig(n, tuple(omega), g0, tuple(decay), tuple(dephasing))
        pulses = []
        for p in self.pulses:
            if p.axis == "flip":
                pulses.append(PulseEvent(p.time, p.qubit, math.pi, 0.0, "flip-x"))
            else:
                pulses.append(
                    PulseEvent(p.time, p.qubit, p.angle_pi * math.pi, AXIS_PHASES[p.axis])
                )
        windows = [
            LoopWindow(
                w.loop, w.time, w.duration,
                tuple(phi * math.pi for phi in w.phi_pi), g0_override=g0,
            )
            for w in self.windows
        ]
        schedule = Schedule(n, tuple(pulses), tuple(windows))
        return config, schedule, NoiseRates(tuple(decay), tuple(dephasing))


def _fmt(x):
    """Canonical 6-significant-digit float."""
    return f"{x:.6g}"


def _quantize(x):
    return float(_fmt(x))


def _parse_float(text, line):
    try:
        return float(text)
    except ValueError:
        raise ParseError("malformed number", line, text) from None


def _parse_int(text, line):
    try:
        return int(text)
    except ValueError:
        raise ParseError("malformed integer", line, text) from None


def _parse_angle(text, line):
    m = _ANGLE_RE.match(text)
    if not m:
        raise ParseError("angles must be written as multiples of pi, e.g. 0.5pi", line, text)
    return _parse_float(m.group(1), line)


def _keyvals(tokens, line, required):
    got = {}
    for tok in tokens:
        if "=" not in tok:
            raise ParseError("expected key=value token", line, tok)
        key, _, val = tok.partition("=")
        if key not in required:
            raise ParseError(f"unknown key {key!r}", line, tok)
        if key in got:
            raise ParseError(f"duplicate key {key!r}", line, tok)
        got[key] = val
    missing = [k for k in required if k not in got]
    if missing:
        raise ParseError(f"missing key {missing[0]!r}", line)
    return got


def parse(text):
    """Parse a schedule document, validating ranges and window overlaps.

    Raises ParseError (with a 1-based line number and the offending token)
    on malformed or inconsistent input.
    """
    qubits = None
    system_line = None
    g0_mhz = None
    freqs, decays, dephases, pulses, windows = [], [], [], [], []

    def need_system(line):
        if qubits is None:
            raise ParseError("the system directive must come first", line)

    def check_qubit(q, line, token):
        if not 1 <= q <= qubits:
            raise ParseError(f"qubit {q} outside 1..{qubits}", line, token)

    for lineno, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0].strip()
        if not content:
            continue
        tokens = content.split()
        directive, args = tokens[0], tokens[1:]
        if directive == "system":
            if qubits is not None:
                raise ParseError(
                    f"duplicate system directive (first on line {system_line})", lineno
                )
            kv = _keyvals(args, lineno, ("qubits",))
            qubits = _parse_int(kv["qubits"], lineno)
            if qubits < 1:
                raise ParseError("qubit count must be positive", lineno, kv["qubits"])
            system_line = lineno
        elif directive == "freq":
            need_system(lineno)
            kv = _keyvals(args, lineno, ("q", "value", "unit"))
            q = _parse_int(kv["q"], lineno)
            check_qubit(q, lineno, f"q={kv['q']}")
            if kv["unit"] not in ("MHz", "GHz"):
                raise ParseError("unit must be MHz or GHz", lineno, kv["unit"])
            freqs.append(FreqDirective(q, _parse_float(kv["value"], lineno), kv["unit"], lineno))
        elif directive == "g0":
            need_system(lineno)
            kv = _keyvals(args, lineno, ("value", "unit"))
            if kv["unit"] != "MHz":
                raise ParseError("g0 takes unit=MHz", lineno, kv["unit"])
            if g0_mhz is not None:
                raise ParseError("duplicate g0 directive", lineno)
            g0_mhz = _parse_float(kv["value"], lineno)
            if g0_mhz <= 0:
                raise ParseError("g0 must be positive", lineno, kv["value"])
        elif directive in ("decay", "dephase"):
            need_system(lineno)
            kv = _keyvals(args, lineno, ("q", "value", "unit"))
            if kv["unit"] != "MHz":
                raise ParseError(f"{directive} takes unit=MHz", lineno, kv["unit"])
            if kv["q"] == "all":
                q = "all"
            else:
                q = _parse_int(kv["q"], lineno)
                check_qubit(q, lineno, f"q={kv['q']}")
            value = _parse_float(kv["value"], lineno)
            if value < 0:
                raise ParseError("rates must be >= 0", lineno, kv["value"])
            (decays if directive == "decay" else dephases).append(
                RateDirective(q, value, lineno)
            )
        elif directive == "pulse":
            need_system(lineno)
            kv = _keyvals(args, lineno, ("t", "q", "angle", "axis"))
            q = _parse_int(kv["q"], lineno)
            check_qubit(q, lineno, f"q={kv['q']}")
            angle = _parse_angle(kv["angle"], lineno)
            if not 0 < angle <= 2:
                raise ParseError("pulse angle must lie in (0pi, 2pi]", lineno, kv["angle"])
            axis = kv["axis"]
            if axis not in ("x", "y", "flip"):
                raise ParseError("axis must be x, y or flip", lineno, kv["axis"])
            if axis == "flip" and abs(angle - 1.0) > 1e-12:
                raise ParseError("flip pulses require angle=1pi", lineno, kv["angle"])
            pulses.append(
                PulseDirective(_parse_float(kv["t"], lineno), q, angle, axis, lineno)
            )
        elif directive == "window":
            need_system(lineno)
            kv = _keyvals(args, lineno, ("t", "dur", "loop", "phi"))
            loop_parts = kv["loop"].split(",")
            if len(loop_parts) != 3:
                raise ParseError("loop takes three comma-separated qubits", lineno, kv["loop"])
            loop = tuple(_parse_int(p, lineno) for p in loop_parts)
            for q in loop:
                check_qubit(q, lineno, kv["loop"])
            if len(set(loop)) != 3:
                raise ParseError("loop qubits must be distinct", lineno, kv["loop"])
            phi_parts = kv["phi"].split(",")
            if len(phi_parts) != 3:
                raise ParseError("phi takes three comma-separated angles", lineno, kv["phi"])
            phi = tuple(_parse_angle(p, lineno) for p in phi_parts)
            dur = _parse_float(kv["dur"], lineno)
            if dur <= 0:
                raise ParseError("window duration must be positive", lineno, kv["dur"])
            windows.append(
                WindowDirective(_parse_float(kv["t"], lineno), dur, loop, phi, lineno)
            )
        else:
            raise ParseError("unknown directive", lineno, directive)

    if qubits is None:
        raise ParseError("missing system directive", max(1, len(text.splitlines())))
    if windows and g0_mhz is None:
        raise ParseError("windows need a g0 directive", windows[0].line)

    _validate(qubits, pulses, windows)
    for w in windows:
        flux = loop_flux(
            LoopWindow(w.loop, w.time, w.duration, tuple(p * math.pi for p in w.phi_pi))
        )
        if abs(abs(flux) - math.pi / 2) > 1e-9:
            warnings.warn(
                f"window at t={w.time:g} on loop {w.loop} has flux "
                f"{flux / math.pi:g}pi, not a quarter turn; excitation transfer "
                "will be imperfect",
                UserWarning,
                stacklevel=2,
            )
    return ScheduleDocument(
        qubits=qubits, g0_mhz=g0_mhz, freqs=tuple(freqs), decays=tuple(decays),
        dephases=tuple(dephases), pulses=tuple(pulses), windows=tuple(windows),
    )


def _validate(qubits, pulses, windows):
    for i, wa in enumerate(windows):
        for wb in windows[i + 1 :]:
            shared = set(wa.loop) & set(wb.loop)
            if not shared:
                continue
            if wa.time < wb.time + wb.duration and wb.time < wa.time + wa.duration:
                raise ParseError(
                    f"window overlaps the one on line {wa.line} "
                    f"(shared qubit {min(shared)})",
                    wb.line,
                )
    for p in pulses:
        for w in windows:
            if p.qubit in w.loop and w.time < p.time < w.time + w.duration:
                raise ParseError(
                    f"pulse on qubit {p.qubit} falls inside the window on line {w.line}",
                    p.line,
                )


def serialize(doc):
    """Canonical text for a document: fixed directive order, LF endings,
    6-significant-digit floats, events merged by time with pulses first."""
    lines = [f"system qubits={doc.qubits}"]
    for f in doc.freqs:
        lines.append(f"freq q={f.qubit} value={_fmt(f.value)} unit={f.unit}")
    if doc.g0_mhz is not None:
        lines.append(f"g0 value={_fmt(doc.g0_mhz)} unit=MHz")
    for d in doc.decays:
        lines.append(f"decay q={d.qubit} value={_fmt(d.value)} unit=MHz")
    for d in doc.dephases:
        lines.append(f"dephase q={d.qubit} value={_fmt(d.value)} unit=MHz")
    events = [(p.time, 0, f"pulse t={_fmt(p.time)} q={p.qubit} "
               f"angle={_fmt(p.angle_pi)}pi axis={p.axis}") for p in doc.pulses]
    events += [
        (w.time, 1, f"window t={_fmt(w.time)} dur={_fmt(w.duration)} "
         f"loop={w.loop[0]},{w.loop[1]},{w.loop[2]} "
         f"phi={_fmt(w.phi_pi[0])}pi,{_fmt(w.phi_pi[1])}pi,{_fmt(w.phi_pi[2])}pi")
        for w in doc.windows
    ]
    events.sort(key=lambda e: (e[0], e[1]))
    lines += [e[2] for e in events]
    return "\n".join(lines) + "\n"


def document_from_schedule(schedule, g0=None, noise=None):
    """Express a Schedule as a document (values quantized to 6 digits).

    Only pulse/window schedules are expressible; CNOT events have no
    directive in the format.
    """
    if schedule.cnots:
        raise ValueError("schedules with CNOT events cannot be written as documents")
    g0 = g0 if g0 is not None else next(
        (w.g0_override for w in schedule.windows if w.g0_override is not None), None
    )
    g0_mhz = None if g0 is None else _quantize(g0 * 1e3 / (2 * math.pi))
    pulses = []
    for p in schedule.pulses:
        if p.kind == "flip-x":
            axis, angle_pi = "flip", 1.0
        elif abs(p.axis_phase - math.pi / 2) < 1e-12:
            axis, angle_pi = "y", _quantize(p.angle / math.pi)
        elif abs(p.axis_phase) < 1e-12:
            axis, angle_pi = "x", _quantize(p.angle / math.pi)
        else:
            raise ValueError(f"pulse axis phase {p.axis_phase:g} is not x, y or flip")
        pulses.append(PulseDirective(_quantize(p.time), p.qubit, angle_pi, axis))
    windows = [
        WindowDirective(
            _quantize(w.start), _quantize(w.duration), w.qubits,
            tuple(_quantize(p / math.pi) for p in w.phases),
        )
        for w in schedule.windows
    ]
    decays, dephases = [], []
    if noise is not None:
        for rates, out in ((noise.decay, decays), (noise.dephasing, dephases)):
            for q, r in enumerate(rates, start=1):
                if r != 0.0:
                    out.append(RateDirective(q, _quantize(r * 1e3)))
    return ScheduleDocument(
        qubits=schedule.n_qubits, g0_mhz=g0_mhz, pulses=tuple(pulses),
        windows=tuple(windows), decays=tuple(decays), dephases=tuple(dephases),
    )
