"""Device noise parameters: per-qubit T1/T2, gate errors and readout confusion.

Presets carry the calibration tables of four 7-qubit IBM devices and a uniform
16-qubit "simulated" device. Gate durations are not part of those tables and
default to representative transmon values.
"""
from __future__ import annotations

import enum
import json
import math
import warnings
from dataclasses import asdict, dataclass, replace

DEFAULT_DUR_1Q = 35.0  # ns
DEFAULT_DUR_2Q = 300.0  # ns
DEFAULT_DUR_MEAS = 700.0  # ns


class NoiseModelError(ValueError):
    pass


@dataclass(frozen=True)
class QubitNoise:
    t1: float  # us
    t2: float  # us
    err1: float
    err2: float
    ro01: float  # P(read 1 | prepared 0)
    ro10: float  # P(read 0 | prepared 1)


@dataclass(frozen=True)
class NoiseModel:
    qubits: tuple[QubitNoise, ...]
    dur1: float = DEFAULT_DUR_1Q
    dur2: float = DEFAULT_DUR_2Q
    durm: float = DEFAULT_DUR_MEAS
    name: str = "custom"

    def __post_init__(self):
        fixed = []
        for i, q in enumerate(self.qubits):
            for attr in ("err1", "err2", "ro01", "ro10"):
                v = getattr(q, attr)
                if not 0.0 <= v <= 1.0:
                    raise NoiseModelError(f"qubit {i}: {attr}={v} is not a probability")
            if q.t1 <= 0 or q.t2 <= 0:
                raise NoiseModelError(f"qubit {i}: T1/T2 must be positive")
            if q.t2 > 2 * q.t1:
                warnings.warn(f"{self.name} qubit {i}: T2={q.t2} > 2*T1={2 * q.t1}; clamped", stacklevel=3)
                q = replace(q, t2=2 * q.t1)
            fixed.append(q)
        object.__setattr__(self, "qubits", tuple(fixed))

    @property
    def num_qubits(self) -> int:
        return len(self.qubits)

    def qubit(self, i: int) -> QubitNoise:
        if not 0 <= i < len(self.qubits):
            raise NoiseModelError(f"noise model {self.name!r} covers {len(self.qubits)} qubits, asked for {i}")
        return self.qubits[i]

    def check_capacity(self, n: int) -> None:
        if n > len(self.qubits):
            raise NoiseModelError(f"noise model {self.name!r} covers {len(self.qubits)} qubits, circuit has {n}")

    @property
    def is_noiseless(self) -> bool:
        return all(
            q.err1 == 0 and q.err2 == 0 and q.ro01 == 0 and q.ro10 == 0 and math.isinf(q.t1) and math.isinf(q.t2)
            for q in self.qubits
        )

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "qubits": [asdict(q) for q in self.qubits],
            "dur1": self.dur1,
            "dur2": self.dur2,
            "durm": self.durm,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseModel":
        qubits = tuple(QubitNoise(**{k: float(v) for k, v in q.items()}) for q in d["qubits"])
        return cls(
            qubits,
            dur1=float(d.get("dur1", DEFAULT_DUR_1Q)),
            dur2=float(d.get("dur2", DEFAULT_DUR_2Q)),
            durm=float(d.get("durm", DEFAULT_DUR_MEAS)),
            name=d.get("name", "custom"),
        )


def noiseless(n: int = 16) -> NoiseModel:
    inf = math.inf
    return NoiseModel(tuple(QubitNoise(inf, inf, 0.0, 0.0, 0.0, 0.0) for _ in range(n)), name="none")


def depolarizing_only(n: int, p1: float, p2: float = 0.0) -> NoiseModel:
    inf = math.inf
    return NoiseModel(tuple(QubitNoise(inf, inf, p1, p2, 0.0, 0.0) for _ in range(n)), name="depolarizing")


# rows: T1 (us), T2 (us), 1q gate error, 2q gate error, readout 0->1, readout 1->0
_TABLES = {
    "perth": [
        (197.79, 97.02, 0.0001836, 0.00735, 0.0310, 0.0226),
        (158.07, 48.06, 0.0003291, 0.00770, 0.0222, 0.0236),
        (278.36, 83.10, 0.0002153, 0.00694, 0.0282, 0.0230),
        (223.29, 211.00, 0.0002381, 0.00835, 0.0180, 0.0130),
        (109.91, 126.96, 0.0003141, 0.01169, 0.0230, 0.0164),
        (236.63, 188.44, 0.0002563, 0.00981, 0.0264, 0.0208),
        (193.96, 291.83, 0.0003357, 0.00984, 0.0072, 0.0054),
    ],
    "lagos": [
        (96.00, 40.53, 0.0001813, 0.00655, 0.0180, 0.0092),
        (131.71, 75.18, 0.0001439, 0.00770, 0.0192, 0.0178),
        (174.23, 160.96, 0.0002279, 0.00685, 0.0094, 0.0074),
        (139.45, 84.68, 0.0001988, 0.00651, 0.0166, 0.0144),
        (113.32, 29.50, 0.0002090, 0.00723, 0.0210, 0.0198),
        (131.19, 64.52, 0.0001975, 0.00685, 0.0148, 0.0190),
        (93.17, 81.31, 0.0001845, 0.00588, 0.0130, 0.0152),
    ],
    "nairobi": [
        (104.92, 26.07, 0.0002782, 0.01034, 0.0318, 0.0110),
        (141.98, 97.62, 0.0005325, 0.01765, 0.0720, 0.0198),
        (57.67, 69.22, 0.0036500, 0.03446, 0.0406, 0.0116),
        (145.77, 59.13, 0.0003363, 0.01259, 0.0366, 0.0096),
        (99.10, 61.06, 0.0002725, 0.00954, 0.0326, 0.0098),
        (126.61, 16.25, 0.0002855, 0.01118, 0.0432, 0.0204),
        (148.77, 105.21, 0.0002028, 0.00696, 0.0410, 0.0142),
    ],
    "jakarta": [
        (145.55, 47.91, 0.0003194, 0.00806, 0.0282, 0.0070),
        (143.21, 28.18, 0.0002136, 0.00872, 0.0396, 0.0096),
        (110.89, 22.67, 0.0002076, 0.00914, 0.0252, 0.0082),
        (78.53, 36.52, 0.0002149, 0.00776, 0.0254, 0.0112),
        (145.55, 47.91, 0.0003194, 0.00806, 0.0282, 0.0070),
        (128.70, 65.54, 0.0002627, 0.00616, 0.0646, 0.0480),
        (139.55, 21.58, 0.0002507, 0.00577, 0.0400, 0.0244),
    ],
    "simulated": [(197.79, 97.02, 0.0001, 0.0083, 0.01, 0.01)] * 16,
}


class NoisePreset(str, enum.Enum):
    PERTH = "perth"
    LAGOS = "lagos"
    NAIROBI = "nairobi"
    JAKARTA = "jakarta"
    SIMULATED = "simulated"
    NONE = "none"


def preset(name: str | NoisePreset) -> NoiseModel:
    key = NoisePreset(str(name).lower() if not isinstance(name, NoisePreset) else name)
    if key is NoisePreset.NONE:
        return noiseless()
    rows = _TABLES[key.value]
    return NoiseModel(tuple(QubitNoise(*r) for r in rows), name=key.value)


def resolve(noise: str | NoisePreset | NoiseModel | None) -> NoiseModel | None:
    """Preset name, model, or None (noiseless encoding, exact simulation)."""
    if noise is None or isinstance(noise, NoiseModel):
        return noise
    if str(noise).lower() == "none":
        return None
    return preset(noise)


def load_noise_model(path) -> NoiseModel:
    with open(path) as fh:
        return NoiseModel.from_dict(json.load(fh))


def dump_noise_model(nm: NoiseModel) -> str:
    return json.dumps(nm.to_dict(), indent=1)
