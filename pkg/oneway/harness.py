"""
Report builders for the command-line harness.

A Harness turns one validated RunConfig into report rows. Each command maps
to a method; presets sweep fixed parameter sets and attach the laboratory
measurements as diagnostic columns next to the simulated values.
"""

from __future__ import annotations

import json
import logging
import math
import time
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .cluster import (
    ClusterError,
    GraphSpec,
    OrderingMap,
    PhysicalLabel,
    build_cluster,
    describe_lab_ket,
    get_ordering,
    stabilizer_fidelity,
    stabilizer_group,
    to_lab,
    to_physical,
)
from .config import ConfigError, DetectorMap, RunConfig
from .mbqc import Enumerate, Force, RunMode, Sample, load_pattern, run_pattern
from .noise import NoiseSpec, run_pattern_dm
from .protocols import (
    CHAIN,
    CnotJob,
    CphaseJob,
    Oracle,
    RotationJob,
    cnot_ordering,
    run_cnot,
    run_cphase,
    run_rotation,
)
from .report import ReportRow
from .sim.statevec import DensityMatrix, Ket, fidelity_dm, purity

logger = logging.getLogger(__name__)

ROTATION_TABLE_ALPHAS = (0.0, math.pi / 2, math.pi / 4, -math.pi / 4)
CNOT_TABLE_ALPHAS = (math.pi / 2, math.pi / 4)

# Laboratory values, (fidelity, error). Rotation: keyed (alpha, s3) with s2 = 0.
MEASURED_ROTATION: dict[tuple[float, int], tuple[float, float]] = {
    (0.0, 0): (0.961, 0.003),
    (0.0, 1): (0.971, 0.003),
    (math.pi / 2, 0): (0.879, 0.006),
    (math.pi / 2, 1): (0.895, 0.005),
    (math.pi / 4, 0): (0.998, 0.005),
    (math.pi / 4, 1): (0.961, 0.006),
    (-math.pi / 4, 0): (0.833, 0.007),
    (-math.pi / 4, 1): (0.956, 0.006),
}
# Oracle H: keyed (alpha, s1, s4).
MEASURED_CNOT_H: dict[tuple[float, int, int], tuple[float, float]] = {
    (math.pi / 2, 0, 0): (0.965, 0.004),
    (math.pi / 2, 0, 1): (0.975, 0.004),
    (math.pi / 2, 1, 0): (0.972, 0.004),
    (math.pi / 2, 1, 1): (0.973, 0.004),
    (math.pi / 4, 0, 0): (0.995, 0.008),
    (math.pi / 4, 0, 1): (0.902, 0.012),
    (math.pi / 4, 1, 0): (0.946, 0.010),
    (math.pi / 4, 1, 1): (0.945, 0.009),
}
# Oracle identity, s1 = 0: keyed (alpha, control bit, s4).
MEASURED_CNOT_ID: dict[tuple[float, int, int], tuple[float, float]] = {
    (math.pi / 2, 0, 0): (0.932, 0.004),
    (math.pi / 2, 0, 1): (0.959, 0.003),
    (math.pi / 2, 1, 0): (0.941, 0.005),
    (math.pi / 2, 1, 1): (0.940, 0.005),
    (math.pi / 4, 0, 0): (0.919, 0.007),
    (math.pi / 4, 0, 1): (0.932, 0.007),
    (math.pi / 4, 1, 0): (0.878, 0.009),
    (math.pi / 4, 1, 1): (0.959, 0.006),
}
MEASURED_CPHASE = {"+": (0.907, 0.010), "-": (0.908, 0.011)}
MEASURED_STATE_FIDELITY = (0.880, 0.013)
MEASURED_FF_AVERAGE = (0.867, 0.018)

_A_QUBITS = (PhysicalLabel.PI_A, PhysicalLabel.K_A)
_B_QUBITS = (PhysicalLabel.PI_B, PhysicalLabel.K_B)


def format_outcomes(outcomes: Mapping[int, int]) -> str:
    """``{2: 0, 3: 1}`` -> ``"s2=0,s3=1"``."""
    return ",".join(f"s{qubit}={bit}" for qubit, bit in outcomes.items())


def format_amplitudes(state: Ket) -> str:
    return ";".join(f"{a.real:.12g}{a.imag:+.12g}j" for a in state.amplitudes)


def _key(outcomes: Mapping[int, int]) -> tuple[tuple[int, int], ...]:
    return tuple(outcomes.items())


def grid_angles(points: int) -> list[float]:
    """``points`` angles evenly spaced on [0, 2 pi)."""
    return [2 * math.pi * i / points for i in range(points)]


def detector_label(
    ordering: OrderingMap, outcomes: Mapping[int, int], detectors: DetectorMap
) -> str:
    """
    Detectors that fired for a branch, e.g. ``"a2,b1"``.

    Photon A reports only when both its qubits were measured; photon B
    reports when exactly one of its qubits was measured.
    """
    parts = []
    a_positions = [ordering.position_of(label) for label in _A_QUBITS]
    if all(p in outcomes for p in a_positions):
        parts.append(detectors.a_detector(*(outcomes[p] for p in a_positions)))
    b_measured = [
        ordering.position_of(label)
        for label in _B_QUBITS
        if ordering.position_of(label) in outcomes
    ]
    if len(b_measured) == 1:
        parts.append(detectors.b_detector(outcomes[b_measured[0]]))
    return ",".join(parts)


def _measured(
    table: Mapping[tuple, tuple[float, float]], key: tuple
) -> tuple[float | None, float | None]:
    for candidate, value in table.items():
        if all(
            math.isclose(a, b, abs_tol=1e-12) if isinstance(a, float) else a == b
            for a, b in zip(candidate, key)
        ):
            return value
    return None, None


@dataclass
class RunResult:
    rows: list[ReportRow]
    meta: dict[str, Any]
    duration_ms: float = 0.0


@dataclass
class Harness:
    """Runs one command for a validated configuration."""

    config: RunConfig
    _commands: dict[str, Callable[[], list[ReportRow]]] = field(init=False, repr=False)

    def __post_init__(self):
        self._commands = {
            "rotation": self.rotation_rows,
            "cnot": self.cnot_rows,
            "cphase": self.cphase_rows,
            "fidelity": self.fidelity_rows,
            "enumerate": self.enumerate_rows,
            "rotation-table": self.rotation_table_rows,
            "cnot-table": self.cnot_table_rows,
            "ff-compare": self.ff_compare_rows,
            "cphase-avg": self.cphase_average_rows,
        }

    @property
    def commands(self) -> tuple[str, ...]:
        return tuple(self._commands)

    def noise_spec(self) -> NoiseSpec | None:
        """None when the configuration asks for a noiseless run."""
        spec = NoiseSpec(
            white_p=self.config.noise_p,
            depolarizing=tuple(self.config.depol) if self.config.depol else None,
        )
        return None if spec.is_ideal else spec

    def mode(self) -> RunMode:
        if self.config.mode == "sample":
            return Sample(seed=self.config.seed, shots=self.config.shots)
        if self.config.mode == "force":
            return Force(tuple(self.config.force_bits or ()))
        return Enumerate()

    def run(self, command: str | None = None) -> RunResult:
        """
        Execute ``command`` (defaults to the configured protocol).

        Raises:
            ConfigError: If the command is unknown
        """
        command = command or self.config.protocol
        if command not in self._commands:
            raise ConfigError(f"Unknown command '{command}'", key="protocol")
        logger.debug(f"Running {command}")
        start = time.perf_counter()
        rows = self._commands[command]()
        duration_ms = (time.perf_counter() - start) * 1000
        logger.debug(f"{command}: {len(rows)} rows in {duration_ms:.1f}ms")
        meta = {
            "command": command,
            "config": self.config.to_dict(),
            "seed": self.config.seed,
            "version": __version__,
        }
        return RunResult(rows=rows, meta=meta, duration_ms=duration_ms)

    def _row(self, protocol: str, **values: Any) -> ReportRow:
        return ReportRow(
            protocol=protocol,
            noise_p=self.config.noise_p,
            depolarizing=",".join(repr(lam) for lam in self.config.depol or ()),
            ff=self.config.ff,
            **values,
        )

    # Single commands

    def rotation_rows(self) -> list[ReportRow]:
        """Per-branch FF-on and FF-off fidelities; ``fidelity`` follows the ff flag."""
        cfg = self.config
        job = RotationJob(cfg.alpha, cfg.beta, cfg.ordering, cfg.ff, cfg.adaptive)
        noise = self.noise_spec()
        report = run_rotation(job, noise, mode=self.mode())
        clean = run_rotation(job, mode=self.mode()) if noise else report
        ideal = {_key(b.outcomes): clean.fidelity(b) for b in clean.branches}
        ordering = get_ordering(cfg.ordering)
        detectors = cfg.detectors()
        rows = []
        for branch in report.branches:
            rows.append(
                self._row(
                    "rotation",
                    ordering=cfg.ordering,
                    alpha=cfg.alpha,
                    beta=cfg.beta,
                    outcomes=format_outcomes(branch.outcomes),
                    detector=detector_label(ordering, branch.outcomes, detectors),
                    probability=branch.probability,
                    count=branch.count,
                    fidelity=report.fidelity(branch),
                    fidelity_ff_off=branch.fidelity_uncorrected,
                    ideal_fidelity=ideal.get(_key(branch.outcomes)),
                    frame=branch.frame.describe(),
                )
            )
        return rows

    def cnot_rows(self) -> list[ReportRow]:
        """
        One row per control readout plus a joint row per branch.

        The joint row compares the two-qubit output with the closed form of
        its own branch and carries the control purity.
        """
        cfg = self.config
        job = CnotJob(cfg.alpha, Oracle(cfg.oracle), cfg.compensate_ht)
        report = run_cnot(job, self.noise_spec(), mode=self.mode())
        detectors = cfg.detectors()
        ordering = cnot_ordering(cfg.compensate_ht)
        rows = []
        for branch in report.branches:
            common = {
                "ordering": ordering.name,
                "alpha": cfg.alpha,
                "oracle": cfg.oracle,
                "outcomes": format_outcomes(branch.outcomes),
                "detector": detector_label(ordering, branch.outcomes, detectors),
                "frame": branch.frame.describe(),
            }
            for readout in branch.readouts:
                rows.append(
                    self._row(
                        "cnot",
                        control=readout.label,
                        readout=f"|{readout.bit}>_c",
                        probability=branch.probability * readout.probability,
                        fidelity=readout.target_fidelity,
                        **common,
                    )
                )
            rows.append(
                self._row(
                    "cnot",
                    readout="joint",
                    probability=branch.probability,
                    fidelity=branch.fidelity,
                    purity=branch.control_purity,
                    **common,
                )
            )
        return rows

    def cphase_rows(self) -> list[ReportRow]:
        """Conditional target fidelity per branch and control outcome, then the branch itself."""
        cfg = self.config
        job = CphaseJob(cfg.alpha, cfg.beta, adaptive=cfg.adaptive)
        report = run_cphase(job, self.noise_spec(), mode=self.mode())
        rows = []
        for branch in report.branches:
            common = {
                "ordering": "d",
                "alpha": cfg.alpha,
                "beta": cfg.beta,
                "outcomes": format_outcomes(branch.outcomes),
                "frame": branch.frame.describe(),
            }
            for control in ("+", "-"):
                conditional = branch.conditional if cfg.ff else branch.conditional_raw
                rows.append(
                    self._row(
                        "cphase",
                        control=f"|{control}>_kA",
                        probability=branch.probability * branch.control_probability[control],
                        fidelity=conditional[control],
                        **common,
                    )
                )
            rows.append(
                self._row(
                    "cphase",
                    readout="branch",
                    probability=branch.probability,
                    fidelity=branch.fidelity,
                    **common,
                )
            )
        return rows

    def fidelity_rows(self) -> list[ReportRow]:
        """Direct and stabilizer fidelity of the (noisy) lab cluster state."""
        cfg = self.config
        ordering = get_ordering(cfg.ordering)
        target = to_lab(build_cluster(CHAIN), ordering)
        noise = self.noise_spec()
        rho = noise.apply(target) if noise else target.to_density()
        group = stabilizer_group(CHAIN, local=ordering)
        measured, error = MEASURED_STATE_FIDELITY
        return [
            self._row(
                "fidelity",
                ordering=cfg.ordering,
                fidelity=fidelity_dm(rho, target),
                stabilizer_fidelity=stabilizer_fidelity(rho, group),
                purity=purity(rho),
                amplitudes=describe_lab_ket(to_physical(target, ordering)),
                measured_fidelity=measured,
                measured_error=error,
            )
        ]

    def enumerate_rows(self) -> list[ReportRow]:
        """Every branch of a serialized pattern on the chosen input state."""
        cfg = self.config
        pattern = load_pattern(Path(cfg.pattern_file))
        state = self._enumerate_state(pattern.n_qubits)
        noise = self.noise_spec()
        if noise is None:
            branches = run_pattern(state, pattern, self.mode(), adaptive=cfg.adaptive)
        else:
            branches = run_pattern_dm(
                noise.apply(state), pattern, self.mode(), adaptive=cfg.adaptive
            )
        rows = []
        for branch in branches:
            output = branch.output_state
            rows.append(
                self._row(
                    "enumerate",
                    ordering=cfg.ordering if cfg.state == "lab" else "",
                    outcomes=format_outcomes(branch.outcomes),
                    probability=branch.probability,
                    count=getattr(branch, "count", None),
                    purity=purity(output) if isinstance(output, DensityMatrix) else None,
                    frame=branch.frame.describe(),
                    amplitudes=format_amplitudes(output) if isinstance(output, Ket) else "",
                )
            )
        return rows

    def _enumerate_state(self, n_qubits: int) -> Ket:
        source = self.config.state
        if source == "cluster":
            return build_cluster(GraphSpec.chain(n_qubits))
        if source == "lab":
            return to_lab(build_cluster(CHAIN), get_ordering(self.config.ordering))
        path = Path(source)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ClusterError(f"Invalid graph JSON at line {e.lineno}: {e.msg}") from e
        return build_cluster(GraphSpec.from_dict(data))

    # Presets

    def rotation_table_rows(self) -> list[ReportRow]:
        """Ordering b, beta = 0, s2 = 0: each branch against its own closed form."""
        rows = []
        detectors = self.config.detectors()
        for alpha in ROTATION_TABLE_ALPHAS:
            report = run_rotation(RotationJob(alpha, 0.0, "b"), self.noise_spec())
            for branch in report.branches:
                if branch.outcomes[2] != 0:
                    continue
                measured, error = _measured(MEASURED_ROTATION, (alpha, branch.outcomes[3]))
                rows.append(
                    self._row(
                        "rotation",
                        ordering="b",
                        alpha=alpha,
                        beta=0.0,
                        outcomes=format_outcomes(branch.outcomes),
                        detector=detector_label(get_ordering("b"), branch.outcomes, detectors),
                        probability=branch.probability,
                        fidelity=branch.fidelity_branch,
                        measured_fidelity=measured,
                        measured_error=error,
                        frame=branch.frame.describe(),
                    )
                )
        return rows

    def cnot_table_rows(self) -> list[ReportRow]:
        """
        Compensated ordering c, every (oracle, alpha, s1, s4) branch.

        Laboratory values exist for oracle H and for identity with s1 = 0.
        """
        rows = []
        detectors = self.config.detectors()
        ordering = cnot_ordering(True)
        for oracle in (Oracle.HADAMARD, Oracle.IDENTITY):
            for alpha in CNOT_TABLE_ALPHAS:
                report = run_cnot(CnotJob(alpha, oracle), self.noise_spec())
                for branch in report.branches:
                    s1, s4 = branch.outcomes[1], branch.outcomes[4]
                    for readout in branch.readouts:
                        if oracle is Oracle.HADAMARD:
                            key, control = (alpha, s1, s4), f"s1={s1}->{readout.label}"
                            measured, error = _measured(MEASURED_CNOT_H, key)
                        else:
                            control = readout.label
                            measured, error = (
                                _measured(MEASURED_CNOT_ID, (alpha, readout.bit, s4))
                                if s1 == 0
                                else (None, None)
                            )
                        rows.append(
                            self._row(
                                "cnot",
                                ordering=ordering.name,
                                alpha=alpha,
                                oracle=oracle.value,
                                control=control,
                                readout=f"|{readout.bit}>_c",
                                outcomes=format_outcomes(branch.outcomes),
                                detector=detector_label(ordering, branch.outcomes, detectors),
                                probability=branch.probability * readout.probability,
                                fidelity=readout.target_fidelity,
                                measured_fidelity=measured,
                                measured_error=error,
                                frame=branch.frame.describe(),
                            )
                        )
        return rows

    def ff_compare_rows(self) -> list[ReportRow]:
        """
        Ordering a with photon B read on b1 (s1 = 0): one row per A detector
        with FF on and off, then the FF-on average.

        ``ideal_fidelity`` is the noiseless FF-off value.
        """
        cfg = self.config
        detectors = cfg.detectors()
        job = RotationJob(cfg.alpha, cfg.beta, "a", True, cfg.adaptive)
        noise = self.noise_spec()
        report = run_rotation(job, noise)
        clean = run_rotation(job) if noise else report
        ff_off_ideal = {_key(b.outcomes): b.fidelity_uncorrected for b in clean.branches}
        selected = [b for b in report.branches if b.outcomes[1] == 0]
        rows = [
            self._row(
                "rotation",
                ordering="a",
                alpha=cfg.alpha,
                beta=cfg.beta,
                outcomes=format_outcomes(branch.outcomes),
                detector=detector_label(get_ordering("a"), branch.outcomes, detectors),
                probability=branch.probability,
                fidelity=branch.fidelity_corrected,
                fidelity_ff_off=branch.fidelity_uncorrected,
                ideal_fidelity=ff_off_ideal.get(_key(branch.outcomes)),
                frame=branch.frame.describe(),
            )
            for branch in selected
        ]
        rows.sort(key=lambda row: row.detector)
        measured, error = MEASURED_FF_AVERAGE
        weights = [(b.probability, b.fidelity_corrected) for b in selected]
        total = sum(w for w, _ in weights)
        rows.append(
            self._row(
                "rotation",
                ordering="a",
                alpha=cfg.alpha,
                beta=cfg.beta,
                readout="average",
                probability=total,
                fidelity=sum(w * f for w, f in weights) / total if total else 0.0,
                measured_fidelity=measured,
                measured_error=error,
            )
        )
        return rows

    def cphase_average_rows(self) -> list[ReportRow]:
        """Branch-averaged conditional fidelity on a grid x grid (alpha, beta) lattice."""
        cfg = self.config
        angles = grid_angles(cfg.grid)
        noise = self.noise_spec()
        rows = []
        totals: dict[str, list[float]] = {"+": [], "-": []}
        for alpha in angles:
            for beta in angles:
                report = run_cphase(CphaseJob(alpha, beta, adaptive=cfg.adaptive), noise)
                for control in ("+", "-"):
                    value = report.average_conditional(control, corrected=cfg.ff)
                    totals[control].append(value)
                    rows.append(
                        self._row(
                            "cphase",
                            ordering="d",
                            alpha=alpha,
                            beta=beta,
                            control=f"|{control}>_kA",
                            fidelity=value,
                        )
                    )
        for control in ("+", "-"):
            measured, error = MEASURED_CPHASE[control]
            rows.append(
                self._row(
                    "cphase",
                    ordering="d",
                    control=f"|{control}>_kA",
                    readout="average",
                    fidelity=float(np.mean(totals[control])),
                    measured_fidelity=measured,
                    measured_error=error,
                )
            )
        return rows
