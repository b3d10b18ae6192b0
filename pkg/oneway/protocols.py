"""
Pre-built one-way algorithms on the four-qubit chain.

Each protocol has a pattern written for the chain cluster, the same pattern
rewritten for the lab encoding of its ordering, and a closed-form circuit
reference for every measurement branch:

- single-qubit rotation R_x(beta) R_z(alpha), orderings a and b
- C-NOT with an equatorial target, ordering c
- C-Phase with an arbitrary target, ordering d
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any

import numpy as np

from .cluster import ClusterError, GraphSpec, OrderingMap, build_cluster, get_ordering, to_lab
from .mbqc import (
    BranchResult,
    ByproductRule,
    Enumerate,
    Force,
    MeasurementSpec,
    Pattern,
    PauliFrame,
    Plane,
    RunMode,
    apply_byproduct,
    apply_frame,
    lab_pattern,
    run_pattern,
)
from .noise import DensityBranch, NoiseSpec, apply_frame_dm, run_pattern_dm
from .sim.gates import CNOT, CZ, MINUS, PLUS, H, X, Z, rx, rz, z_ket
from .sim.statevec import (
    DensityMatrix,
    Ket,
    apply_1q,
    apply_2q,
    contract,
    fidelity_dm,
    overlap_fidelity,
    partial_trace,
    project,
    project_dm,
    purity,
)

logger = logging.getLogger(__name__)

CHAIN = GraphSpec.chain(4)

State = Ket | DensityMatrix


def fidelity(state: State, target: Ket) -> float:
    if isinstance(state, DensityMatrix):
        return fidelity_dm(state, target)
    return overlap_fidelity(state, target)


def correct(state: State, frame: PauliFrame) -> State:
    if isinstance(state, DensityMatrix):
        return apply_frame_dm(state, frame)
    return apply_frame(state, frame)


def condition(state: State, position: int, onto: np.ndarray) -> tuple[float, State | None]:
    """
    Project one qubit of a two-qubit output and return the other qubit.

    Returns:
        Tuple of (probability, remaining one-qubit state or None)
    """
    other = 2 if position == 1 else 1
    if isinstance(state, DensityMatrix):
        probability, collapsed = project_dm(state, position, onto, force=True)
        if collapsed is None:
            return probability, None
        return probability, partial_trace(collapsed, [other])
    probability, collapsed = project(state, position, onto, force=True)
    if collapsed is None:
        return probability, None
    return probability, contract(collapsed, position, onto)


def _run(
    ordering: OrderingMap,
    pattern: Pattern,
    noise: NoiseSpec | None,
    mode: RunMode,
    adaptive: bool,
) -> list[BranchResult] | list[DensityBranch]:
    state = to_lab(build_cluster(CHAIN), ordering)
    if noise is None:
        return run_pattern(state, pattern, mode, adaptive=adaptive)
    return run_pattern_dm(noise.apply(state), pattern, mode, adaptive=adaptive)


def _mode(branch_filter: tuple[int, ...] | None, mode: RunMode | None) -> RunMode:
    if mode is not None:
        return mode
    if branch_filter is not None:
        return Force(branch_filter)
    return Enumerate()


def _live(branches: list[Any]) -> list[Any]:
    return [branch for branch in branches if branch.output_state is not None]


def _weighted(values: list[tuple[float, float]]) -> float:
    total = sum(weight for weight, _ in values)
    if total == 0:
        return 0.0
    return sum(weight * value for weight, value in values) / total


# Single-qubit rotation


ROTATION_ORDERINGS = ("a", "b")


@dataclass(frozen=True)
class RotationJob:
    alpha: float
    beta: float
    ordering: str = "a"
    ff_enabled: bool = True
    adaptive: bool = True
    branch_filter: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.ordering not in ROTATION_ORDERINGS:
            raise ClusterError(
                f"Rotation runs on orderings {ROTATION_ORDERINGS}", ordering=self.ordering
            )
        if self.branch_filter is not None:
            object.__setattr__(self, "branch_filter", tuple(self.branch_filter))

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["branch_filter"] = list(self.branch_filter) if self.branch_filter else None
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> RotationJob:
        fields = dict(data)
        if fields.get("branch_filter") is not None:
            fields["branch_filter"] = tuple(fields["branch_filter"])
        return cls(**fields)


def computational_rotation_pattern(alpha: float, beta: float) -> Pattern:
    """Z on qubit 1, alpha on qubit 2, +-beta on qubit 3 (sign set by qubit 2)."""
    return Pattern(
        steps=(
            MeasurementSpec(1, Plane.Z_BASIS, label="input"),
            MeasurementSpec(2, Plane.EQUATORIAL, alpha, label="alpha"),
            MeasurementSpec(3, Plane.EQUATORIAL, beta, frozenset({2}), label="beta"),
        ),
        outputs=(4,),
        byproduct_rules=(ByproductRule(4, x=frozenset({3}), z=frozenset({2})),),
    )


def rotation_pattern(job: RotationJob) -> Pattern:
    return lab_pattern(
        computational_rotation_pattern(job.alpha, job.beta), get_ordering(job.ordering)
    )


def rotation_input(s1: int) -> np.ndarray:
    return np.array(MINUS if s1 else PLUS)


def rotation_reference(
    alpha: float, beta: float, s1: int, s2: int, s3: int, ordering: str = "a"
) -> Ket:
    """
    Expected lab output of a rotation branch.

    Ordering a gives X^s2 Z^s3 H R_x(beta) R_z(alpha) |chi>, ordering b has an
    extra Z after the H. |chi> is |+> for s1 = 0 and |-> otherwise.
    """
    vector = H @ rx(beta) @ rz(alpha) @ rotation_input(s1)
    if ordering == "b":
        vector = Z @ vector
    return apply_byproduct(Ket(vector), PauliFrame((4,), (s2,), (s3,)))


@dataclass
class RotationBranch:
    outcomes: dict[int, int]
    probability: float
    frame: PauliFrame
    fidelity_corrected: float
    fidelity_uncorrected: float
    fidelity_branch: float
    count: int | None = None

    @property
    def bits(self) -> tuple[int, ...]:
        return tuple(self.outcomes.values())


@dataclass
class RotationReport:
    job: RotationJob
    branches: list[RotationBranch] = field(default_factory=list)
    noise: NoiseSpec | None = None

    def fidelity(self, branch: RotationBranch) -> float:
        """The fidelity the job's feed-forward setting delivers."""
        return branch.fidelity_corrected if self.job.ff_enabled else branch.fidelity_uncorrected

    def average(self, corrected: bool | None = None) -> float:
        if corrected is None:
            corrected = self.job.ff_enabled
        return _weighted(
            [
                (
                    b.probability,
                    b.fidelity_corrected if corrected else b.fidelity_uncorrected,
                )
                for b in self.branches
            ]
        )


def run_rotation(
    job: RotationJob, noise: NoiseSpec | None = None, *, mode: RunMode | None = None
) -> RotationReport:
    """
    Run the rotation pattern and score every branch.

    Corrected and uncorrected fidelities compare against the s2 = s3 = 0
    reference for the branch's own input bit; the branch fidelity compares
    the raw output with that branch's closed form.
    """
    pattern = rotation_pattern(job)
    branches = _run(
        get_ordering(job.ordering), pattern, noise, _mode(job.branch_filter, mode), job.adaptive
    )
    report = RotationReport(job=job, noise=noise)
    for branch in _live(branches):
        s1, s2, s3 = branch.outcomes[1], branch.outcomes[2], branch.outcomes[3]
        ideal = rotation_reference(job.alpha, job.beta, s1, 0, 0, job.ordering)
        own = rotation_reference(job.alpha, job.beta, s1, s2, s3, job.ordering)
        output = branch.output_state
        report.branches.append(
            RotationBranch(
                outcomes=branch.outcomes,
                probability=branch.probability,
                frame=branch.frame,
                fidelity_corrected=fidelity(correct(output, branch.frame), ideal),
                fidelity_uncorrected=fidelity(output, ideal),
                fidelity_branch=fidelity(output, own),
                count=getattr(branch, "count", None),
            )
        )
    logger.debug(
        f"Rotation alpha={job.alpha:.6f} beta={job.beta:.6f} ordering {job.ordering}: "
        f"{len(report.branches)} branches"
    )
    return report


# C-NOT


class Oracle(str, Enum):
    """Operator applied to the control input by the first measurement."""

    IDENTITY = "id"
    HADAMARD = "h"


@dataclass(frozen=True)
class CnotJob:
    alpha: float
    o_choice: Oracle = Oracle.HADAMARD
    compensate_ht: bool = True
    branch_filter: tuple[int, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "o_choice", Oracle(self.o_choice))
        if self.branch_filter is not None:
            object.__setattr__(self, "branch_filter", tuple(self.branch_filter))

    def to_dict(self) -> dict[str, Any]:
        return {
            "alpha": self.alpha,
            "o_choice": self.o_choice.value,
            "compensate_ht": self.compensate_ht,
            "branch_filter": list(self.branch_filter) if self.branch_filter else None,
        }


def cnot_ordering(compensate_ht: bool = True) -> OrderingMap:
    """Ordering c, with a Hadamard on the target when compensating."""
    ordering = get_ordering("c")
    return ordering.compensated(3, "H") if compensate_ht else ordering


def computational_cnot_pattern(alpha: float, o_choice: Oracle | str) -> Pattern:
    if Oracle(o_choice) is Oracle.HADAMARD:
        first = MeasurementSpec(1, Plane.EQUATORIAL, 0.0, label="control")
    else:
        first = MeasurementSpec(1, Plane.Z_BASIS, label="control")
    return Pattern(
        steps=(first, MeasurementSpec(4, Plane.EQUATORIAL, alpha, label="target")),
        outputs=(2, 3),
        byproduct_rules=(
            ByproductRule(2, z=frozenset({4})),
            ByproductRule(3, x=frozenset({4})),
        ),
    )


def cnot_pattern(job: CnotJob) -> Pattern:
    return lab_pattern(
        computational_cnot_pattern(job.alpha, job.o_choice), cnot_ordering(job.compensate_ht)
    )


def cnot_control_input(o_choice: Oracle | str, s1: int) -> np.ndarray:
    vector = rotation_input(s1)
    if Oracle(o_choice) is Oracle.HADAMARD:
        vector = H @ vector
    return vector


def cnot_reference(
    alpha: float, o_choice: Oracle | str, s1: int, s4: int, compensate_ht: bool = True
) -> Ket:
    """
    Sigma^s4 X_c CNOT (O Z^s1 |+> x R_z(alpha) |+>), Sigma = Z_c Z_t.

    Without compensation the target also carries a Hadamard.
    """
    state = Ket.product(cnot_control_input(o_choice, s1), rz(alpha) @ PLUS)
    state = apply_2q(state, CNOT, 1, 2)
    state = apply_1q(state, X, 1)
    if s4:
        state = apply_1q(apply_1q(state, Z, 1), Z, 2)
    if not compensate_ht:
        state = apply_1q(state, H, 2)
    return state


def control_label(bit: int) -> str:
    """Control readout; the control output lives on the k_B momentum qubit."""
    return f"|{bit}>_c=|{'lr'[bit]}>_kB"


@dataclass
class ControlReadout:
    bit: int
    label: str
    probability: float
    target_fidelity: float


@dataclass
class CnotBranch:
    outcomes: dict[int, int]
    probability: float
    frame: PauliFrame
    fidelity: float
    fidelity_corrected: float
    control_purity: float
    readouts: list[ControlReadout] = field(default_factory=list)


@dataclass
class CnotReport:
    job: CnotJob
    branches: list[CnotBranch] = field(default_factory=list)
    noise: NoiseSpec | None = None


def _control_purity(state: State) -> float:
    rho = state if isinstance(state, DensityMatrix) else state.to_density()
    return purity(partial_trace(rho, [1]))


def _readouts(output: State, reference: Ket) -> list[ControlReadout]:
    readouts = []
    for bit in (0, 1):
        expected_p, expected = condition(reference, 1, z_ket(bit))
        if expected is None:
            continue
        p, target = condition(output, 1, z_ket(bit))
        readouts.append(
            ControlReadout(
                bit=bit,
                label=control_label(bit),
                probability=p,
                target_fidelity=fidelity(target, expected) if target is not None else 0.0,
            )
        )
    return readouts


def run_cnot(
    job: CnotJob, noise: NoiseSpec | None = None, *, mode: RunMode | None = None
) -> CnotReport:
    """
    Run the C-NOT pattern; readouts condition the raw output on the control bit.
    """
    ordering = cnot_ordering(job.compensate_ht)
    branches = _run(ordering, cnot_pattern(job), noise, _mode(job.branch_filter, mode), True)
    report = CnotReport(job=job, noise=noise)
    for branch in _live(branches):
        s1, s4 = branch.outcomes[1], branch.outcomes[4]
        reference = cnot_reference(job.alpha, job.o_choice, s1, s4, job.compensate_ht)
        ideal = cnot_reference(job.alpha, job.o_choice, s1, 0, job.compensate_ht)
        output = branch.output_state
        report.branches.append(
            CnotBranch(
                outcomes=branch.outcomes,
                probability=branch.probability,
                frame=branch.frame,
                fidelity=fidelity(output, reference),
                fidelity_corrected=fidelity(correct(output, branch.frame), ideal),
                control_purity=_control_purity(output),
                readouts=_readouts(output, reference),
            )
        )
    return report


# C-Phase


@dataclass(frozen=True)
class CphaseJob:
    alpha: float
    beta: float
    branch_filter: tuple[int, ...] | None = None
    adaptive: bool = True

    def __post_init__(self):
        if self.branch_filter is not None:
            object.__setattr__(self, "branch_filter", tuple(self.branch_filter))

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["branch_filter"] = list(self.branch_filter) if self.branch_filter else None
        return data


CPHASE_ORDERING = "d"


def computational_cphase_pattern(alpha: float, beta: float) -> Pattern:
    return Pattern(
        steps=(
            MeasurementSpec(1, Plane.EQUATORIAL, alpha, label="alpha"),
            MeasurementSpec(2, Plane.EQUATORIAL, beta, frozenset({1}), label="beta"),
        ),
        outputs=(3, 4),
        byproduct_rules=(
            ByproductRule(3, x=frozenset({2}), z=frozenset({1})),
            ByproductRule(4, z=frozenset({2})),
        ),
    )


def cphase_pattern(job: CphaseJob) -> Pattern:
    return lab_pattern(
        computational_cphase_pattern(job.alpha, job.beta), get_ordering(CPHASE_ORDERING)
    )


def phi_target(alpha: float, beta: float) -> np.ndarray:
    """|Phi> = R_x(beta) R_z(alpha) |+>."""
    return rx(beta) @ rz(alpha) @ PLUS


def cphase_output_state(alpha: float, beta: float) -> Ket:
    """(|->|X Phi> + |+>|X Z Phi>) / sqrt(2), control k_A first."""
    phi = phi_target(alpha, beta)
    vector = np.kron(MINUS, X @ phi) + np.kron(PLUS, X @ Z @ phi)
    return Ket(vector / np.sqrt(2))


def cphase_circuit_state(alpha: float, beta: float) -> Ket:
    """(Z H x X) CZ (|+> x |Phi>), control first."""
    state = Ket.product(PLUS, phi_target(alpha, beta))
    state = apply_2q(state, CZ, 1, 2)
    return apply_1q(apply_1q(state, Z @ H, 1), X, 2)


def cphase_reference(alpha: float, beta: float, s1: int, s2: int) -> Ket:
    """Branch output (X^s2 Z^s1 x X^s2) applied to the s = 00 state, order (k_B, k_A)."""
    state = cphase_output_state(alpha, beta)
    state = Ket(state.tensor().T.reshape(-1))
    return apply_byproduct(state, PauliFrame((3, 4), (s2, s2), (s1, 0)))


def conditional_targets(alpha: float, beta: float) -> dict[str, Ket]:
    """Target expected on k_B after the control k_A is found in |+> or |->."""
    phi = phi_target(alpha, beta)
    return {"+": Ket(X @ Z @ phi), "-": Ket(X @ phi)}


@dataclass
class CphaseBranch:
    outcomes: dict[int, int]
    probability: float
    frame: PauliFrame
    fidelity: float
    fidelity_corrected: float
    conditional: dict[str, float] = field(default_factory=dict)
    conditional_raw: dict[str, float] = field(default_factory=dict)
    control_probability: dict[str, float] = field(default_factory=dict)


@dataclass
class CphaseReport:
    job: CphaseJob
    branches: list[CphaseBranch] = field(default_factory=list)
    noise: NoiseSpec | None = None

    def average_conditional(self, control: str, corrected: bool = True) -> float:
        return _weighted(
            [
                (b.probability, (b.conditional if corrected else b.conditional_raw)[control])
                for b in self.branches
            ]
        )


def _conditional(state: State, targets: dict[str, Ket]) -> tuple[dict[str, float], dict[str, float]]:
    fidelities, probabilities = {}, {}
    for control, ket in (("+", PLUS), ("-", MINUS)):
        p, target = condition(state, 2, ket)
        probabilities[control] = p
        fidelities[control] = fidelity(target, targets[control]) if target is not None else 0.0
    return fidelities, probabilities


def run_cphase(
    job: CphaseJob, noise: NoiseSpec | None = None, *, mode: RunMode | None = None
) -> CphaseReport:
    """
    Run the C-Phase pattern.

    Outputs are ordered (k_B, k_A): target first, control second.
    """
    branches = _run(
        get_ordering(CPHASE_ORDERING),
        cphase_pattern(job),
        noise,
        _mode(job.branch_filter, mode),
        job.adaptive,
    )
    targets = conditional_targets(job.alpha, job.beta)
    ideal = cphase_reference(job.alpha, job.beta, 0, 0)
    report = CphaseReport(job=job, noise=noise)
    for branch in _live(branches):
        s1, s2 = branch.outcomes[1], branch.outcomes[2]
        output = branch.output_state
        corrected = correct(output, branch.frame)
        conditional, probabilities = _conditional(corrected, targets)
        raw, _ = _conditional(output, targets)
        report.branches.append(
            CphaseBranch(
                outcomes=branch.outcomes,
                probability=branch.probability,
                frame=branch.frame,
                fidelity=fidelity(output, cphase_reference(job.alpha, job.beta, s1, s2)),
                fidelity_corrected=fidelity(corrected, ideal),
                conditional=conditional,
                conditional_raw=raw,
                control_probability=probabilities,
            )
        )
    return report
