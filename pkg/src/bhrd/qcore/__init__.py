"""Exact state-vector simulation: registers, unitaries, measurement, channels, distances."""

from . import gates
from .channel import (
    Channel,
    ChannelBuilder,
    ChannelError,
    Distinguisher,
    align_outputs,
    apply_channel,
    computational_distinguisher,
    constant_distinguisher,
    discard_and_prepare,
    identity_channel,
    prepare,
    projector_distinguisher,
    random_channel,
    random_distinguisher,
    random_unitary,
)
from .measures import (
    EPR,
    accept_probability,
    advantage,
    epr_overlap,
    helstrom_projector,
    pure_density,
    trace_distance,
)
from .ops import Gate, Op, Select, adjoint, apply_ops, remap
from .rng import SeededRng, as_rng
from .serialize import density_from_json, density_to_json
from .state import (
    ATOL_ALGEBRA,
    ATOL_REDUCTION,
    ATOL_SPECTRAL,
    MAX_DENSITY_QUBITS,
    MAX_PURE_QUBITS,
    DensityMatrix,
    LayoutError,
    PureState,
    RegisterLayout,
    SizeLimitError,
    apply_unitary,
    fidelity_pure,
    from_vector,
    init_state,
    measure,
    overlap,
    probabilities,
    reduced_density,
    tensor_product,
)
