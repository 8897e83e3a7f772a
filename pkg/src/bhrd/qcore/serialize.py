"""JSON encoding of density matrices: row-major ``[re, im]`` pairs of IEEE-754 doubles."""

from __future__ import annotations

import json

import numpy as np

from .state import DensityMatrix, as_matrix


def density_to_json(rho) -> dict:
    m = as_matrix(rho)
    return {
        "qubits": int(m.shape[0]).bit_length() - 1,
        "data": [[float(z.real), float(z.imag)] for z in m.reshape(-1)],
    }


def density_from_json(obj: dict | str) -> DensityMatrix:
    if isinstance(obj, str):
        obj = json.loads(obj)
    dim = 1 << int(obj["qubits"])
    data = np.array([complex(re, im) for re, im in obj["data"]], dtype=complex)
    return DensityMatrix(data.reshape(dim, dim))
