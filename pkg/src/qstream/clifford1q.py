"""The 24-element single-qubit Clifford group, indexed by small integer codes.

Codes are assigned in breadth-first order from the identity over the
generators H and S, so every code has a shortest {H, S} word.  Words are
applied left to right: ``WORDS[c] == ("H", "S")`` means H first, then S.
"""

from __future__ import annotations

import numpy as np

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_S = np.array([[1, 0], [0, 1j]], dtype=complex)
GENERATORS = {"H": _H, "S": _S}


def _canon(u: np.ndarray) -> tuple:
    flat = u.reshape(-1)
    k = int(np.flatnonzero(np.abs(flat) > 1e-9)[0])
    v = flat * (abs(flat[k]) / flat[k])
    return tuple(np.round(v, 9).tolist())


def _build():
    mats = [np.eye(2, dtype=complex)]
    words = [()]
    index = {_canon(mats[0]): 0}
    frontier = [0]
    while frontier:
        nxt = []
        for c in frontier:
            for g in ("H", "S"):
                u = GENERATORS[g] @ mats[c]
                key = _canon(u)
                if key not in index:
                    index[key] = len(mats)
                    mats.append(u)
                    words.append(words[c] + (g,))
                    nxt.append(index[key])
        frontier = nxt
    return mats, words, index


MATRICES, WORDS, _INDEX = _build()
N_CLIFFORD = len(MATRICES)
assert N_CLIFFORD == 24
IDENTITY = 0


def code_of(u: np.ndarray) -> int:
    return _INDEX[_canon(u)]


# COMPOSE[a][b]: apply a, then b
COMPOSE = [[code_of(MATRICES[b] @ MATRICES[a]) for b in range(24)] for a in range(24)]
INVERSE = [code_of(MATRICES[a].conj().T) for a in range(24)]

_GATE_MATS = {
    "I": np.eye(2, dtype=complex), "H": _H, "S": _S, "Sdg": _S.conj().T,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1, -1]).astype(complex),
}


def code_of_word(word) -> int:
    """Code of the product of named gates applied in order."""
    u = np.eye(2, dtype=complex)
    for g in word:
        u = _GATE_MATS[g] @ u
    return code_of(u)


def is_diagonal(code: int) -> bool:
    m = MATRICES[code]
    return abs(m[0, 1]) < 1e-9 and abs(m[1, 0]) < 1e-9
