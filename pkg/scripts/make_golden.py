"""Regenerate tests/golden/*.hex from the three reference chunks.

Only rerun this after an intentional wire-format change; the test suite
compares fresh encodings against the committed files byte for byte.
"""

from pathlib import Path

from qstream.circuit import KIND, Tag
from qstream.compiler import compile_chunk
from qstream.wire import encode_chunk

H, T, TDG, CX = (KIND[t] for t in (Tag.H, Tag.T, Tag.TDG, Tag.CX))

GOLDEN = {
    "t_gate": ([(T, (0,))], 1),
    "bell_clifford": ([(H, (0,)), (CX, (0, 1))], 2),
    "mixed_2q": ([(H, (0,)), (T, (0,)), (CX, (0, 1)), (TDG, (1,)), (H, (1,))], 2),
}


def main():
    out = Path(__file__).resolve().parent.parent / "tests" / "golden"
    out.mkdir(parents=True, exist_ok=True)
    for name, (gates, n) in GOLDEN.items():
        data = encode_chunk(compile_chunk(gates, n))
        (out / f"{name}.hex").write_text(data.hex() + "\n")
        print(f"{name}: {len(data)} bytes")


if __name__ == "__main__":
    main()
