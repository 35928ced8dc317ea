import json

import numpy as np
import pytest

from anyonqism.chain import ModelSpec, build_hamiltonian, exact_spectrum
from anyonqism.io import atomic_write, cpair, dumps_csv, dumps_json, matrix_from_json, matrix_to_json, spectrum_record


def test_matrix_roundtrip():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    doc = json.loads(dumps_json(matrix_to_json(a)))
    np.testing.assert_array_equal(matrix_from_json(doc), a)


def test_matrix_rejects_wrong_format():
    with pytest.raises(ValueError):
        matrix_from_json({"format": "other", "shape": [1, 1], "data": [[[0, 0]]]})


def test_negative_zero_normalised():
    assert json.dumps(cpair(complex(-0.0, -0.0))) == "[0.0, 0.0]"


def test_spectrum_record_fields():
    m = ModelSpec.xxx(2, 1.0, 0.3)
    rec = spectrum_record(m, exact_spectrum(build_hamiltonian(m), 1, source="H"))
    assert rec["model"] == "xxx" and rec["sector"] == [1] and len(rec["eigenvalues"]) == 2
    json.loads(dumps_json(rec))


def test_nan_rejected():
    with pytest.raises(ValueError):
        dumps_json({"x": float("nan")})


def test_csv_rows():
    text = dumps_csv(["a", "b"], [[1, 0.5], ["x", -0.0]])
    assert text == "a,b\n1,0.5\nx,0.0\n"


def test_atomic_write_replaces(tmp_path):
    p = tmp_path / "sub" / "out.json"
    atomic_write(p, "one")
    atomic_write(p, "two")
    assert p.read_text() == "two"
    assert [f.name for f in p.parent.iterdir()] == ["out.json"]
