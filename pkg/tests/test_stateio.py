import json

import numpy as np
import pytest

from tildelab import qstate as qs
from tildelab.errors import StateFileError, TooManyParties
from tildelab.stateio import operator_to_dict, read_operator, read_state, write_json, write_state


def test_round_trip_exact(tmp_path):
    psi = qs.random_pure((2, 3), seed=0)
    write_state(psi, tmp_path / "p.json", note="x")
    back, meta = read_state(tmp_path / "p.json")
    assert np.array_equal(back.amp, psi.amp) and meta == {"note": "x"}
    rho = qs.random_mixed((2, 2), 2, seed=1)
    write_state(rho, tmp_path / "m.json")
    back, _ = read_state(tmp_path / "m.json")
    assert np.array_equal(back.mat, rho.mat) and back.normalized


def test_operator_file(tmp_path):
    h = qs.random_hermitian(4, seed=0)
    write_json(operator_to_dict((2, 2), h), tmp_path / "h.json")
    dims, m = read_operator(tmp_path / "h.json")
    assert dims.dims == (2, 2) and np.array_equal(m, h)


@pytest.mark.parametrize("text, needle", [
    ('{"dims": [2], "kind": "pure", "amplitudes": [[1, 0], [0, 0]', "line 1"),
    ('{"kind": "pure"}', "'dims'"),
    ('{"dims": [2], "kind": "pure", "amplitudes": [[1, 0]]}', "'amplitudes'"),
    ('{"dims": [2], "kind": "pure", "amplitudes": [[1, 0], [0]]}', "entry 1"),
    ('{"dims": [2], "kind": "blob"}', "'kind'"),
    ('{"dims": ["2"], "kind": "pure"}', "'dims'"),
])
def test_parse_errors_have_context(tmp_path, text, needle):
    p = tmp_path / "bad.json"
    p.write_text(text)
    with pytest.raises(StateFileError, match=needle):
        read_state(p)


def test_dims_cap(tmp_path):
    p = tmp_path / "big.json"
    p.write_text(json.dumps({"dims": [2] * 13, "kind": "pure", "amplitudes": []}))
    with pytest.raises(TooManyParties):
        read_state(p)
