import numpy as np
import pytest
import scipy.sparse as sp

from fleetpde import LpProblem, build_lp, init_uniform_idle, load_builtin, solve
from fleetpde.dispatch import named_problem
from fleetpde.errors import ValidationError
from fleetpde.mps import dumps_mps, loads_mps, read_mps, write_mps

from lp_cases import random_lp


def same_problem(a: LpProblem, b: LpProblem):
    np.testing.assert_array_equal(a.c, b.c)
    assert (a.A != b.A).nnz == 0 and a.A.shape == b.A.shape
    np.testing.assert_array_equal(a.sense, b.sense)
    np.testing.assert_array_equal(a.rhs, b.rhs)
    np.testing.assert_array_equal(a.lb, b.lb)
    np.testing.assert_array_equal(a.ub, b.ub)


@pytest.mark.parametrize("seed", range(10))
def test_random_problems_round_trip_exactly(seed):
    rng = np.random.default_rng(seed)
    p = random_lp(rng, int(rng.integers(2, 15)), int(rng.integers(1, 10)), 2, box=bool(seed % 2))
    p.lb[0], p.ub[0] = -np.inf, np.inf
    p.lb[1] = -np.inf
    p.ub[-1] = p.lb[-1] = 0.5
    q = loads_mps(dumps_mps(p))
    same_problem(p, LpProblem(q.c, q.A, q.sense, q.rhs, q.lb, q.ub))


def test_window_lp_export_solves_to_the_same_value(tmp_path):
    sc = load_builtin("extreme").with_overrides(horizon_steps=3)
    dlp = build_lp(init_uniform_idle(7500, sc.grid).with_(step=80), sc)
    path = write_mps(named_problem(dlp), tmp_path / "w.mps")
    text = path.read_text()
    assert text.startswith("NAME") and "OBJSENSE" in text and text.rstrip().endswith("ENDATA")
    assert "state_idle_0" in text and "pax_0_0_0_5" in text
    back = read_mps(path)
    assert solve(back).objective == pytest.approx(solve(dlp.problem).objective, rel=1e-12)
    assert back.col_names == dlp.index.names()


def test_minimisation_files_are_negated():
    text = "\n".join(["NAME T", "ROWS", " N  COST", " L  R1", "COLUMNS", "    X  COST  2.0  R1  1.0",
                      "RHS", "    RHS  R1  4.0", "BOUNDS", " UP BND  X  3.0", "ENDATA"])
    p = loads_mps(text)
    np.testing.assert_array_equal(p.c, [-2.0])
    assert p.ub[0] == 3.0


def test_malformed_input():
    with pytest.raises(ValidationError):
        loads_mps("NAME T\nROWS\n Q  R1\nENDATA\n")
    with pytest.raises(ValidationError):
        loads_mps("NAME T\nROWS\n N  OBJ\nCOLUMNS\n    X  NOPE  1.0\nENDATA\n")
    bad = LpProblem(np.ones(1), sp.csr_matrix((0, 1)), np.array([], "<U2"), np.zeros(0), np.zeros(1), np.ones(1),
                    col_names=["has space"])
    with pytest.raises(ValidationError):
        dumps_mps(bad)
