import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from _fixtures import accretive_pencil, commuting_pencil, rng_for
from accretive_pencil.bvp import BvpProblem
from accretive_pencil.estimators import FactorizedBVPSolver, PencilFactorizer
from accretive_pencil.pencil import PencilSpec


def test_params_round_trip():
    est = PencilFactorizer(convention="rotated_root", method="denman-beavers")
    assert est.get_params() == {"convention": "rotated_root", "method": "denman-beavers"}
    assert clone(est).get_params() == est.get_params()
    assert FactorizedBVPSolver().set_params(sixth_term="printed").sixth_term == "printed"


def test_unfitted_raises():
    with pytest.raises(NotFittedError):
        PencilFactorizer().predict([1.0])
    with pytest.raises(NotFittedError):
        FactorizedBVPSolver().predict([0.5])


def test_factorizer_fit_predict():
    p = commuting_pencil(4, rng_for(90))
    est = PencilFactorizer().fit(p)
    assert np.abs(est.predict([1.0, 2j, -3.0])).max() <= 1e-10 * p.scale()
    q = accretive_pencil(4, rng_for(91))
    est2 = PencilFactorizer().fit((q.B, q.C))
    r = est2.predict([1.0, 5.0])
    assert r[0] == pytest.approx(r[1], rel=1e-8)
    assert r[0] == pytest.approx(est2.factorization_.commutator_norm, rel=1e-8)
    assert est2.score([1.0, 1j]) >= -1e-10


def test_bvp_solver_predict():
    p = PencilSpec([[1.0]], [[3.0]])
    solver = FactorizedBVPSolver().fit(BvpProblem(p, [1.0], [0.0]))
    x = np.array([0.25, 0.5])
    u = solver.predict(x)
    exact = (np.exp(-x) - np.exp(-4 + 3 * x)) / (1 - np.exp(-4))
    np.testing.assert_allclose(u[:, 0], exact, atol=1e-10)
