import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ghz_selftest import diagram as dg
from ghz_selftest import game, tensor
from ghz_selftest import rigidity as rg
from ghz_selftest import strategy as sm
from ghz_selftest.strategy import NoiseSpec
from ghz_selftest.tensor import I2, X, Z

from strategies import seeds

PLAYERS = game.PLAYERS


def rotated(n, theta):
    return sm.perturb(sm.ideal_strategy(n), NoiseSpec("rotation", theta))


def crosstalk(n, theta):
    return sm.perturb(sm.ideal_strategy(n), NoiseSpec("crosstalk", theta))


# -- swap isometries ---------------------------------------------------------

def test_swap_is_isometry_ideal():
    psi = rg.swap_isometry(sm.ideal_strategy(1), "A", 1)
    assert psi.shape == (8, 2)
    assert np.allclose(psi.conj().T @ psi, np.eye(2), atol=1e-10)


def test_ideal_swap_moves_the_qubit():
    # ideal swap = SWAP(Q, W) after preparing Phi+ on (Qbar, Q)
    psi = rg.swap_isometry(sm.ideal_strategy(1), "B", 1)
    phi = tensor.bell_state(2).reshape(2, 2)
    expect = np.einsum("aw,qv->aqwv", phi, np.eye(2)).reshape(8, 2)  # Qbar, Q <- input, W <- Phi+ half
    assert np.allclose(psi, expect, atol=1e-12)


@given(seeds, st.sampled_from(PLAYERS), st.integers(1, 2))
def test_diagram_oracle(seed, player, k):
    s = sm.random_strategy(2, dims=(2, 3, 2), rng=np.random.default_rng(seed))
    diagram = rg.swap_isometry_diagram(s, player, k)
    assert np.allclose(dg.evaluate(diagram), rg.swap_isometry(s, player, k), atol=1e-12)


@given(seeds)
def test_swap_isometry_random(seed):
    s = sm.random_strategy(1, dims=(3, 2, 2), rng=np.random.default_rng(seed))
    psi = rg.swap_isometry(s, "A", 1)
    assert np.allclose(psi.conj().T @ psi, np.eye(3), atol=1e-10)


def test_chained_single_round_equals_swap():
    s = sm.random_strategy(1, rng=np.random.default_rng(1))
    assert np.array_equal(rg.chained_isometry(s, "C"), rg.swap_isometry(s, "C", 1))


@given(seeds)
def test_chained_is_isometry(seed):
    s = sm.random_strategy(2, dims=(2, 2, 3), rng=np.random.default_rng(seed))
    for w in PLAYERS:
        theta = rg.chained_isometry(s, w)
        d = s.player_dim(w)
        assert theta.shape == (16 * d, d)
        assert np.allclose(theta.conj().T @ theta, np.eye(d), atol=1e-9)


def test_chained_ideal_n2_isometry():
    theta = rg.chained_isometry(sm.ideal_strategy(2), "A")
    assert np.allclose(theta.conj().T @ theta, np.eye(4), atol=1e-9)


def test_swap_respects_ceiling(monkeypatch):
    monkeypatch.setenv(tensor.MAX_ENTRIES_ENV, "16")
    with pytest.raises(tensor.DimensionError):
        rg.swap_isometry(sm.ideal_strategy(1), "A", 1)


def test_register_layout():
    s = sm.ideal_strategy(2)
    layout = rg.RegisterLayout.for_strategy(s)
    names = [r for r, _ in layout.registers]
    assert names[:5] == ["Qbar1", "Q1", "Qbar2", "Q2", "A"]
    assert names[5:10] == ["Qbar3", "Q3", "Qbar4", "Q4", "B"]
    assert names[-1] == "C" and len(names) == 15
    assert dict(layout.registers)["C"] == 4
    order = layout.grouped_order()
    assert [names[k] for k in order[:6]] == ["Q1", "Q3", "Q5", "Q2", "Q4", "Q6"]
    assert sorted(order) == list(range(15))


# -- eigenbasis ----------------------------------------------------------------

def test_eigenbasis_orthonormal():
    b = rg.ghz_eigenbasis()
    assert np.allclose(b @ b.conj().T, np.eye(8), atol=1e-12)


def test_eigenbasis_eigenvalues():
    b = rg.ghz_eigenbasis()
    for v in range(8):
        for k, (_, op) in enumerate(rg.STABILIZERS):
            sign = -1 if (v >> (2 - k)) & 1 else 1
            assert np.allclose(op @ b[v], sign * b[v], atol=1e-12)


def test_g0_is_g_state():
    b = rg.ghz_eigenbasis()
    assert abs(abs(np.vdot(b[0], sm.g_state())) - 1) <= 1e-12
    assert np.allclose(tensor.kron(X, Z, Z) @ b[0], b[0], atol=1e-12)


def test_eigenbasis_phase_convention():
    for vec in rg.ghz_eigenbasis():
        lead = vec[np.argmax(np.round(np.abs(vec), 12))]
        assert abs(lead.imag) <= 1e-12 and lead.real > 0


# -- extraction ----------------------------------------------------------------

@pytest.mark.parametrize("n", [1, 2])
def test_extract_ideal(n):
    r = rg.extract(sm.ideal_strategy(n))
    assert r.method == "dense"
    assert abs(r.fidelity - 1) <= 1e-9
    assert r.residual <= 1e-9
    assert np.isnan(r.bound_ratio)
    assert r.epsilon == 0


def test_extract_ideal_n3_reduced():
    r = rg.extract(sm.ideal_strategy(3))
    assert r.method == "reduced"
    assert abs(r.fidelity - 1) <= 1e-9
    assert r.residual <= 1e-9


@pytest.mark.parametrize("n", [1, 2])
@given(theta=st.floats(0.0, 1.0))
def test_rotation_extraction_closed_form(n, theta):
    # A's extracted qubits carry U^dagger |G> per round: overlap cos(theta/2) each
    r = rg.extract(rotated(n, theta))
    assert r.g0_weight == pytest.approx(np.cos(theta / 2) ** n, abs=1e-10)
    assert r.residual == pytest.approx(np.sqrt(1 - np.cos(theta / 2) ** (2 * n)), abs=1e-7)


def test_rotation_example_bound():
    r = rg.extract(rotated(1, 0.1))
    # residual = sin(theta/2) and eps = sin^2(theta/2) / 2, so residual / sqrt(eps) = sqrt 2
    assert r.residual <= np.sqrt(2) * np.sqrt(r.epsilon) * (1 + 1e-9)
    assert r.bound_ratio == pytest.approx(np.sqrt(2), abs=1e-9)


def test_dense_and_reduced_agree():
    s = crosstalk(2, 0.2)
    a = rg.extract(s, "dense")
    b = rg.extract(s, "reduced")
    assert np.allclose(a.weights, b.weights, atol=1e-7)
    assert a.residual == pytest.approx(b.residual, abs=1e-9)


@given(seeds)
def test_weights_complete(seed):
    s = sm.random_strategy(2, rng=np.random.default_rng(seed))
    r = rg.extract(s)
    assert abs(np.sum(r.weights**2) - 1) <= 1e-9
    assert 0 <= r.residual <= 1
    assert r.residual == pytest.approx(np.sqrt(max(0.0, 1 - r.g0_weight**2)), abs=1e-7)


def test_residual_monotone_on_rotation_sweep():
    res = [rg.extract(rotated(2, t)).residual for t in np.arange(0, 0.3001, 0.05)]
    assert all(b >= a - 1e-12 for a, b in zip(res, res[1:]))


def test_extract_rejects_invalid():
    s = sm.ideal_strategy(1)
    bad = sm.Strategy(1, s.dims, s.state, {**s.singles, ("A", 1, 0): 2 * X}, {})
    with pytest.raises(rg.InvalidStrategyError):
        rg.extract(bad)


def test_extract_respects_ceiling(monkeypatch):
    monkeypatch.setenv(tensor.MAX_ENTRIES_ENV, str(2**10))
    with pytest.raises(tensor.DimensionError):
        rg.extract(sm.ideal_strategy(2), "dense")


def test_extract_unknown_method():
    with pytest.raises(ValueError):
        rg.extract(sm.ideal_strategy(1), "sparse")


def test_extraction_json():
    data = rg.extract(rotated(2, 0.1)).to_json()
    assert set(data) >= {"n", "epsilon", "g0_weight", "fidelity", "residual", "bound_ratio", "weights"}
    assert len(data["weights"]) == 64 and "G0,G0" in data["weights"]
    assert rg.extract(sm.ideal_strategy(1)).to_json()["bound_ratio"] is None


# -- negation structure ----------------------------------------------------------

def test_designated_negator():
    assert rg.designated_negator((4,)) == (1, "XZZ")
    assert rg.designated_negator((0, 3)) == (2, "ZXZ")
    assert rg.designated_negator((0, 1)) == (2, "ZZX")
    with pytest.raises(ValueError):
        rg.designated_negator((0, 0))


@pytest.mark.parametrize("make", [lambda: rotated(1, 0.3), lambda: crosstalk(1, 0.3),
                                  lambda: sm.random_strategy(1, rng=np.random.default_rng(4)),
                                  lambda: crosstalk(2, 0.2)])
def test_negation_structure(make):
    r = rg.extract(make())
    for label in itertools.product(range(8), repeat=r.n):
        if any(label):
            assert rg.negation_residual(r, label) <= 1e-10


def test_negation_needs_dense():
    r = rg.extract(sm.ideal_strategy(1), "reduced")
    with pytest.raises(ValueError):
        rg.check_negation(r)


# -- relations -------------------------------------------------------------------

def test_keyineq_lines_ideal():
    report = rg.check_keyineqs(sm.ideal_strategy(2))
    assert report["max_residual"] <= 1e-12
    assert len(report["entries"]) == 56
    assert {e["line"] for e in report["entries"] if e["r"] == 0} == {"XXX", "XZZ", "ZXZ", "ZZX"}


def test_keyineq_sign_flip():
    s = sm.ideal_strategy(1)
    flipped = sm.Strategy(1, s.dims, s.state, {**s.singles, ("A", 1, 0): -X}, {})
    entries = rg.check_keyineqs(flipped)["entries"]
    first = next(e for e in entries if e["xyz"] == [0, 0, 0])
    assert first["residual"] == pytest.approx(2.0, abs=1e-12)
    assert rg.check_keyineqs(flipped)["max_per_round"][1] == pytest.approx(2.0, abs=1e-12)


@given(seeds)
def test_keyineq_losing_identity(seed):
    s = sm.random_strategy(2, rng=np.random.default_rng(seed))
    entries = rg.check_keyineqs(s)["entries"]
    for e, (c, _) in zip(entries, game.enumerate_inputs(2)):
        assert (e["r"], e["i"], e["j"]) == (c.r, c.i, c.j)
        assert abs(e["residual"] ** 2 - 4 * sm.losing_probability(s, c)) <= 1e-10


def test_anticommute_ideal():
    s = sm.ideal_strategy(2)
    for w in PLAYERS:
        for i in (1, 2):
            assert rg.check_anticommute(s, i, w) <= 1e-12


def test_anticommute_grows_with_noise():
    values = [rg.check_anticommute(crosstalk(1, t), 1) for t in (0.0, 0.05, 0.1, 0.2)]
    assert values[0] <= 1e-12
    assert all(b > a for a, b in zip(values, values[1:]))
    # crosstalk rotates Z' by theta inside the XZ plane: {X, Z'} = 2 sin(theta) XY-term
    assert values[2] == pytest.approx(2 * np.sin(0.1), abs=1e-12)


@given(seeds, st.sampled_from(PLAYERS), st.integers(1, 2))
def test_anticommute_chain_bound(seed, player, i):
    s = sm.random_strategy(2, rng=np.random.default_rng(seed))
    chain = rg.anticommute_chain(s, i, player)
    assert chain["residual"] == pytest.approx(rg.check_anticommute(s, i, player), abs=1e-12)
    assert chain["residual"] <= chain["budget"] + 1e-12
    # each step costs exactly one relation residual
    line = chain["line_residuals"]
    want = [line[k] for k in ("XXX", "ZXZ", "XZZ", "XXX", "XXX", "ZZX")]
    assert np.allclose(chain["step_distances"], want, atol=1e-12)


def test_anticommute_chain_lines_are_keyineqs():
    s = sm.random_strategy(1, rng=np.random.default_rng(2))
    chain = rg.anticommute_chain(s, 1, "A")
    by_line = {e["line"]: e["residual"] for e in rg.check_keyineqs(s)["entries"]}
    for name, val in chain["line_residuals"].items():
        assert val == pytest.approx(by_line[name], abs=1e-12)


def test_commute_ideal_and_errors():
    s = sm.ideal_strategy(2)
    assert rg.check_commute(s, 1, 2, 0, 1) == 0
    with pytest.raises(ValueError):
        rg.check_commute(s, 1, 1, 0, 0)


def test_commute_pairs_as_singles():
    # singles built from a commuting pair: residual 0
    s = sm.random_strategy(2, rng=np.random.default_rng(6))
    singles = dict(s.singles)
    for w in PLAYERS:
        for b in (0, 1):
            singles[(w, 1, b)] = s.pairs[(w, 1, b, 2, b)]
            singles[(w, 2, b)] = s.pairs[(w, 2, b, 1, b)]
    t = sm.Strategy(2, s.dims, s.state, singles, s.pairs)
    assert sm.validate(t).ok
    for w in PLAYERS:
        for b in (0, 1):
            assert rg.check_commute(t, 1, 2, b, b, w) <= 1e-12


def test_commute_crosstalk_is_finite():
    assert rg.check_commute(crosstalk(2, 0.2), 1, 2, 1, 1) > 1e-3


@pytest.mark.parametrize("player", PLAYERS)
@pytest.mark.parametrize("op", ["X", "Z", "H", "CX", "CZ"])
def test_push_ideal(player, op):
    s = sm.ideal_strategy(2)
    for k in (1, 2):
        assert rg.check_push(s, player, op, k).residual <= 1e-12


def test_push_partner_descriptions():
    s = sm.ideal_strategy(1)
    assert rg.check_push(s, "A", "X").partner == "-X'_B,1 (x) X'_C,1"
    assert rg.check_push(s, "A", "Z").partner == "Z'_B,1 (x) X'_C,1"
    with pytest.raises(ValueError):
        rg.check_push(s, "A", "Y")


@given(seeds)
def test_push_equals_relation_residual(seed):
    # pushing X'_A is the XXX relation, pushing Z'_A is the ZZX relation
    s = sm.random_strategy(1, rng=np.random.default_rng(seed))
    lines = rg.anticommute_chain(s, 1)["line_residuals"]
    assert rg.check_push(s, "A", "X").residual == pytest.approx(lines["XXX"], abs=1e-12)
    assert rg.check_push(s, "A", "Z").residual == pytest.approx(lines["ZZX"], abs=1e-12)
    assert rg.check_push(s, "A", "CX").residual == pytest.approx(lines["XXX"] / np.sqrt(2), abs=1e-12)


def _push_instance(rng, k):
    # R = C^2, S = C^2 (x) C^2; unitaries close to a perfect push-through
    z = tensor.bell_state(2)
    z = np.kron(z, np.array([1, 0]))  # R (x) S with S = (R', extra)
    eps = 0.05
    us, partners = [], []
    for _ in range(k):
        a = rng.normal(size=3)
        a /= np.linalg.norm(a)
        u = a[0] * X + a[1] * tensor.Y + a[2] * Z
        # transpose maps to the partner on Phi+; add a small error
        p = np.kron(u.T, tensor.axis_rotation(eps * rng.normal(), X))
        us.append(u)
        partners.append(p)
    v = tensor.axis_rotation(0.2, Z)
    w = tensor.axis_rotation(0.25, Z)
    return z, us, partners, v, w


@given(seeds, st.integers(1, 4))
def test_push_through_chain(seed, k):
    z, us, partners, v, w = _push_instance(np.random.default_rng(seed), k)
    chain = rg.push_through_chain(z, (2, 4), us, partners, v, w)
    eps = max(chain.push_errors)
    assert chain.stage_distances[1] == pytest.approx(chain.delta, abs=1e-12)
    assert chain.residual <= chain.budget + 1e-12
    assert chain.residual <= 2 * k * eps + chain.delta + 1e-12
    assert chain.stage_distances[0] <= sum(chain.push_errors) + 1e-12
    assert chain.stage_distances[2] <= sum(chain.push_errors) + 1e-12


def test_push_through_exact_case():
    z, us, partners, v, w = _push_instance(np.random.default_rng(0), 3)
    partners = [np.kron(u.T, I2) for u in us]
    chain = rg.push_through_chain(z, (2, 4), us, partners, v, w)
    assert max(chain.push_errors) <= 1e-12
    assert chain.residual == pytest.approx(chain.delta, abs=1e-12)


@pytest.mark.parametrize("n", [1, 2])
def test_correct_pauli_ideal(n):
    s = sm.ideal_strategy(n)
    for w in PLAYERS:
        for k in range(1, n + 1):
            assert max(rg.check_correct_pauli(s, w, k).values()) <= 1e-12
            assert max(rg.check_multi_pauli(s, w, k).values()) <= 1e-12


def test_correct_pauli_noise_kinds():
    # rotation conjugates X' and Z' by the same U, which commutes through the swap circuit
    assert max(rg.check_correct_pauli(rotated(1, 0.3), "A", 1).values()) <= 1e-12
    res = rg.check_correct_pauli(crosstalk(1, 0.1), "A", 1)
    assert res["X"] > 1e-3 and res["Z"] > 1e-3


@given(seeds, st.sampled_from(PLAYERS))
def test_multi_pauli_budget(seed, player):
    rng = np.random.default_rng(seed)
    s = sm.perturb(sm.ideal_strategy(2), NoiseSpec("crosstalk", float(rng.uniform(0, 0.5))))
    for k in (1, 2):
        for which in "XZ":
            b = rg.multi_pauli_budget(s, player, k, which)
            assert b["residual"] <= b["budget"] + 1e-12
    first = rg.multi_pauli_budget(s, player, 1, "X")
    assert first["carry"] == 0
    assert first["residual"] == pytest.approx(rg.check_correct_pauli(s, player, 1)["X"], abs=1e-12)


def test_q_operator_position():
    op = rg.q_operator(2, 3, 2, X)
    assert op.shape == (48, 48)
    assert np.allclose(op, tensor.kron(np.eye(8), X, np.eye(3)))


@pytest.mark.parametrize("n", [1, 2])
def test_relation_report_ideal(n):
    rep = rg.relation_report(sm.ideal_strategy(n))
    for name in ("anticommute", "commute", "push", "correct_pauli", "multi_pauli"):
        assert rep[name]["max_residual"] <= 1e-9
        assert rep[name]["error_scale"] == rg.ERROR_SCALE[name]
    assert rep["keyineq"]["max_residual"] <= 1e-9


def test_relation_report_noisy_nonnegative():
    rep = rg.relation_report(crosstalk(2, 0.1))
    assert rep["epsilon"] > 0
    assert rep["anticommute"]["max_residual"] > 0
    for name in ("anticommute", "commute", "correct_pauli", "multi_pauli"):
        assert all(v >= 0 for v in rep[name]["values"].values())
    assert all(v["residual"] >= 0 for v in rep["push"]["values"].values())
