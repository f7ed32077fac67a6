import numpy as np
import pytest

from invgraph import nn

from gradcheck import check, rel_error


def test_identity_network():
    net = nn.DenseNet((3, 3), ("identity",))
    net.params[0][...] = np.eye(3)
    net.params[1][...] = 0
    x = np.array([1.0, -2.0, 3.0])
    assert np.array_equal(net(x), x)


def test_bias_only():
    net = nn.DenseNet((3, 2), ("identity",))
    net.params[0][...] = 0
    net.params[1][...] = [4.0, 5.0]
    assert net(np.ones(3)).tolist() == [4.0, 5.0]


def test_non_finite_input():
    net = nn.DenseNet((2, 2), ("relu",))
    with pytest.raises(FloatingPointError):
        net(np.array([np.nan, 0.0]))
    with pytest.raises(ValueError):
        net(np.ones(3))


def test_unknown_activation():
    with pytest.raises(ValueError):
        nn.DenseNet((2, 2), ("gelu",))


def test_linear_gradient_is_outer_product(rng):
    net = nn.DenseNet((3, 2), ("identity",), rng=rng)
    x = rng.normal(size=3)
    gy = rng.normal(size=2)
    _, tape = net.forward(x)
    grads, gx = net.backward(tape, gy)
    assert np.allclose(grads[0], np.outer(x, gy))
    assert np.allclose(grads[1], gy)
    assert np.allclose(gx, net.params[0] @ gy)


def test_relu_blocks_negative(rng):
    net = nn.DenseNet((1, 1), ("relu",))
    net.params[0][...] = 1.0
    net.params[1][...] = 0.0
    _, tape = net.forward(np.array([-1.0]))
    grads, gx = net.backward(tape, np.array([1.0]))
    assert grads[0][0, 0] == 0 and gx[0] == 0


def test_backward_shape_mismatch(rng):
    net = nn.DenseNet((3, 2), ("identity",), rng=rng)
    _, tape = net.forward(np.ones(3))
    with pytest.raises(ValueError):
        net.backward(tape, np.ones(3))


def test_forward_pure(rng):
    net = nn.DenseNet((4, 8, 2), ("relu", "tanh"), rng=rng)
    x = rng.normal(size=(5, 4))
    assert np.array_equal(net(x), net(x))


def test_jvp_small_net(rng):
    net = nn.DenseNet((4, 8, 2), ("relu", "tanh"), rng=rng)
    for _ in range(10):
        x = rng.normal(size=4)
        dx = rng.normal(size=4)
        y, tape = net.forward(x)
        # J dx via the transpose: <gy, J dx> = <J^T gy, dx> for each output basis vector
        jac = np.stack([net.backward(tape, e)[1] for e in np.eye(2)])
        h = 1e-5
        fd = (net(x + h * dx) - net(x - h * dx)) / (2 * h)
        assert rel_error(jac @ dx, fd) < 1e-6


@pytest.mark.parametrize("sizes,acts", [((9, 128, 128, 128, 2), ("relu",) * 3 + ("tanh",)),
                                        ((54, 256, 256, 256, 1), ("relu",) * 3 + ("identity",))])
def test_param_gradients(rng, sizes, acts):
    net = nn.DenseNet(sizes, acts, rng=rng)
    for _ in range(3):
        x = rng.normal(size=(6, sizes[0]))
        w = rng.normal(size=(6, sizes[-1]))
        _, tape = net.forward(x)
        grads, _ = net.backward(tape, w)
        assert check(lambda: float(np.sum(w * net(x))), net.params, grads, rng) < 1e-4


def test_stacked_matches_members(rng):
    nets = [nn.DenseNet((5, 7, 2), ("relu", "tanh"), rng=rng) for _ in range(3)]
    st = nn.StackedDenseNet.stack(nets)
    x = rng.normal(size=(3, 4, 5))
    y, tape = st.forward(x)
    for k, n in enumerate(nets):
        assert np.allclose(y[k], n(x[k]))
    gy = rng.normal(size=y.shape)
    grads, gx = st.backward(tape, gy)
    for k, n in enumerate(nets):
        gk, gxk = n.backward(n.forward(x[k])[1], gy[k])
        for a, b in zip(grads, gk):
            assert np.allclose(a[k], b)
        assert np.allclose(gx[k], gxk)
    # unbatched input
    assert np.allclose(st(x[:, 0]), y[:, 0])


def test_stack_rejects_mixed():
    with pytest.raises(ValueError):
        nn.StackedDenseNet.stack([nn.DenseNet((2, 2), ("relu",)), nn.DenseNet((3, 2), ("relu",))])


def test_gaussian_closed_forms():
    lp = nn.gaussian_logprob(np.zeros(2), np.zeros(2), np.zeros(2))
    assert lp == pytest.approx(-np.log(2 * np.pi))
    assert nn.gaussian_entropy(np.zeros(1)) == pytest.approx(1.4189385, abs=1e-6)
    head = nn.GaussianHead(mean=np.zeros(3), log_std=np.zeros(3))
    logp, ent = nn.gaussian_logprob_entropy(head, np.zeros(3))
    assert ent == pytest.approx(3 * 1.4189385, abs=1e-6)
    assert np.all(head.std > 0)


def test_log_std_clamped():
    assert nn.clamp_log_std(np.array([-9.0, 3.0])).tolist() == [-5.0, 1.0]


def test_logprob_grads_fd(rng):
    for _ in range(20):
        mu = rng.uniform(-1, 1, size=2)
        ls = rng.uniform(-2, 0.5, size=2)
        a = rng.normal(size=2)
        g_mu, g_ls = nn.gaussian_logprob_grads(mu, ls, a)
        assert np.allclose(g_mu, (a - mu) / np.exp(2 * ls))
        h = 1e-6
        fd_mu = [(nn.gaussian_logprob(mu + h * e, ls, a) - nn.gaussian_logprob(mu - h * e, ls, a)) / (2 * h) for e in np.eye(2)]
        fd_ls = [(nn.gaussian_logprob(mu, ls + h * e, a) - nn.gaussian_logprob(mu, ls - h * e, a)) / (2 * h) for e in np.eye(2)]
        assert rel_error(g_mu, fd_mu) < 1e-6 and rel_error(g_ls, fd_ls) < 1e-6


def test_kl_properties_and_grads(rng):
    mu = rng.uniform(-1, 1, size=2)
    ls = rng.uniform(-1, 0, size=2)
    assert nn.gaussian_kl(mu, ls, mu, ls) == pytest.approx(0.0, abs=1e-14)
    for _ in range(20):
        m0, l0 = rng.uniform(-1, 1, 2), rng.uniform(-1, 0.5, 2)
        m1, l1 = rng.uniform(-1, 1, 2), rng.uniform(-1, 0.5, 2)
        assert nn.gaussian_kl(m0, l0, m1, l1) >= 0
        g_m, g_l = nn.gaussian_kl_grads(m0, l0, m1, l1)
        h = 1e-6
        fd_m = [(nn.gaussian_kl(m0, l0, m1 + h * e, l1) - nn.gaussian_kl(m0, l0, m1 - h * e, l1)) / (2 * h) for e in np.eye(2)]
        fd_l = [(nn.gaussian_kl(m0, l0, m1, l1 + h * e) - nn.gaussian_kl(m0, l0, m1, l1 - h * e)) / (2 * h) for e in np.eye(2)]
        assert rel_error(g_m, fd_m) < 1e-6 and rel_error(g_l, fd_l) < 1e-6


def test_adam_zero_gradient_no_decay():
    p = [np.array([1.0, -2.0])]
    st = nn.AdamState.for_params(p, weight_decay=0.0)
    nn.adam_step(p, [np.zeros(2)], st)
    assert p[0].tolist() == [1.0, -2.0]


def test_adam_one_step_hand_value():
    # after one step the bias-corrected ratio m_hat / sqrt(v_hat) equals sign(g)
    p = [np.array([0.5, 0.5])]
    st = nn.AdamState.for_params(p, lr=1e-3, weight_decay=0.0)
    g = np.array([3.0, -0.2])
    nn.adam_step(p, [g.copy()], st)
    expected = 0.5 - 1e-3 * g / (np.abs(g) + 1e-8)
    assert np.allclose(p[0], expected, rtol=0, atol=1e-12)


def test_adam_decay_only_shrinks():
    p = [np.array([2.0, -3.0])]
    st = nn.AdamState.for_params(p, lr=0.1, weight_decay=0.5)
    before = np.linalg.norm(p[0])
    nn.adam_step(p, [np.zeros(2)], st)
    assert np.linalg.norm(p[0]) < before


def test_adam_rejects_non_finite():
    p = [np.array([1.0, 2.0])]
    st = nn.AdamState.for_params(p)
    nn.adam_step(p, [np.array([np.nan, 1.0])], st)
    assert p[0].tolist() == [1.0, 2.0]
    assert st.rejected == 1 and st.step == 0 and np.all(st.m == 0)


def test_adam_shape_mismatch():
    p = [np.zeros(2)]
    with pytest.raises(ValueError):
        nn.adam_step(p, [np.zeros(3)], nn.AdamState.for_params(p))


def test_checkpoint_roundtrip(tmp_path, rng):
    net = nn.DenseNet((3, 4, 2), ("relu", "tanh"), rng=rng)
    st = nn.AdamState.for_params(net.params)
    nn.adam_step(net.params, [rng.normal(size=p.shape) for p in net.params], st)
    arrays = {f"p{k}": p for k, p in enumerate(net.params)}
    arrays.update(nn.adam_arrays("opt", st))
    path = tmp_path / "ck.npz"
    nn.save_checkpoint(path, arrays, {"note": "x"})
    back, meta = nn.load_checkpoint(path)
    assert meta["note"] == "x"
    for k, p in enumerate(net.params):
        assert np.array_equal(back[f"p{k}"], p)
    st2 = nn.AdamState.for_params(net.params)
    nn.restore_adam("opt", back, st2)
    assert st2.step == st.step and np.array_equal(st2.m, st.m) and np.array_equal(st2.v, st.v)
