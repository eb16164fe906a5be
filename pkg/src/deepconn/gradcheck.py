"""Finite-difference verification of every hand-written backward pass.

`gradient_check` is the generic harness; `standard_checks` runs the
battery the CLI exposes: each layer type in isolation, both coupling
heads, and full miniature twin-tower models.
"""

import numpy as np

from .errors import NumericFault
from .layers import Conv1d, Dense, Dropout, GruCell, LstmCell, MaxPoolOverTime
from .model import DeepConn, DpHead, FmHead, ModelConfig, TowerConfig

DEFAULT_EPS = 1e-5
DEFAULT_THRESHOLD = 1e-4


def gradient_check(loss_fn, params, eps=DEFAULT_EPS):
    """Max relative error between analytic and central-difference gradients.

    loss_fn() must run a full forward+backward pass with the *current*
    parameter values, accumulate gradients into `params`, and return the
    scalar loss.  It has to be deterministic across calls (fix any dropout
    masks).  Error per entry is |a - n| / max(1e-8, |a| + |n|).
    """
    for p in params:
        p.zero_grad()
    loss = float(loss_fn())
    if not np.isfinite(loss):
        raise NumericFault(f"loss is not finite: {loss}")
    analytic = [p.grad.copy() for p in params]

    worst = 0.0
    for p, grad in zip(params, analytic):
        flat = p.value.reshape(-1)
        gflat = grad.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            f_plus = float(loss_fn())
            flat[i] = orig - eps
            f_minus = float(loss_fn())
            flat[i] = orig
            if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
                raise NumericFault(f"non-finite loss while probing {p.name}[{i}]")
            numeric = (f_plus - f_minus) / (2.0 * eps)
            a = gflat[i]
            err = abs(a - numeric) / max(1e-8, abs(a) + abs(numeric))
            worst = max(worst, err)
    for p in params:
        p.zero_grad()  # probing calls accumulated junk
    return worst


# Each case builder returns (loss_fn, params) for gradient_check.

def _case_dense(rng):
    layer = Dense(4, 3, activation="tanh", rng=rng, name="check.dense")
    x = rng.standard_normal(4)
    w = rng.standard_normal(3)

    def loss_fn():
        out = layer.forward(x)
        layer.backward(w)
        return float(w @ out)

    return loss_fn, layer.parameters()


def _case_conv1d(rng):
    layer = Conv1d(5, 3, kernel=4, stride=2, rng=rng, name="check.conv")
    x = rng.standard_normal((12, 5))
    w = rng.standard_normal((layer.output_length(12), layer.channels))

    def loss_fn():
        out = layer.forward(x)
        layer.backward(w)
        return float(np.sum(w * out))

    return loss_fn, layer.parameters()


def _case_maxpool(rng):
    # The pool has no parameters of its own; verify the gradient it routes
    # by driving its input from a dense layer whose weights get perturbed.
    pre = Dense(6, 12, activation="identity", rng=rng, name="check.pool_pre")
    pool = MaxPoolOverTime()
    x = rng.standard_normal(6)
    w = rng.standard_normal(3)

    def loss_fn():
        rows = pre.forward(x).reshape(4, 3)
        out = pool.forward(rows)
        pre.backward(pool.backward(w).reshape(-1))
        return float(w @ out)

    return loss_fn, pre.parameters()


def _case_dropout(rng):
    pre = Dense(4, 6, activation="tanh", rng=rng, name="check.drop_pre")
    drop = Dropout(0.4)
    mask = rng.random(6) >= 0.4  # fixed across probing evaluations
    x = rng.standard_normal(4)
    w = rng.standard_normal(6)

    def loss_fn():
        out = drop.forward(pre.forward(x), train=True, mask=mask)
        pre.backward(drop.backward(w))
        return float(w @ out)

    return loss_fn, pre.parameters()


def _case_gru(rng, steps=3):
    cell = GruCell(3, 4, rng=rng, name="check.gru")
    xs = rng.standard_normal((steps, 3))
    w = rng.standard_normal(4)

    def loss_fn():
        cell.reset()
        s = cell.initial_state()
        for t in range(steps):
            s = cell.step(s, xs[t])
        ds = w
        for t in reversed(range(steps)):
            ds, _ = cell.backward_step(ds)
        return float(w @ s)

    return loss_fn, cell.parameters()


def _case_lstm(rng, steps=3):
    cell = LstmCell(3, 4, rng=rng, name="check.lstm")
    xs = rng.standard_normal((steps, 3))
    w = rng.standard_normal(4)

    def loss_fn():
        cell.reset()
        h, c = cell.initial_state()
        for t in range(steps):
            h, c = cell.step((h, c), xs[t])
        dh, dc = w, np.zeros(4)
        for t in reversed(range(steps)):
            dh, dc, _ = cell.backward_step(dh, dc)
        return float(w @ h)

    return loss_fn, cell.parameters()


def _case_dp_head(rng):
    head = DpHead(5, rng=rng, name="check.dp")
    head.w.value[:] = rng.standard_normal(10)
    head.beta0.value[...] = 0.3
    # Feed the head from dense layers so its input gradients are verified too.
    u_pre = Dense(3, 5, activation="tanh", rng=rng, name="check.dp_u")
    i_pre = Dense(3, 5, activation="tanh", rng=rng, name="check.dp_i")
    xu_in = rng.standard_normal(3)
    xi_in = rng.standard_normal(3)

    def loss_fn():
        y = head.predict(u_pre.forward(xu_in), i_pre.forward(xi_in))
        dx_u, dx_i = head.backward(1.0)
        u_pre.backward(dx_u)
        i_pre.backward(dx_i)
        return y

    return loss_fn, head.parameters() + u_pre.parameters() + i_pre.parameters()


def _case_fm_head(rng):
    head = FmHead(5, rank=3, rng=rng, name="check.fm")
    head.w.value[:] = rng.standard_normal(10)
    pre = Dense(4, 10, activation="tanh", rng=rng, name="check.fm_pre")
    x_in = rng.standard_normal(4)

    def loss_fn():
        y = head.predict_z(pre.forward(x_in))
        pre.backward(head.backward_z(1.0))
        return y

    return loss_fn, head.parameters() + pre.parameters()


def miniature_model(kind="cnn", head="dp", seed=0):
    """Smallest useful twin-tower model: d=8, units=4, T around 12."""
    tower = TowerConfig(kind=kind, embedding_dim=8, hidden_units=4, kernel=4,
                        stride=2, dense_units=4, dropout_rate=0.0)
    config = ModelConfig(tower=tower, head=head, fm_rank=2)
    return DeepConn(config, seed=seed)


def _case_full_model(rng, kind="cnn", head="dp", T=12):
    model = miniature_model(kind, head, seed=int(rng.integers(1 << 30)))
    if head == "dp":
        # Zero first-order weights would leave their gradient path untested.
        model.head.w.value[:] = 0.1 * rng.standard_normal(model.head.w.value.shape)
    user_doc = rng.standard_normal((T, 8))
    item_doc = rng.standard_normal((T, 8))
    target = 4.0

    def loss_fn():
        y = model.forward(user_doc, item_doc)
        model.backward(2.0 * (y - target))
        return (y - target) ** 2

    return loss_fn, model.parameters()


STANDARD_CASES = (
    ("dense", _case_dense),
    ("conv1d", _case_conv1d),
    ("maxpool_over_time", _case_maxpool),
    ("dropout_fixed_mask", _case_dropout),
    ("gru_3step", _case_gru),
    ("lstm_3step", _case_lstm),
    ("dp_head", _case_dp_head),
    ("fm_head", _case_fm_head),
    ("full_model_cnn_dp", lambda rng: _case_full_model(rng, "cnn", "dp")),
    ("full_model_gru_fm", lambda rng: _case_full_model(rng, "gru", "fm")),
    ("full_model_lstm_dp", lambda rng: _case_full_model(rng, "lstm", "dp")),
)


def standard_checks(eps=DEFAULT_EPS, seed=0, corrupt=False):
    """Run the whole battery; returns a list of (name, max_relative_error).

    corrupt=True scales each analytic gradient by 1.1 before comparison,
    a self-test of the checker (expected error around 0.1/2.1 ~ 0.05).
    """
    results = []
    for i, (name, build) in enumerate(STANDARD_CASES):
        rng = np.random.default_rng(seed + i)
        loss_fn, params = build(rng)
        if corrupt:
            loss_fn = _corrupted(loss_fn, params)
        results.append((name, gradient_check(loss_fn, params, eps)))
    return results


def _corrupted(loss_fn, params):
    def tampered():
        loss = loss_fn()
        for p in params:
            p.grad *= 1.1
        return loss
    return tampered
