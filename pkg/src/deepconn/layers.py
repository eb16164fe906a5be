"""Differentiable building blocks on float64 numpy arrays.

Every layer implements `forward(...)` caching whatever the backward pass
needs, and `backward(dout)` returning the gradient w.r.t. its input while
accumulating parameter gradients with `+=`.  Gradients therefore add up
across calls until `zero_grad()` is invoked, which is what the optimizers
and the finite-difference checker rely on.

Single-sample convention throughout: a document is a (T, d) matrix, hidden
states are 1-d vectors.  Batching is a loop one level up.
"""

import numpy as np

from .errors import ConfigError, ShapeError


class Parameter:
    """A trainable array paired with its accumulated gradient."""

    def __init__(self, value, name=""):
        self.value = np.array(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)
        self.name = name

    @property
    def shape(self):
        return self.value.shape

    def zero_grad(self):
        self.grad[...] = 0.0

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.value.shape})"


def glorot_uniform(shape, rng, fan_in=None, fan_out=None):
    """Uniform init with limit sqrt(6 / (fan_in + fan_out)).

    For 2-d weights the fans are the two axes; conv kernels (C, K, d)
    use fan_in = K*d and fan_out = C.
    """
    if fan_in is None or fan_out is None:
        if len(shape) == 2:
            fan_in, fan_out = shape
        elif len(shape) == 3:
            c, k, d = shape
            fan_in, fan_out = k * d, c
        else:
            raise ConfigError(f"cannot infer fans for shape {shape}")
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def sigmoid(x):
    # Split by sign to avoid exp overflow on large negative inputs.
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


_ACTIVATIONS = ("relu", "tanh", "identity")


def _activate(name, z):
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "tanh":
        return np.tanh(z)
    if name == "identity":
        return z
    raise ConfigError(f"unknown activation {name!r}, expected one of {_ACTIVATIONS}")


def _activation_grad(name, z, out):
    """d activation / d z, expressed from the pre-activation z and output."""
    if name == "relu":
        return (z > 0.0).astype(np.float64)
    if name == "tanh":
        return 1.0 - out * out
    return np.ones_like(z)


class Dense:
    """Fully connected layer: activation(x @ W + b)."""

    def __init__(self, n_in, n_out, activation="identity", rng=None, name="dense"):
        if activation not in _ACTIVATIONS:
            raise ConfigError(f"unknown activation {activation!r}")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.n_in = n_in
        self.n_out = n_out
        self.activation = activation
        self.W = Parameter(glorot_uniform((n_in, n_out), rng), f"{name}.W")
        self.b = Parameter(np.zeros(n_out), f"{name}.b")
        self._cache = None

    def parameters(self):
        return [self.W, self.b]

    def forward(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n_in,):
            raise ShapeError(
                f"dense expected input shape ({self.n_in},), got {x.shape}")
        z = x @ self.W.value + self.b.value
        out = _activate(self.activation, z)
        self._cache = (x, z, out)
        return out

    def backward(self, dout):
        x, z, out = self._cache
        dz = np.asarray(dout) * _activation_grad(self.activation, z, out)
        self.W.grad += np.outer(x, dz)
        self.b.grad += dz
        return dz @ self.W.value.T


class Conv1d:
    """Valid temporal convolution over a (T, d) input, ReLU activation.

    out[l, c] = relu(sum_{k,j} x[l*S + k, j] * kernels[c, k, j] + bias[c])
    with L = floor((T - K) / S) + 1 output positions.
    """

    def __init__(self, in_dim, channels, kernel=8, stride=6, rng=None, name="conv"):
        if kernel < 1 or stride < 1 or channels < 1:
            raise ConfigError("conv1d needs channels, kernel and stride >= 1")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.in_dim = in_dim
        self.channels = channels
        self.kernel = kernel
        self.stride = stride
        self.kernels = Parameter(
            glorot_uniform((channels, kernel, in_dim), rng), f"{name}.kernels")
        self.bias = Parameter(np.zeros(channels), f"{name}.bias")
        self._cache = None

    def parameters(self):
        return [self.kernels, self.bias]

    def output_length(self, T):
        if T < self.kernel:
            raise ShapeError(
                f"conv1d needs T >= kernel ({self.kernel}), got T={T}")
        return (T - self.kernel) // self.stride + 1

    def forward(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ShapeError(
                f"conv1d expected (T, {self.in_dim}) input, got {x.shape}")
        T = x.shape[0]
        L = self.output_length(T)
        K, S, C = self.kernel, self.stride, self.channels
        # im2col: one (L, K*d) matrix of flattened windows, then a single matmul.
        windows = np.lib.stride_tricks.sliding_window_view(x, (K, self.in_dim))
        windows = windows[::S, 0].reshape(L, K * self.in_dim)
        z = windows @ self.kernels.value.reshape(C, -1).T + self.bias.value
        out = np.maximum(z, 0.0)
        self._cache = (x.shape, windows, z)
        return out

    def backward(self, dout):
        (T, d), windows, z = self._cache
        K, S, C = self.kernel, self.stride, self.channels
        L = windows.shape[0]
        dz = np.asarray(dout) * (z > 0.0)
        self.kernels.grad += (dz.T @ windows).reshape(C, K, d)
        self.bias.grad += dz.sum(axis=0)
        dwindows = dz @ self.kernels.value.reshape(C, -1)
        dx = np.zeros((T, d))
        for l in range(L):
            dx[l * S:l * S + K] += dwindows[l].reshape(K, d)
        return dx


class MaxPoolOverTime:
    """Per-channel maximum over all temporal positions of a (L, C) input."""

    def __init__(self):
        self._cache = None

    def parameters(self):
        return []

    def forward(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[0] < 1:
            raise ShapeError(f"maxpool expected non-empty (L, C) input, got {x.shape}")
        argmax = np.argmax(x, axis=0)  # first maximum per channel on ties
        self._cache = (x.shape, argmax)
        return x[argmax, np.arange(x.shape[1])]

    def backward(self, dout):
        (L, C), argmax = self._cache
        dx = np.zeros((L, C))
        dx[argmax, np.arange(C)] = dout
        return dx


class Flatten:
    """Reshape to 1-d. Structural layer; gradient is the inverse reshape."""

    def __init__(self):
        self._shape = None

    def parameters(self):
        return []

    def forward(self, x):
        x = np.asarray(x, dtype=np.float64)
        self._shape = x.shape
        return x.reshape(-1)

    def backward(self, dout):
        return np.asarray(dout).reshape(self._shape)


class Dropout:
    """Inverted dropout: keep with probability 1-p and scale kept entries by 1/(1-p)."""

    def __init__(self, rate):
        if not 0.0 <= rate < 1.0:
            raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = rate
        self._cache = None

    def parameters(self):
        return []

    def forward(self, x, train=False, rng=None, mask=None):
        """Eval mode (train=False) is the identity.

        In train mode the mask is drawn from `rng` unless an explicit
        boolean `mask` is supplied (used by the gradient checker, which
        needs the same mask on every evaluation).
        """
        x = np.asarray(x, dtype=np.float64)
        if not train or self.rate == 0.0:
            self._cache = None
            return x
        if mask is None:
            if rng is None:
                raise ConfigError("train-mode dropout needs an rng or an explicit mask")
            mask = rng.random(x.shape) >= self.rate
        scale = 1.0 / (1.0 - self.rate)
        self._cache = (mask, scale)
        return x * mask * scale

    def backward(self, dout):
        if self._cache is None:
            return np.asarray(dout, dtype=np.float64)
        mask, scale = self._cache
        return np.asarray(dout) * mask * scale


class GruCell:
    """Gated recurrent unit, no bias terms.

    z   = sigmoid(x_t @ U_z + s_prev @ W_z)
    r   = sigmoid(x_t @ U_r + s_prev @ W_r)
    h   = tanh(x_t @ U_h + (s_prev * r) @ W_h)
    s_t = (1 - z) * s_prev + z * h

    Step caches pile up on a stack; `backward_step` pops them in reverse,
    so a T-step unroll is T `step` calls followed by T `backward_step` calls.
    """

    def __init__(self, input_dim, hidden_dim, rng=None, name="gru"):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.input_dim = input_dim
        self.hidden_dim = hidden_dim
        self.U_z = Parameter(glorot_uniform((input_dim, hidden_dim), rng), f"{name}.U_z")
        self.U_r = Parameter(glorot_uniform((input_dim, hidden_dim), rng), f"{name}.U_r")
        self.U_h = Parameter(glorot_uniform((input_dim, hidden_dim), rng), f"{name}.U_h")
        self.W_z = Parameter(glorot_uniform((hidden_dim, hidden_dim), rng), f"{name}.W_z")
        self.W_r = Parameter(glorot_uniform((hidden_dim, hidden_dim), rng), f"{name}.W_r")
        self.W_h = Parameter(glorot_uniform((hidden_dim, hidden_dim), rng), f"{name}.W_h")
        self._stack = []

    def parameters(self):
        return [self.U_z, self.U_r, self.U_h, self.W_z, self.W_r, self.W_h]

    def initial_state(self):
        return np.zeros(self.hidden_dim)

    def reset(self):
        self._stack.clear()

    def step(self, s_prev, x_t):
        s_prev = np.asarray(s_prev, dtype=np.float64)
        x_t = np.asarray(x_t, dtype=np.float64)
        if x_t.shape != (self.input_dim,) or s_prev.shape != (self.hidden_dim,):
            raise ShapeError(
                f"gru step expected x ({self.input_dim},) and state "
                f"({self.hidden_dim},), got {x_t.shape} and {s_prev.shape}")
        z = sigmoid(x_t @ self.U_z.value + s_prev @ self.W_z.value)
        r = sigmoid(x_t @ self.U_r.value + s_prev @ self.W_r.value)
        h = np.tanh(x_t @ self.U_h.value + (s_prev * r) @ self.W_h.value)
        s_t = (1.0 - z) * s_prev + z * h
        self._stack.append((x_t, s_prev, z, r, h))
        return s_t

    def backward_step(self, ds_t):
        """Gradient of one step; returns (ds_prev, dx_t)."""
        x_t, s_prev, z, r, h = self._stack.pop()
        ds_t = np.asarray(ds_t, dtype=np.float64)

        dz = ds_t * (h - s_prev)
        dh = ds_t * z
        ds_prev = ds_t * (1.0 - z)

        da_h = dh * (1.0 - h * h)            # h = tanh(a_h)
        sr = s_prev * r
        self.U_h.grad += np.outer(x_t, da_h)
        self.W_h.grad += np.outer(sr, da_h)
        dx_t = da_h @ self.U_h.value.T
        dsr = da_h @ self.W_h.value.T
        ds_prev += dsr * r
        dr = dsr * s_prev

        da_r = dr * r * (1.0 - r)            # r = sigmoid(a_r)
        self.U_r.grad += np.outer(x_t, da_r)
        self.W_r.grad += np.outer(s_prev, da_r)
        dx_t += da_r @ self.U_r.value.T
        ds_prev += da_r @ self.W_r.value.T

        da_z = dz * z * (1.0 - z)            # z = sigmoid(a_z)
        self.U_z.grad += np.outer(x_t, da_z)
        self.W_z.grad += np.outer(s_prev, da_z)
        dx_t += da_z @ self.U_z.value.T
        ds_prev += da_z @ self.W_z.value.T

        return ds_prev, dx_t


class LstmCell:
    """Standard LSTM cell with per-gate biases; forget-gate bias starts at 1.

    i = sigmoid(x @ U_i + h_prev @ W_i + b_i)
    f = sigmoid(x @ U_f + h_prev @ W_f + b_f)
    o = sigmoid(x @ U_o + h_prev @ W_o + b_o)
    g = tanh   (x @ U_g + h_prev @ W_g + b_g)
    c = f * c_prev + i * g
    h = o * tanh(c)
    """

    GATES = ("i", "f", "o", "g")

    def __init__(self, input_dim, hidden_dim, rng=None, name="lstm"):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.input_dim = input_dim
        self.hidden_dim = hidden_dim
        self.U = {}
        self.W = {}
        self.b = {}
        for gate in self.GATES:
            self.U[gate] = Parameter(
                glorot_uniform((input_dim, hidden_dim), rng), f"{name}.U_{gate}")
            self.W[gate] = Parameter(
                glorot_uniform((hidden_dim, hidden_dim), rng), f"{name}.W_{gate}")
            bias = np.ones(hidden_dim) if gate == "f" else np.zeros(hidden_dim)
            self.b[gate] = Parameter(bias, f"{name}.b_{gate}")
        self._stack = []

    def parameters(self):
        out = []
        for gate in self.GATES:
            out.extend([self.U[gate], self.W[gate], self.b[gate]])
        return out

    def initial_state(self):
        return np.zeros(self.hidden_dim), np.zeros(self.hidden_dim)

    def reset(self):
        self._stack.clear()

    def step(self, state, x_t):
        h_prev, c_prev = state
        h_prev = np.asarray(h_prev, dtype=np.float64)
        c_prev = np.asarray(c_prev, dtype=np.float64)
        x_t = np.asarray(x_t, dtype=np.float64)
        if x_t.shape != (self.input_dim,) or h_prev.shape != (self.hidden_dim,):
            raise ShapeError(
                f"lstm step expected x ({self.input_dim},) and state "
                f"({self.hidden_dim},), got {x_t.shape} and {h_prev.shape}")
        a = {g: x_t @ self.U[g].value + h_prev @ self.W[g].value + self.b[g].value
             for g in self.GATES}
        i = sigmoid(a["i"])
        f = sigmoid(a["f"])
        o = sigmoid(a["o"])
        g = np.tanh(a["g"])
        c = f * c_prev + i * g
        tc = np.tanh(c)
        h = o * tc
        self._stack.append((x_t, h_prev, c_prev, i, f, o, g, tc))
        return h, c

    def backward_step(self, dh, dc):
        """Gradient of one step; returns (dh_prev, dc_prev, dx_t)."""
        x_t, h_prev, c_prev, i, f, o, g, tc = self._stack.pop()
        dh = np.asarray(dh, dtype=np.float64)
        dc = np.asarray(dc, dtype=np.float64) + dh * o * (1.0 - tc * tc)

        do = dh * tc
        di = dc * g
        df = dc * c_prev
        dg = dc * i
        dc_prev = dc * f

        da = {
            "i": di * i * (1.0 - i),
            "f": df * f * (1.0 - f),
            "o": do * o * (1.0 - o),
            "g": dg * (1.0 - g * g),
        }
        dx_t = np.zeros(self.input_dim)
        dh_prev = np.zeros(self.hidden_dim)
        for gate in self.GATES:
            self.U[gate].grad += np.outer(x_t, da[gate])
            self.W[gate].grad += np.outer(h_prev, da[gate])
            self.b[gate].grad += da[gate]
            dx_t += da[gate] @ self.U[gate].value.T
            dh_prev += da[gate] @ self.W[gate].value.T
        return dh_prev, dc_prev, dx_t
