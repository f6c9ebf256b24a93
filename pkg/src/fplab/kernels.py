"""Hot numeric kernels for sigmoid MLP losses.

Every kernel exists twice: a numba version (``*_nb``) and a numpy version
(``*_np``). The public name is bound to one of them according to
:data:`fplab._numba.USE_NUMBA`. Both versions take the flat parameter
vector plus an int64 ``widths`` array and agree to rounding error.

Parameter layout is layer-major; inside a layer the weight matrix
(``widths[l+1] x widths[l]``) is stored row-major, followed by the bias.
"""

import numpy as np
from scipy.special import expit

from ._numba import USE_NUMBA, njit


def param_offsets(widths):
    widths = np.asarray(widths, dtype=np.int64)
    sizes = (widths[:-1] + 1) * widths[1:]
    return np.concatenate(([0], np.cumsum(sizes))).astype(np.int64)


def layer_views(theta, widths):
    """Yield ``(W, b)`` views into ``theta`` for each layer."""
    off = param_offsets(widths)
    for l in range(len(widths) - 1):
        m_in, m_out = int(widths[l]), int(widths[l + 1])
        block = theta[off[l]:off[l + 1]]
        yield block[:m_in * m_out].reshape(m_out, m_in), block[m_in * m_out:]


# ---------------------------------------------------------------------------
# forward / loss
# ---------------------------------------------------------------------------

def forward_np(theta, widths, X):
    a = X
    layers = list(layer_views(theta, widths))
    for l, (W, b) in enumerate(layers):
        z = a @ W.T + b
        a = expit(z) if l < len(layers) - 1 else z
    return a


@njit
def _sigmoid(t):
    if t >= 0.0:
        return 1.0 / (1.0 + np.exp(-t))
    e = np.exp(t)
    return e / (1.0 + e)


@njit
def _forward_store(theta, widths, X, A, Z, aoff):
    """Forward pass keeping every pre-activation ``Z`` and activation ``A``
    in flat buffers (layer ``l`` starts at ``aoff[l]``, shape ``n x m_l``)."""
    n = X.shape[0]
    H = widths.size - 1
    for s in range(n):
        for c in range(widths[0]):
            A[s * widths[0] + c] = X[s, c]
            Z[s * widths[0] + c] = X[s, c]
    p = 0
    for l in range(H):
        m_in = widths[l]
        m_out = widths[l + 1]
        boff = p + m_in * m_out
        ai = aoff[l]
        ao = aoff[l + 1]
        for s in range(n):
            for r in range(m_out):
                acc = theta[boff + r]
                wrow = p + r * m_in
                for c in range(m_in):
                    acc += theta[wrow + c] * A[ai + s * m_in + c]
                Z[ao + s * m_out + r] = acc
                if l < H - 1:
                    A[ao + s * m_out + r] = _sigmoid(acc)
                else:
                    A[ao + s * m_out + r] = acc
        p = boff + m_out


@njit
def _act_offsets(widths, n):
    H = widths.size - 1
    aoff = np.zeros(H + 2, np.int64)
    for l in range(H + 1):
        aoff[l + 1] = aoff[l] + n * widths[l]
    return aoff


@njit
def forward_nb(theta, widths, X):
    n = X.shape[0]
    H = widths.size - 1
    aoff = _act_offsets(widths, n)
    A = np.empty(aoff[H + 1])
    Z = np.empty(aoff[H + 1])
    _forward_store(theta, widths, X, A, Z, aoff)
    return A[aoff[H]:aoff[H + 1]].copy().reshape((n, widths[H]))


def mse_np(theta, widths, X, Y):
    r = forward_np(theta, widths, X) - Y
    return float(np.mean(r * r))


@njit
def _loss_t(theta, widths, XT, YT):
    # activations kept as (width, n) so each layer is one contiguous BLAS call
    A = XT
    p = 0
    H = widths.size - 1
    for l in range(H):
        m_in = widths[l]
        m_out = widths[l + 1]
        W = theta[p:p + m_in * m_out].reshape((m_out, m_in))
        boff = p + m_in * m_out
        Z = np.dot(W, A)
        for r in range(m_out):
            for s in range(Z.shape[1]):
                t = Z[r, s] + theta[boff + r]
                Z[r, s] = _sigmoid(t) if l < H - 1 else t
        A = Z
        p = boff + m_out
    acc = 0.0
    for r in range(A.shape[0]):
        for s in range(A.shape[1]):
            d = A[r, s] - YT[r, s]
            acc += d * d
    return acc / A.size


@njit
def mse_nb(theta, widths, X, Y):
    return _loss_t(np.ascontiguousarray(theta), widths,
                   np.ascontiguousarray(X.T), np.ascontiguousarray(Y.T))


# ---------------------------------------------------------------------------
# forward-difference loss increments L(theta + zeta e_i) - L(theta)
# ---------------------------------------------------------------------------

@njit
def fd_increments_nb(theta, widths, X, Y, zeta):
    """Return ``L(theta + zeta e_i) - L(theta)`` for every i, plus ``L(theta)``.

    A perturbation of one parameter only touches one unit of the next
    layer, so each increment is propagated from that unit onward instead
    of rerunning the whole network. Squared-error differences are formed
    as ``d (2 r + d)`` which avoids subtracting two nearly equal losses.
    """
    n = X.shape[0]
    H = widths.size - 1
    m_last = widths[H]
    aoff = _act_offsets(widths, n)
    A = np.empty(aoff[H + 1])
    Z = np.empty(aoff[H + 1])
    _forward_store(theta, widths, X, A, Z, aoff)

    res = np.empty(n * m_last)
    base = 0.0
    for s in range(n):
        for j in range(m_last):
            d = A[aoff[H] + s * m_last + j] - Y[s, j]
            res[s * m_last + j] = d
            base += d * d
    norm = n * m_last
    base /= norm

    poff = np.zeros(H + 1, np.int64)
    for l in range(H):
        poff[l + 1] = poff[l] + (widths[l] + 1) * widths[l + 1]
    wmax = 0
    for l in range(H + 1):
        if widths[l] > wmax:
            wmax = widths[l]
    buf = np.empty(wmax)
    buf2 = np.empty(wmax)
    out = np.empty(poff[H])

    for l in range(H):
        m_in = widths[l]
        m_out = widths[l + 1]
        p = poff[l]
        for r in range(m_out):
            for c in range(m_in + 1):
                if c < m_in:
                    idx = p + r * m_in + c
                else:
                    idx = p + m_in * m_out + r
                h = (theta[idx] + zeta) - theta[idx]
                acc = 0.0
                for s in range(n):
                    if c < m_in:
                        dz = h * A[aoff[l] + s * m_in + c]
                    else:
                        dz = h
                    if l == H - 1:
                        rs = res[s * m_last + r]
                        acc += dz * (2.0 * rs + dz)
                        continue
                    zo = aoff[l + 1] + s * m_out + r
                    da = _sigmoid(Z[zo] + dz) - A[zo]
                    # increment of the pre-activation two layers up
                    k = l + 1
                    m_k = widths[k]
                    m_n = widths[k + 1]
                    wk = poff[k]
                    for j in range(m_n):
                        buf[j] = theta[wk + j * m_k + r] * da
                    layer = k + 1
                    while layer < H:
                        m_a = widths[layer]
                        m_b = widths[layer + 1]
                        lo = aoff[layer] + s * m_a
                        for j in range(m_a):
                            buf[j] = _sigmoid(Z[lo + j] + buf[j]) - A[lo + j]
                        wl = poff[layer]
                        for i in range(m_b):
                            t = 0.0
                            for j in range(m_a):
                                t += theta[wl + i * m_a + j] * buf[j]
                            buf2[i] = t
                        for i in range(m_b):
                            buf[i] = buf2[i]
                        layer += 1
                    for j in range(m_last):
                        rs = res[s * m_last + j]
                        acc += buf[j] * (2.0 * rs + buf[j])
                out[idx] = acc / norm
    return out, base


def fd_increments_np(theta, widths, X, Y, zeta, chunk=2_000_000):
    """Vectorised twin of :func:`fd_increments_nb`; processes one layer at a
    time in chunks of output units so that temporaries stay near
    ``chunk`` doubles."""
    widths = np.asarray(widths, dtype=np.int64)
    H = len(widths) - 1
    layers = list(layer_views(theta, widths))
    acts, pres = [X], [X]
    a = X
    for l, (W, b) in enumerate(layers):
        z = a @ W.T + b
        a = expit(z) if l < H - 1 else z
        pres.append(z)
        acts.append(a)
    res = acts[-1] - Y
    norm = res.size
    base = float(np.sum(res * res) / norm)
    off = param_offsets(widths)
    out = np.empty(off[-1])

    for l in range(H):
        m_in, m_out = int(widths[l]), int(widths[l + 1])
        n = X.shape[0]
        block = theta[off[l]:off[l + 1]]
        # h[r, c]: effective step, bias as column m_in
        vals = np.concatenate(
            (block[:m_in * m_out].reshape(m_out, m_in), block[m_in * m_out:, None]), axis=1)
        h = (vals + zeta) - vals
        a_ext = np.concatenate((acts[l], np.ones((n, 1))), axis=1)  # n x (m_in+1)
        downstream = int(widths[l + 2]) if l + 2 <= H else 1
        per_unit = (m_in + 1) * n * max(downstream, 1)
        step = max(1, chunk // max(per_unit, 1))
        incr = np.empty((m_out, m_in + 1))
        for r0 in range(0, m_out, step):
            rs = slice(r0, min(m_out, r0 + step))
            dz = h[rs, :, None] * a_ext.T[None, :, :]  # (R, m_in+1, n)
            if l == H - 1:
                rr = res[:, rs].T[:, None, :]
                incr[rs] = np.sum(dz * (2.0 * rr + dz), axis=2)
                continue
            z_unit = pres[l + 1][:, rs].T[:, None, :]
            a_unit = acts[l + 1][:, rs].T[:, None, :]
            da = expit(z_unit + dz) - a_unit  # (R, m_in+1, n)
            W_next = layers[l + 1][0]  # m_{l+2} x m_{l+1}
            # (R, m_in+1, n, m_{l+2})
            delta = da[..., None] * W_next[:, rs].T[:, None, None, :]
            for k in range(l + 2, H + 1):
                if k == H:
                    break
                delta = expit(pres[k] + delta) - acts[k]
                delta = delta @ layers[k][0].T
            incr[rs] = np.sum(delta * (2.0 * res + delta), axis=(2, 3))
        w_part = incr[:, :m_in].ravel()
        out[off[l]:off[l] + m_in * m_out] = w_part / norm
        out[off[l] + m_in * m_out:off[l + 1]] = incr[:, m_in] / norm
    return out, base


# ---------------------------------------------------------------------------
# many parameter vectors at once (swarm / random search)
# ---------------------------------------------------------------------------

@njit
def batch_mse_nb(thetas, widths, X, Y):
    XT = np.ascontiguousarray(X.T)
    YT = np.ascontiguousarray(Y.T)
    out = np.empty(thetas.shape[0])
    for i in range(thetas.shape[0]):
        out[i] = _loss_t(np.ascontiguousarray(thetas[i]), widths, XT, YT)
    return out


def batch_mse_np(thetas, widths, X, Y):
    return np.array([mse_np(t, widths, X, Y) for t in thetas])


# ---------------------------------------------------------------------------
# pairwise squared distances (Gaussian label filter)
# ---------------------------------------------------------------------------

@njit
def pairwise_sqdist_nb(X):
    n, d = X.shape
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            acc = 0.0
            for c in range(d):
                t = X[i, c] - X[j, c]
                acc += t * t
            D[i, j] = acc
            D[j, i] = acc
    return D


def pairwise_sqdist_np(X):
    # explicit differences, row by row; avoids the |a|^2+|b|^2-2ab cancellation
    n = X.shape[0]
    D = np.empty((n, n))
    for i in range(n):
        diff = X - X[i]
        D[i] = np.einsum("ij,ij->i", diff, diff)
    return D


if USE_NUMBA:
    mse = mse_nb
    fd_increments = fd_increments_nb
    batch_mse = batch_mse_nb
    pairwise_sqdist = pairwise_sqdist_nb
else:
    mse = mse_np
    fd_increments = fd_increments_np
    batch_mse = batch_mse_np
    pairwise_sqdist = pairwise_sqdist_np

# forward stays on BLAS in both modes; it is matmul bound
forward = forward_np
