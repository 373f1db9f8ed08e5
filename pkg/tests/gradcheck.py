"""Central finite-difference gradient check in float64."""

import numpy as np

from typegnn import tensor as T


def numeric_grad(f, x: T.Tensor, h: float = 1e-5, coords=None) -> dict:
    out = {}
    coords = coords if coords is not None else list(np.ndindex(x.data.shape))
    for i in coords:
        old = x.data[i]
        x.data[i] = old + h
        up = float(f().data)
        x.data[i] = old - h
        down = float(f().data)
        x.data[i] = old
        out[i] = (up - down) / (2 * h)
    return out


def max_rel_error(f, params: dict, h: float = 1e-5, max_coords: int = 40, seed: int = 0) -> float:
    """Worst relative error over (a sample of) coordinates of every parameter."""
    for p in params.values():
        p.grad = None
    with T.Tape() as tape:
        loss = f()
        grads = tape.backward(loss, params)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for name, p in params.items():
        all_coords = list(np.ndindex(p.data.shape))
        if len(all_coords) > max_coords:
            pick = rng.choice(len(all_coords), size=max_coords, replace=False)
            all_coords = [all_coords[i] for i in sorted(pick)]
        num = numeric_grad(f, p, h, all_coords)
        for i, n in num.items():
            a = float(grads[name][i])
            denom = max(abs(a), abs(n), 1e-6)
            worst = max(worst, abs(a - n) / denom)
    return worst
