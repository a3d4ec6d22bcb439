"""Regenerate the tiny golden tensors in tests/data with an independent torch forward pass.

Usage: python3 tools/make_golden.py
"""

from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

from freev.io import write_fvt
from freev.net import gen_weights

OUT = Path(__file__).resolve().parents[1] / "tests" / "data"
TINY = {"n_mels": 4, "n_freq": 5, "psp_dim": 6, "psp_blocks": 2, "asp_dim": 5,
        "asp_blocks": 1, "hidden": 8, "kernel": 7}
N_FRAMES = 9


def block(x, t, prefix):
    # x: (1, C, T), channels-first as in the usual reference implementation
    g = lambda k: torch.from_numpy(t[f"{prefix}.{k}"].astype(np.float64))
    k = g("dw_w").shape[-1]
    h = F.conv1d(x, g("dw_w"), g("dw_b"), padding=k // 2, groups=x.shape[1])
    h = h.transpose(1, 2)
    h = F.layer_norm(h, (h.shape[-1],), g("ln_w"), g("ln_b"), eps=1e-6)
    h = F.linear(h, g("pw1_w"), g("pw1_b"))
    h = F.gelu(h)
    gx = torch.norm(h, p=2, dim=1, keepdim=True)
    nx = gx / (gx.mean(dim=-1, keepdim=True) + 1e-6)
    h = g("grn_gamma") * (h * nx) + g("grn_beta") + h
    h = F.linear(h, g("pw2_w"), g("pw2_b"))
    return x + h.transpose(1, 2)


def conv(x, t, name):
    w = torch.from_numpy(t[f"{name}.w"].astype(np.float64))
    b = torch.from_numpy(t[f"{name}.b"].astype(np.float64))
    return F.conv1d(x, w, b, padding=w.shape[-1] // 2)


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(1234)
    weights = gen_weights(11, TINY)
    t = weights.tensors
    m = rng.uniform(0.0, 1.0, (TINY["n_mels"], TINY["n_freq"])).astype(np.float32)
    mel = rng.uniform(0.05, 1.0, (N_FRAMES, TINY["n_mels"])).astype(np.float32)

    x = torch.from_numpy(mel.astype(np.float64))
    m_t = torch.from_numpy(m.astype(np.float64))
    prior = torch.clamp(torch.abs(x @ torch.linalg.pinv(m_t).T), min=1e-5).log()
    h = prior.T.unsqueeze(0)
    for i in range(TINY["asp_blocks"]):
        h = block(h, t, f"asp.blocks.{i}")
    asp = h[0].T.numpy()

    h = conv(x.T.unsqueeze(0), t, "psp.in_conv")
    for i in range(TINY["psp_blocks"]):
        h = block(h, t, f"psp.blocks.{i}")
    r = conv(h, t, "psp.out_r")[0].T
    im = conv(h, t, "psp.out_i")[0].T
    phase = torch.atan2(im, r).numpy()

    weights.save(OUT / "golden_weights.fvw")
    write_fvt(OUT / "golden_filter.fvt", m)
    write_fvt(OUT / "golden_mel.fvt", mel)
    write_fvt(OUT / "golden_asp.fvt", asp)
    write_fvt(OUT / "golden_psp.fvt", phase)
    print("asp range", asp.min(), asp.max(), "phase range", phase.min(), phase.max())


if __name__ == "__main__":
    main()
