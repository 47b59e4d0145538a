"""Amplification factor, minimal per-subcarrier power and relay selection.

For a subcarrier carrying demand term ``mr`` through one AF relay, the
total power as a function of the relay amplification ``alpha`` is

    sigma2 * [mr * (1 + alpha*g2) * (1 + alpha*h2) / (h2*g2*alpha) + alpha]

which is convex in ``alpha > 0``. Its minimiser and minimum are closed form;
for large ``mr`` the minimum is ``mr * eta`` with ``eta`` depending on the
channels only, so the relay can be chosen before any rate is known.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization


@dataclass(frozen=True)
class RelayChoice:
    relay: np.ndarray
    eta: np.ndarray
    h2: np.ndarray
    g2: np.ndarray


def demand_term(r_down, r_up, w):
    """``(2^(2 r_down / w) - 1) + (2^(2 r_up / w) - 1)``."""
    return np.expm1(np.log(2.0) * 2.0 * np.asarray(r_down) / w) + np.expm1(
        np.log(2.0) * 2.0 * np.asarray(r_up) / w
    )


def alpha_star(mr, h2, g2):
    return np.sqrt(mr / (h2 * g2 * (mr + 1.0)))


def relay_power_objective(alpha, mr, h2, g2, sigma2=1.0):
    """Total node power on one subcarrier for a given amplification factor."""
    return sigma2 * (mr * (1.0 + alpha * g2) * (1.0 + alpha * h2) / (h2 * g2 * alpha) + alpha)


def pmin_exact(mr, h2, g2, sigma2=1.0):
    return sigma2 * (mr / h2 + mr / g2 + 2.0 * np.sqrt(mr * (mr + 1.0) / (h2 * g2)))


def eta(h2, g2, sigma2=1.0):
    """Integrated two-way noise-channel coefficient."""
    return sigma2 * (1.0 / h2 + 1.0 / g2 + 2.0 / np.sqrt(h2 * g2))


def select_relays(chan: ChannelRealization, mr=None) -> RelayChoice:
    """Pick one relay per subcarrier.

    With ``mr`` (scalar or per-subcarrier) the exact minimal power decides;
    without it the channel-only ``eta`` criterion is used. ``np.argmin``
    returns the first minimum, so ties go to the lowest relay index.
    """
    if mr is None:
        cost = eta(chan.h2, chan.g2, chan.sigma2)
    else:
        mr = np.broadcast_to(np.asarray(mr, dtype=float), (chan.n_subcarriers,))
        if np.any(mr <= 0):
            raise ValueError("exact relay selection needs mr > 0 on every subcarrier")
        cost = pmin_exact(mr[None, :], chan.h2, chan.g2, chan.sigma2)
    relay = np.argmin(cost, axis=0)
    cols = np.arange(chan.n_subcarriers)
    h2 = chan.h2[relay, cols]
    g2 = chan.g2[relay, cols]
    return RelayChoice(relay=relay, eta=eta(h2, g2, chan.sigma2), h2=h2, g2=g2)
