"""Shared fixtures and independent oracles for the test suite."""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from slotshare import NetworkSizes, Recommendation, SlotLengths


@pytest.fixture
def small_collision():
    return SlotLengths(idle=0.01, success=1.01, collision=0.101)


@pytest.fixture
def equal_slots():
    return SlotLengths(idle=0.01, success=1.01, collision=1.01)


@pytest.fixture
def large_collision():
    return SlotLengths(idle=0.01, success=1.01, collision=2.02)


def enumerate_slot_probabilities(
    sizes: NetworkSizes,
    tau_aon: float,
    tau_ton: float,
    p_r: float | None = None,
):
    """Slot-outcome probabilities by exhaustive enumeration.

    Walks every transmit pattern of every node (and, cooperatively, both
    device outcomes), accumulating exact event probabilities.  Independent of
    the closed-form kernels it checks.
    """
    na, nt = sizes.n_aon, sizes.n_ton

    def channel(n_active_a, n_active_t):
        """Enumerate patterns when n_active_* nodes of each network may send."""
        acc = {
            "idle": 0.0,
            "succ_a": 0.0,
            "succ_t": 0.0,
            "succ_node_a": 0.0,
            "succ_node_t": 0.0,
            "collision": 0.0,
        }
        for bits_a in itertools.product([0, 1], repeat=n_active_a):
            pa = np.prod([tau_aon if b else 1.0 - tau_aon for b in bits_a]) if bits_a else 1.0
            for bits_t in itertools.product([0, 1], repeat=n_active_t):
                pt = (
                    np.prod([tau_ton if b else 1.0 - tau_ton for b in bits_t])
                    if bits_t
                    else 1.0
                )
                prob = float(pa * pt)
                k = sum(bits_a) + sum(bits_t)
                if k == 0:
                    acc["idle"] += prob
                elif k >= 2:
                    acc["collision"] += prob
                elif sum(bits_a) == 1:
                    acc["succ_a"] += prob
                    if bits_a[0]:
                        acc["succ_node_a"] += prob
                else:
                    acc["succ_t"] += prob
                    if bits_t[0]:
                        acc["succ_node_t"] += prob
        return acc

    if p_r is None:
        parts = [(1.0, channel(na, nt))]
    else:
        parts = [(p_r, channel(na, 0)), (1.0 - p_r, channel(0, nt))]

    def mix(key):
        return sum(w * acc[key] for w, acc in parts)

    p_succ_node_a = mix("succ_node_a")
    p_succ_node_t = mix("succ_node_t")
    p_success = mix("succ_a") + mix("succ_t")
    return {
        "p_idle": mix("idle"),
        "p_success_total": p_success,
        "p_success_node_aon": p_succ_node_a,
        "p_success_node_ton": p_succ_node_t,
        # A node is busy when it stays silent while exactly one other
        # transmitter succeeds.
        "p_busy_aon": p_success - p_succ_node_a,
        "p_busy_ton": p_success - p_succ_node_t,
        "p_collision": mix("collision"),
    }


def assert_ordered_beyond_se(means, ses, label=""):
    """Assert a non-decreasing sequence of means beyond 2 pooled standard errors."""
    for i in range(len(means) - 1):
        pooled = float(np.hypot(ses[i], ses[i + 1]))
        assert means[i + 1] - means[i] >= -2.0 * pooled, (
            f"{label}: mean[{i + 1}]={means[i + 1]:.5f} < mean[{i}]={means[i]:.5f}"
            f" beyond 2 pooled SE ({pooled:.5f})"
        )


HEADS = Recommendation.HEADS
TAILS = Recommendation.TAILS
