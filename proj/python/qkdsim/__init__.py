"""BB84 photonic key distribution simulator."""

import json

from . import _core
from ._core import (
    QkdError,
    decode_frame,
    decode_state,
    decode_trace_csv,
    detection_probability,
    encode_hello,
    encode_match_indices,
    encode_state,
    expected_qber,
    extract_key,
    guess_probability,
    measure_counts,
    otp,
    sample_compare,
    sift,
    transmission_fraction,
)


def simulate(**kwargs):
    """Run one session and return its report as a dict."""
    return json.loads(_core.simulate(**kwargs))


def replay_paper():
    """Report of the published 24-slot vector."""
    return json.loads(_core.replay_paper())


__all__ = [
    "QkdError",
    "decode_frame",
    "decode_state",
    "decode_trace_csv",
    "detection_probability",
    "encode_hello",
    "encode_match_indices",
    "encode_state",
    "expected_qber",
    "extract_key",
    "guess_probability",
    "measure_counts",
    "otp",
    "replay_paper",
    "sample_compare",
    "sift",
    "simulate",
    "transmission_fraction",
]
