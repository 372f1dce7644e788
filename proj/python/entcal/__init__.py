"""Entropy-profile analysis and entropy-aware decoding for n-gram models."""

from ._entcal import (
    EntcalError,
    Model,
    Profile,
    entropy,
    f1,
    ngram_repeats,
    nucleus,
    pearson,
    profile,
    repeat_score5,
    smooth,
    sweep,
    top_k,
    train,
    typical,
)

__all__ = [
    "EntcalError",
    "Model",
    "Profile",
    "entropy",
    "f1",
    "ngram_repeats",
    "nucleus",
    "pearson",
    "profile",
    "repeat_score5",
    "smooth",
    "sweep",
    "top_k",
    "train",
    "typical",
]
