"""Loading real decoder/perceiver models.

Model artifacts are external and release-specific, so loading is pluggable:

* ``ARTIC_BRIDGE_FACTORY=package.module:callable`` (or ``[models] factory``
  in the config file) names a zero-or-one-argument callable returning a
  ``(decoder, perceiver)`` pair satisfying the adapter interfaces. This is
  the supported way to wire up a specific model release.
* Without a factory, the built-in loader looks for the published
  articulatory-codec and syllable-segmenter packages (``sparc``/``sylber``)
  plus checkpoint paths in ``ARTIC_BRIDGE_SPARC`` / ``ARTIC_BRIDGE_SYLBER``
  (or ``[models] sparc`` / ``sylber``).

Anything unresolvable raises ModelMissing, which the server reports as a
handshake failure with code MODEL_MISSING.
"""

from __future__ import annotations

import importlib
import os
from pathlib import Path

SPARC_ENV = "ARTIC_BRIDGE_SPARC"
SYLBER_ENV = "ARTIC_BRIDGE_SYLBER"
FACTORY_ENV = "ARTIC_BRIDGE_FACTORY"


class ModelMissing(RuntimeError):
    """Model artifacts or runtime packages could not be resolved."""


def _load_factory(spec: str):
    module_name, _, attr = spec.partition(":")
    if not module_name or not attr:
        raise ModelMissing(f"factory spec must look like package.module:callable, got {spec!r}")
    try:
        module = importlib.import_module(module_name)
    except ImportError as exc:
        raise ModelMissing(f"cannot import factory module {module_name!r}: {exc}") from exc
    factory = getattr(module, attr, None)
    if factory is None:
        raise ModelMissing(f"module {module_name!r} has no attribute {attr!r}")
    return factory


def load_pretrained(settings: dict | None = None):
    """Resolve (decoder, perceiver) from a factory or the default packages."""
    settings = settings or {}
    factory_spec = settings.get("factory") or os.environ.get(FACTORY_ENV)
    if factory_spec:
        factory = _load_factory(factory_spec)
        return factory(settings) if factory.__code__.co_argcount else factory()

    sparc_path = settings.get("sparc") or os.environ.get(SPARC_ENV)
    sylber_path = settings.get("sylber") or os.environ.get(SYLBER_ENV)
    if not sparc_path or not sylber_path:
        raise ModelMissing(
            f"no model factory configured and {SPARC_ENV}/{SYLBER_ENV} are unset"
        )
    for label, path in (("decoder", sparc_path), ("perceiver", sylber_path)):
        if not Path(path).exists():
            raise ModelMissing(f"{label} checkpoint not found: {path}")
    return _default_models(sparc_path, sylber_path)


def _default_models(sparc_path: str, sylber_path: str):
    """Best-effort wiring for the published model packages."""
    try:
        sparc = importlib.import_module("sparc")
        sylber = importlib.import_module("sylber")
    except ImportError as exc:
        raise ModelMissing(
            f"model runtime packages not installed ({exc}); "
            f"set {FACTORY_ENV} to provide your own adapter factory"
        ) from exc
    return (
        _SparcDecoder(sparc, sparc_path),
        _SylberPerceiver(sylber, sylber_path),
    )


class _SparcDecoder:
    """Thin wrapper over the articulatory codec's decode entry point."""

    name = "sparc"

    def __init__(self, module, checkpoint_path: str):
        self._codec = module.load_model(ckpt=checkpoint_path)

    def decode(self, features, step_duration, sample_rate):
        import numpy as np

        waveform = self._codec.decode(
            ema=np.asarray(features[:, :12], dtype="float32"),
            loudness=np.asarray(features[:, 12:13], dtype="float32"),
        )
        return np.asarray(waveform, dtype=float).reshape(-1)


class _SylberPerceiver:
    """Thin wrapper over the syllable segmenter's inference entry point."""

    name = "sylber"

    def __init__(self, module, checkpoint_path: str):
        self._segmenter = module.Segmenter(model_ckpt=checkpoint_path)
        self.embedding_dim = getattr(self._segmenter, "embedding_dim", 768)

    def perceive(self, samples, sample_rate):
        import numpy as np

        from .adapters import Segment

        outputs = self._segmenter(wav=np.asarray(samples, dtype="float32"))
        segments = []
        for (start_s, end_s), embedding in zip(
            outputs["segments"], outputs["segment_features"]
        ):
            segments.append(Segment(float(start_s), float(end_s), np.asarray(embedding, dtype=float)))
        if segments:
            self.embedding_dim = segments[0].embedding.shape[0]
        return segments
