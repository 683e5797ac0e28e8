"""
JSON and CSV interchange.

Complex numbers are written as [re, im] pairs, so a matrix is a row-major
nested list of pairs. Series are stored as coordinate tensors against the basis
of the named algebra of a context, and carry that context's description.
"""

import json
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
import pandas as pd

from .algebra_core import AlgebraContext, MatrixAlgebra, context_from_description
from .cumulant_engine import BLinearMap, CumulantSeries, MomentSeries, MultilinearSeries
from .exceptions import ConfigurationError

SERIES_KINDS = {'moment': MomentSeries, 'cumulant': CumulantSeries}


def encode_complex(values) -> list:
    values = np.asarray(values, dtype=complex)
    return np.stack([values.real, values.imag], axis=-1).tolist()


def decode_complex(data) -> np.ndarray:
    array = np.asarray(data, dtype=float)
    if array.ndim == 0 or array.shape[-1] != 2:
        raise ConfigurationError("Complex values must be given as [re, im] pairs")
    return array[..., 0] + 1j * array[..., 1]


def load_json(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"File not found: {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path} is not valid JSON: {exc}") from exc


def dump_json(data: dict, out=None, timestamp: bool = True) -> str:
    """Serialize deterministically; ``out`` is a path, a stream or None for stdout."""
    if timestamp:
        data = dict(data, generated_at=datetime.now(timezone.utc).isoformat())
    text = json.dumps(data, indent=2, sort_keys=True, default=_default)
    _write(text + '\n', out)
    return text


def _default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"Cannot serialize {type(value).__name__}")


def _write(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
    elif hasattr(out, 'write'):
        out.write(text)
    else:
        Path(out).write_text(text)


def dump_csv(frame: pd.DataFrame, out=None) -> str:
    text = frame.to_csv(index=False)
    _write(text, out)
    return text


def _algebra(context: AlgebraContext, name: str) -> MatrixAlgebra:
    try:
        return {'B': context.B, 'D': context.D, 'M': context.M}[name]
    except KeyError:
        raise ConfigurationError(f"Unknown algebra {name!r}; expected B or D") from None


def series_to_json(series: MultilinearSeries, context: AlgebraContext, algebra: str = 'B') -> dict:
    return {
        'kind': series.kind,
        'algebra': algebra,
        'context': context.description,
        'n_vars': series.n_vars,
        'order_cap': series.order_cap,
        'entries': [{'indices': list(indices), 'tensor': encode_complex(tensor)}
                    for indices, tensor in series.items()],
    }


def series_from_json(data: dict, context: Optional[AlgebraContext] = None,
                     kind: Optional[str] = None) -> Tuple[MultilinearSeries, AlgebraContext]:
    """Rebuild a series; the embedded context description is used when ``context`` is None."""
    try:
        if context is None:
            context = context_from_description(data['context'])
        kind = kind or data.get('kind', 'cumulant')
        cls = SERIES_KINDS.get(kind)
        if cls is None:
            raise ConfigurationError(f"Unknown series kind {kind!r}")
        series = cls(_algebra(context, data.get('algebra', 'B')), data['n_vars'], data['order_cap'])
        for entry in data['entries']:
            series.set_tensor(entry['indices'], decode_complex(entry['tensor']))
    except (KeyError, TypeError) as exc:
        raise ConfigurationError(f"Malformed series description: {exc}") from exc
    return series, context


def eta_to_json(eta: BLinearMap, context: AlgebraContext) -> dict:
    return {'context': context.description,
            'images': encode_complex(eta.algebra.coordinates(eta.images))}


def eta_from_json(data: dict, context: Optional[AlgebraContext] = None) -> Tuple[BLinearMap, AlgebraContext]:
    """η as B-coordinates of the images of the B basis, or ``diagonal`` as a real matrix on diag(ℂ^n)."""
    try:
        if context is None:
            context = context_from_description(data['context'])
        B = context.B
        if 'diagonal' in data:
            kernel = np.asarray(data['diagonal'], dtype=float)
            n = B.ambient_dim
            if kernel.shape != (n, n) or B.dim != n:
                raise ConfigurationError(f"A diagonal kernel needs B = diag(ℂ^{n}) and shape {n}×{n}")
            return BLinearMap.from_function(B, lambda b: np.diag(kernel @ np.diag(b))), context
        coords = decode_complex(data['images'])
        return BLinearMap(B, B.element(coords)), context
    except (KeyError, TypeError) as exc:
        raise ConfigurationError(f"Malformed covariance map description: {exc}") from exc


def load_context(path) -> AlgebraContext:
    data = load_json(path)
    return context_from_description(data.get('context', data))
