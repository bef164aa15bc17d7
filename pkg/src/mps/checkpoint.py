"""
MPS checkpoint files.

Layout: the 8-byte magic header b"MPSCHK1\\n" followed by an uncompressed numpy
.npz archive holding the two site tensors, the two bond-weight vectors and a
JSON metadata string (format version, delta, bond dimension, convergence info).
"""

import io
import json
import logging
import zipfile
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np

from src.mps.state import MpsState
from src.utils.errors import CheckpointError

logger = logging.getLogger(__name__)

MAGIC = b"MPSCHK1\n"
FORMAT_VERSION = 1


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "model_dump"):
        return obj.model_dump()
    raise TypeError(f"Object of type {type(obj).__name__} is not JSON serializable")


def checkpoint_path(directory: Union[str, Path], D: int, delta: float) -> Path:
    """Canonical file name for the converged state at one grid point."""
    return Path(directory) / f"mps_D{D}_delta{delta:+.6f}.chk"


def save_checkpoint(state: MpsState, path: Union[str, Path], metadata: Optional[dict] = None) -> Path:
    """Write `state` to `path`; extra `metadata` is merged over the state's own."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    meta = dict(state.metadata)
    meta.update(metadata or {})
    header = {
        "format_version": FORMAT_VERSION,
        "delta": state.delta,
        "bond_dim": state.bond_dim,
        "canonical": state.canonical,
        "metadata": meta,
    }

    buffer = io.BytesIO()
    np.savez(
        buffer,
        B0=state.tensors[0],
        B1=state.tensors[1],
        w0=state.weights[0],
        w1=state.weights[1],
        meta=np.array(json.dumps(header, sort_keys=True, default=_json_default)),
    )
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(buffer.getvalue())

    logger.debug(f"[MPS] Checkpoint written to {path}")
    return path


def load_checkpoint(path: Union[str, Path]) -> Tuple[MpsState, dict]:
    """
    Read a checkpoint written by save_checkpoint.

    Returns:
        (state, metadata). States saved in canonical form come back canonical with
        their Vidal environments attached; tensors are returned exactly as stored.

    Raises:
        FileNotFoundError, CheckpointError
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Checkpoint not found: {path}")

    raw = path.read_bytes()
    if not raw.startswith(MAGIC):
        raise CheckpointError(f"{path} is not an MPS checkpoint (bad magic header)")

    try:
        with np.load(io.BytesIO(raw[len(MAGIC):]), allow_pickle=False) as archive:
            tensors = (archive["B0"], archive["B1"])
            weights = (archive["w0"], archive["w1"])
            header = json.loads(str(archive["meta"]))
    except (KeyError, ValueError, OSError, EOFError, zipfile.BadZipFile) as e:
        raise CheckpointError(f"Corrupt checkpoint {path}: {e}")

    version = header.get("format_version")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"Unsupported checkpoint version {version} in {path}")

    state = MpsState(
        tensors=tensors,
        weights=weights,
        delta=header.get("delta"),
        metadata=header.get("metadata", {}),
    )
    if header.get("canonical"):
        state = _attach_environments(state)

    logger.debug(f"[MPS] Checkpoint loaded from {path} (D={state.bond_dim})")
    return state, header.get("metadata", {})


def _attach_environments(state: MpsState) -> MpsState:
    """Vidal-form environments for a stored canonical state, without touching its tensors."""
    state.left_envs = tuple(np.diag(np.asarray(w) ** 2).astype(np.complex128) for w in state.weights)
    state.right_envs = tuple(np.eye(len(w), dtype=np.complex128) for w in state.weights)
    state.canonical = True
    return state


def load_or_none(path: Union[str, Path], expected_run: Optional[dict] = None) -> Optional[Tuple[MpsState, dict]]:
    """
    Load a checkpoint if it exists, is readable and was written by the same run setup.

    Args:
        path: checkpoint file
        expected_run: fingerprint the stored metadata["run"] must equal (skipped if None)

    Returns:
        (state, metadata), or None when the file is missing, unreadable or stale
    """
    path = Path(path)
    if not path.exists():
        return None
    try:
        state, metadata = load_checkpoint(path)
    except CheckpointError as e:
        logger.warning(f"[MPS] Ignoring unreadable checkpoint: {e}")
        return None
    if expected_run is not None and metadata.get("run") != expected_run:
        logger.warning(f"[MPS] Ignoring stale checkpoint {path.name}: written by {metadata.get('run')}")
        return None
    return state, metadata
