"""Run one model over one dataset and record what happened.

Two backends share the descriptor's argument contract:

* ``container``: ``docker run`` (or ``podman run``) with the image directory
  and metadata file mounted read-only and the output directory writable, at
  the fixed in-container paths in :data:`CONTAINER_PATHS`.
* ``local``: executes the descriptor's ``local_entrypoint`` directly. Meant
  for mock models and CI machines without a container runtime.

A manifest is written (atomically) for every run that reached process
launch, whatever the outcome.
"""

from __future__ import annotations

import collections
import hashlib
import json
import logging
import os
import shutil
import signal
import subprocess
import sys
import tempfile
import time
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path

from filelock import FileLock

from mammoeval import __version__
from mammoeval.errors import LaunchError, ModelError, OutputMissing, Timeout
from mammoeval.registry import ResolvedInvocation

log = logging.getLogger(__name__)

BACKENDS = ("container", "local")
CONTAINER_RUNTIMES = ("docker", "podman")
CONTAINER_PATHS = {
    "image_dir": "/mnt/images",
    "metadata_dir": "/mnt/metadata",
    "output_dir": "/mnt/output",
}
STDERR_TAIL_LINES = 40


@dataclass(frozen=True)
class RunManifest:
    model: str
    variant: str | None
    dataset: str
    device: str
    backend: str
    started_at: str
    finished_at: str
    exit_status: int | None
    metadata_sha256: str
    output_sha256: str | None
    master_seed: int
    harness_version: str = __version__
    command: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        d = asdict(self)
        d["command"] = list(self.command)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> RunManifest:
        d = dict(d)
        d["command"] = tuple(d.get("command", ()))
        return cls(**d)


def sha256_file(path: Path | str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="microseconds")


def atomic_write_text(path: Path | str, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_manifest(path: Path | str, manifest: RunManifest) -> None:
    atomic_write_text(path, json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n")


def read_manifest(path: Path | str) -> RunManifest:
    return RunManifest.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _gpu_available() -> bool:
    smi = shutil.which("nvidia-smi")
    if smi is None:
        return False
    try:
        res = subprocess.run([smi, "-L"], capture_output=True, timeout=10)
    except (OSError, subprocess.SubprocessError):
        return False
    return res.returncode == 0 and b"GPU" in res.stdout


def list_devices() -> set[str]:
    devices = {"cpu"}
    if _gpu_available():
        devices.add("gpu")
    return devices


def container_runtime() -> str | None:
    for name in CONTAINER_RUNTIMES:
        path = shutil.which(name)
        if path:
            return path
    return None


def container_command(inv: ResolvedInvocation, runtime: str) -> list[str]:
    image_dir = Path(inv.values["IMAGE_DIR"]).resolve()
    metadata = Path(inv.values["METADATA_PATH"]).resolve()
    output = Path(inv.values["OUTPUT_PATH"]).resolve()
    inside = inv.with_paths(
        CONTAINER_PATHS["image_dir"],
        f"{CONTAINER_PATHS['metadata_dir']}/{metadata.name}",
        f"{CONTAINER_PATHS['output_dir']}/{output.name}",
    )
    cmd = [
        runtime, "run", "--rm",
        "-v", f"{image_dir}:{CONTAINER_PATHS['image_dir']}:ro",
        "-v", f"{metadata}:{CONTAINER_PATHS['metadata_dir']}/{metadata.name}:ro",
        "-v", f"{output.parent}:{CONTAINER_PATHS['output_dir']}",
    ]
    if inv.device == "gpu":
        cmd += ["--gpus", "all"]
    return cmd + [inv.container_image, *inside.args]


def local_command(inv: ResolvedInvocation) -> list[str]:
    script = inv.local_entrypoint
    if script is None:
        raise LaunchError(f"model {inv.model!r} has no local_entrypoint for the local backend")
    if not Path(script).is_file():
        raise LaunchError(f"local entrypoint {script} does not exist")
    prefix = [sys.executable] if str(script).endswith(".py") else []
    return [*prefix, str(script), *inv.args]


def build_command(inv: ResolvedInvocation, backend: str) -> list[str]:
    if backend == "local":
        return local_command(inv)
    if backend == "container":
        runtime = container_runtime()
        if runtime is None:
            raise LaunchError(f"no container runtime found (looked for {', '.join(CONTAINER_RUNTIMES)})")
        return container_command(inv, runtime)
    raise LaunchError(f"unknown backend {backend!r}; expected one of {BACKENDS}")


def _tail(path: Path, n: int = STDERR_TAIL_LINES) -> str:
    try:
        with open(path, encoding="utf-8", errors="replace") as f:
            return "".join(collections.deque(f, maxlen=n))
    except OSError:
        return ""


def _kill_tree(proc: subprocess.Popen) -> None:
    try:
        os.killpg(proc.pid, signal.SIGKILL)
    except ProcessLookupError:
        pass
    proc.wait()


def device_lock(device: str) -> FileLock:
    return FileLock(os.path.join(tempfile.gettempdir(), f"mammoeval-device-{device}.lock"))


def run_model(inv: ResolvedInvocation, backend: str = "container", timeout: float | None = None, *,
              run_dir: Path | str, dataset_name: str = "dataset", master_seed: int = 0,
              env: dict[str, str] | None = None) -> tuple[Path, RunManifest]:
    """Execute ``inv`` and return the output CSV path and the run manifest.

    ``run_dir`` receives ``model.log`` (stdout+stderr of the model) and
    ``manifest.json``. The only model-produced file read back is the
    declared output path.
    """
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    if inv.device not in list_devices():
        raise LaunchError(f"device {inv.device!r} requested but not available")
    cmd = build_command(inv, backend)

    output = Path(inv.values["OUTPUT_PATH"])
    output.parent.mkdir(parents=True, exist_ok=True)
    if output.exists():
        output.unlink()
    metadata_sha = sha256_file(inv.values["METADATA_PATH"])
    log_path = run_dir / "model.log"

    with device_lock(inv.device):
        started = utc_now()
        with open(log_path, "wb") as logf:
            try:
                proc = subprocess.Popen(cmd, stdout=logf, stderr=subprocess.STDOUT, stdin=subprocess.DEVNULL,
                                        start_new_session=True, env=env)
            except OSError as e:
                raise LaunchError(f"cannot launch {cmd[0]}: {e}") from None
            timed_out = False
            t0 = time.monotonic()
            try:
                status = proc.wait(timeout=timeout)
            except subprocess.TimeoutExpired:
                timed_out = True
                _kill_tree(proc)
                status = proc.returncode
            except BaseException:
                _kill_tree(proc)
                raise
        finished = utc_now()
    log.info("model %s exited with %s after %.2fs", inv.model, status, time.monotonic() - t0)

    has_output = output.is_file() and output.stat().st_size > 0
    manifest = RunManifest(
        model=inv.model,
        variant=inv.variant,
        dataset=dataset_name,
        device=inv.device,
        backend=backend,
        started_at=started,
        finished_at=finished,
        exit_status=None if timed_out else status,
        metadata_sha256=metadata_sha,
        output_sha256=sha256_file(output) if has_output and not timed_out else None,
        master_seed=master_seed,
        command=tuple(cmd),
    )
    write_manifest(run_dir / "manifest.json", manifest)

    tail = _tail(log_path)
    if timed_out:
        raise Timeout(f"model {inv.model!r} exceeded {timeout}s and was killed", None, tail)
    if status != 0:
        raise ModelError(f"model {inv.model!r} exited with status {status}\n{tail}", status, tail)
    if not has_output:
        raise OutputMissing(f"model {inv.model!r} exited 0 but wrote no output at {output}", 0, tail)
    return output, manifest
