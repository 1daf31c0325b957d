import os
from typing import Optional

from .workspace import Workspace

DEFAULT_OUTPUT_DIR = "./altsp-output"


def resolve_output_dir(explicit: Optional[str] = None) -> str:
    """``explicit`` if given, else ``ALTSP_OUTPUT_DIR``, else the default."""
    if explicit:
        return explicit
    return os.environ.get("ALTSP_OUTPUT_DIR") or DEFAULT_OUTPUT_DIR


def open_workspace(output_dir: Optional[str] = None) -> Workspace:
    """
    Standard workspace bootstrap for all commands

    Args:
        output_dir: directory from --out or the config; falls back to the
            environment and then to ./altsp-output

    Returns:
        an initialized Workspace
    """
    workspace = Workspace(resolve_output_dir(output_dir))
    workspace.ensure_initialized()
    return workspace
