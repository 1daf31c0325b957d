import os
from datetime import datetime
from typing import Iterable, Optional, Tuple

from .database_manager import DatabaseManager, StoreMetadata
from .db import RUNS_DB_NAME, init_db
from .models import RunArtifact, RunRecord


class Workspace:
    """
    An output directory holding the files of altsp runs and the run store
    (``runs.db``) that records how each file was produced.
    """

    def __init__(self, directory: str):
        self.directory = os.path.abspath(directory)
        self.db_path = os.path.join(self.directory, RUNS_DB_NAME)
        self._db = None

    # --------------------------------------------------------------------- #
    # Paths
    # --------------------------------------------------------------------- #

    def get_directory(self) -> str:
        return self.directory

    def path(self, name: str) -> str:
        return os.path.join(self.directory, name)

    # --------------------------------------------------------------------- #
    # Database Management
    # --------------------------------------------------------------------- #

    def get_db(self):
        """Get database connection, initializing if needed"""
        if self._db is None:
            self._db = init_db(self.db_path)
        return self._db

    def ensure_initialized(self):
        """Ensure the directory and run store are set up"""
        os.makedirs(self.directory, exist_ok=True)
        self.get_db()
        DatabaseManager(self).ensure_schema()
        StoreMetadata.get_or_create(
            key="created_at", defaults={"value": datetime.now().isoformat()}
        )

    def close(self):
        if self._db is not None and not self._db.is_closed():
            self._db.close()

    # --------------------------------------------------------------------- #
    # Run provenance
    # --------------------------------------------------------------------- #

    def start_run(self, command: str, config_hash: str, seed: int, version: str):
        return RunRecord.create(
            command=command, config_hash=config_hash, seed=seed, version=version
        )

    def finish_run(
        self,
        run: RunRecord,
        artifacts: Iterable[Tuple[str, str]] = (),
        status: str = "succeeded",
        message: Optional[str] = None,
    ) -> RunRecord:
        """Close a run and list the ``(path, kind)`` files it wrote."""
        for path, kind in artifacts:
            RunArtifact.get_or_create(
                run=run,
                path=os.path.relpath(path, self.directory),
                defaults={"kind": kind},
            )
        run.status = status
        run.message = message
        run.finished_at = datetime.now()
        run.save()
        return run

    def runs(self):
        return RunRecord.select().order_by(RunRecord.id)
