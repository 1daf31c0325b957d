from datetime import datetime

from peewee import DateTimeField, Model, TextField

from .db import db

SCHEMA_VERSION = 1


class StoreMetadata(Model):
    """Key-value store for workspace metadata"""

    key = TextField(unique=True)
    value = TextField()
    created_at = DateTimeField(default=datetime.now)
    updated_at = DateTimeField(default=datetime.now)

    class Meta:
        database = db
        table_name = "store_metadata"


class DatabaseManager:
    """Manages the run store schema"""

    def __init__(self, workspace):
        self.workspace = workspace

    def ensure_schema(self):
        """Ensure all tables exist with current schema"""
        self._create_core_tables()
        self._run_migrations()

    def _create_core_tables(self):
        from .models import RunArtifact, RunRecord

        db.create_tables([StoreMetadata, RunRecord, RunArtifact], safe=True)

    def _run_migrations(self):
        version = self.get_schema_version()
        if version > SCHEMA_VERSION:
            raise RuntimeError(
                f"run store schema {version} is newer than supported {SCHEMA_VERSION}"
            )
        if version < SCHEMA_VERSION or not self._has_version():
            self.set_schema_version(SCHEMA_VERSION)

    def _has_version(self) -> bool:
        return (
            StoreMetadata.select()
            .where(StoreMetadata.key == "schema_version")
            .exists()
        )

    def get_schema_version(self) -> int:
        """Get current database schema version"""
        try:
            entry = StoreMetadata.get(StoreMetadata.key == "schema_version")
            return int(entry.value)
        except (StoreMetadata.DoesNotExist, ValueError):
            return SCHEMA_VERSION

    def set_schema_version(self, version: int):
        """Set database schema version"""
        self.set_value("schema_version", str(version))

    def get_value(self, key: str, default=None):
        try:
            return StoreMetadata.get(StoreMetadata.key == key).value
        except StoreMetadata.DoesNotExist:
            return default

    def set_value(self, key: str, value: str):
        entry, created = StoreMetadata.get_or_create(
            key=key, defaults={"value": value}
        )
        if not created:
            entry.value = value
            entry.updated_at = datetime.now()
            entry.save()
