from datetime import datetime

from peewee import (
    CharField,
    DateTimeField,
    ForeignKeyField,
    IntegerField,
    Model,
    TextField,
)

from .db import db


class BaseModel(Model):
    class Meta:
        database = db


class RunRecord(BaseModel):
    """One CLI command invocation and the inputs that determine its output."""

    command = CharField(null=False)
    config_hash = CharField(null=False)
    seed = IntegerField(null=False)
    version = CharField(null=False)
    started_at = DateTimeField(default=datetime.now)
    finished_at = DateTimeField(null=True)
    status = CharField(
        null=False,
        choices=[
            ("running", "Running"),
            ("succeeded", "Succeeded"),
            ("failed", "Failed"),
        ],
        default="running",
    )
    message = TextField(null=True)

    @classmethod
    def for_config(cls, config_hash: str):
        """Runs made with a given configuration, newest first."""
        return (
            cls.select()
            .where(cls.config_hash == config_hash)
            .order_by(cls.started_at.desc())
        )

    class Meta:
        table_name = "run_record"


class RunArtifact(BaseModel):
    run = ForeignKeyField(RunRecord, backref="artifacts", on_delete="CASCADE")
    path = CharField(null=False)
    kind = CharField(null=False)

    class Meta:
        table_name = "run_artifact"
        indexes = [(("run", "path"), True)]
