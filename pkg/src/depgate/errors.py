"""Exception types shared across modules."""


class DepgateError(Exception):
    """Base class for all errors raised by this package."""

    code = "error"


class MalformedManifest(DepgateError):
    code = "malformed_manifest"

    def __init__(self, message, path=None):
        self.path = path
        super().__init__(message if path is None else f"{path}: {message}")


class MalformedFeed(DepgateError):
    code = "malformed_feed"

    def __init__(self, message, position=None):
        self.position = position
        super().__init__(message if position is None else f"record {position}: {message}")


class StorageFailure(DepgateError):
    code = "storage_failure"


class NotFound(DepgateError):
    code = "not_found"


class IllegalTransition(DepgateError):
    code = "illegal_transition"


class MissingJustification(DepgateError):
    code = "missing_justification"


class MissingEndDate(DepgateError):
    code = "missing_end_date"


class UnknownCategory(DepgateError):
    code = "unknown_category"


class MissingDrdEntry(DepgateError):
    """An SBOM coordinate has no reference-database view entry.

    Signals an integration bug (observations must be upserted before the gate
    evaluates), never a policy outcome.
    """

    code = "missing_drd_entry"


class RegistryUnavailable(DepgateError):
    code = "registry_unavailable"


class SyncLeaseHeld(DepgateError):
    code = "sync_lease_held"


class ConfigError(DepgateError):
    code = "config_error"
