# qosm/errors.py
"""
Exception hierarchy. Library code raises these; only the command modules
turn them into exit codes.
"""


class QoSMError(Exception):
    category = "error"
    exit_code = 1

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


# --- Topology ---

class TopologyError(QoSMError):
    category = "topology"
    exit_code = 3

class DuplicatePlacementError(TopologyError):
    pass

class DanglingDependencyError(TopologyError):
    pass

class SelfDependencyError(TopologyError):
    pass

class DuplicatePrimitiveError(TopologyError):
    pass

class UnknownServiceError(TopologyError):
    pass


# --- Data ---

class DataError(QoSMError):
    category = "data"
    exit_code = 4

class InsufficientHistoryError(DataError):
    pass

class InsufficientSamplesError(DataError):
    pass

class EmptySeriesError(DataError):
    pass

class LengthMismatchError(DataError):
    pass

class TraceFormatError(DataError):
    pass

class SchemaMismatchError(DataError):
    pass

class NoValidTermsError(DataError):
    pass


# --- Models ---

class ModelError(QoSMError):
    category = "model"
    exit_code = 5

class UntrainedBucketError(ModelError):
    pass

class ModelFormatError(ModelError):
    pass


# --- Configuration ---

class ConfigError(QoSMError):
    category = "config"
    exit_code = 2

class ReportSchemaError(ConfigError):
    pass
