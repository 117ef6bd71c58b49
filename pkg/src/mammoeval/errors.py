"""Exception hierarchy.

Every error carries a ``family`` name and an ``exit_code`` so the CLI can
report failures in a machine-parsable way. Codes are grouped per family:

==== ==================== ==========================================
code family               raised by
==== ==================== ==========================================
3    metadata             metadata parsing (schema / decode)
4    validation           dataset validation with fatal entries
5    registry             descriptor loading and invocation resolving
6    launch               backend or device unavailable
7    model                model execution (exit status, timeout, output)
8    prediction-format    prediction CSV parsing and joining
9    metric               metric estimation
10   image                PNG reading and bit-depth handling
==== ==================== ==========================================
"""


class HarnessError(Exception):
    family = "harness"
    exit_code = 1


class MetadataError(HarnessError):
    family = "metadata"
    exit_code = 3


class SchemaError(MetadataError):
    pass


class DecodeError(MetadataError):
    pass


class ValidationFailed(HarnessError):
    family = "validation"
    exit_code = 4


class RegistryError(HarnessError):
    family = "registry"
    exit_code = 5


class DescriptorError(RegistryError):
    pass


class UnknownVariant(RegistryError):
    pass


class MissingParam(RegistryError):
    pass


class UnknownParam(RegistryError):
    pass


class LaunchError(HarnessError):
    family = "launch"
    exit_code = 6


class ModelError(HarnessError):
    family = "model"
    exit_code = 7

    def __init__(self, message, status=None, stderr_tail=""):
        super().__init__(message)
        self.status = status
        self.stderr_tail = stderr_tail


class OutputMissing(ModelError):
    pass


class Timeout(ModelError):
    pass


class PredictionFormatError(HarnessError):
    family = "prediction-format"
    exit_code = 8


class HeaderError(PredictionFormatError):
    pass


class UnknownImage(PredictionFormatError):
    pass


class DuplicateImage(PredictionFormatError):
    pass


class RowCountMismatch(PredictionFormatError):
    pass


class BadValue(PredictionFormatError):
    pass


class MetricError(HarnessError):
    family = "metric"
    exit_code = 9


class DegenerateLabels(MetricError):
    pass


class TooManySkips(MetricError):
    pass


class ImageError(HarnessError):
    family = "image"
    exit_code = 10


class DepthError(ImageError):
    pass


class EmptyDatasetError(ImageError):
    pass

