"""Exception hierarchy shared by all dialcheck modules."""


class DialcheckError(Exception):
    """Base class for all errors raised by this package."""


class UsageError(DialcheckError):
    """Invalid CLI flag combination; maps to exit code 2."""


class ParseError(DialcheckError):
    def __init__(self, path, line_no, message):
        self.path = path
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {message}")


class MissingField(ParseError):
    def __init__(self, path, line_no, field):
        self.field = field
        ParseError.__init__(self, path, line_no, f"missing field {field!r}")


class UnknownLabel(ParseError):
    def __init__(self, path, line_no, value):
        self.value = value
        ParseError.__init__(self, path, line_no, f"unknown label {value!r}")


class DuplicateDocId(DialcheckError):
    def __init__(self, doc_id):
        self.doc_id = doc_id
        super().__init__(f"duplicate doc_id {doc_id!r}")


class EmptyDocument(DialcheckError):
    def __init__(self, doc_id):
        self.doc_id = doc_id
        super().__init__(f"document {doc_id!r} has no non-empty sentences")


class UnknownQuery(DialcheckError):
    def __init__(self, query):
        self.query = query
        super().__init__(f"no precomputed entry for query {query!r}")


class DimensionMismatch(DialcheckError):
    pass


class EmptyClaim(DialcheckError):
    pass


class DegenerateLabels(DialcheckError):
    """Fusion training set contains only one label value."""


class NonFiniteFeature(DialcheckError):
    pass


class MissingRetrieval(DialcheckError):
    def __init__(self, example_id):
        self.example_id = example_id
        super().__init__(f"no retrieval result for example {example_id!r}")


class MissingSelection(DialcheckError):
    def __init__(self, example_id):
        self.example_id = example_id
        super().__init__(f"no sentence selection for example {example_id!r}")


class MissingPrediction(DialcheckError):
    def __init__(self, example_id):
        self.example_id = example_id
        super().__init__(f"no prediction for example {example_id!r}")


class StageError(DialcheckError):
    """Wraps a failure inside a pipeline stage with example context."""

    def __init__(self, example_id, stage, cause):
        self.example_id = example_id
        self.stage = stage
        self.cause = cause
        super().__init__(f"example {example_id!r}, stage {stage}: {cause}")
