"""Exception hierarchy.  Every domain error derives from QStreamError so the
CLI can map it to exit code 1."""


class QStreamError(Exception):
    pass


class QasmSyntaxError(QStreamError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class UnsupportedGateError(QasmSyntaxError):
    def __init__(self, name: str, line: int, column: int):
        super().__init__(f"unsupported gate {name!r}", line, column)
        self.name = name


class ConfigurationError(QStreamError, ValueError):
    pass


class IntegrityError(QStreamError):
    pass


class WireFormatError(QStreamError):
    pass


class CompileError(QStreamError):
    pass


class InvariantViolation(QStreamError):
    pass


class OracleError(QStreamError):
    pass


class StreamDesyncError(QStreamError):
    pass
