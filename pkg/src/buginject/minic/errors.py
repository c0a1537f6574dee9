class MiniCError(Exception):
    """Base class for front-end diagnostics; carries a source position."""

    def __init__(self, message, line=0, column=0):
        super().__init__(message)
        self.message = message
        self.line = line
        self.column = column

    def __str__(self):
        if self.line:
            return f"{self.line}:{self.column}: {self.message}"
        return self.message


class MiniCSyntaxError(MiniCError):
    def __init__(self, message, line=0, column=0, expected=None):
        super().__init__(message, line, column)
        self.expected = expected


class UndeclaredIdentifier(MiniCError):
    def __init__(self, name, line=0, column=0):
        super().__init__(f"undeclared identifier {name!r}", line, column)
        self.name = name


class TypeMismatch(MiniCError):
    pass


class DuplicateDeclarationInScope(MiniCError):
    def __init__(self, name, line=0, column=0):
        super().__init__(f"duplicate declaration of {name!r}", line, column)
        self.name = name


class TopLevelInStatementContext(MiniCError):
    pass


class UnknownStmtId(LookupError):
    pass


class NotInFunction(LookupError):
    pass
