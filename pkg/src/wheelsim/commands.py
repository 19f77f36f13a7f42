"""The five-symbol control alphabet shared by every control channel."""
from __future__ import annotations

import enum


class Command(enum.Enum):
    """Closed control alphabet: Forward, Backward, Left, Right, Stop."""

    FORWARD = "F"
    BACKWARD = "B"
    LEFT = "L"
    RIGHT = "R"
    STOP = "S"

    @property
    def symbol(self) -> str:
        return self.value

    @classmethod
    def from_symbol(cls, symbol: str) -> "Command":
        """Look up a command by its one-character symbol.

        Raises ValueError for anything outside the alphabet.
        """
        try:
            return cls(symbol)
        except ValueError:
            raise ValueError(f"not a command symbol: {symbol!r}") from None


COMMAND_SYMBOLS = frozenset(c.value for c in Command)

# Directional commands, i.e. everything except STOP.
MOVEMENT_COMMANDS = (Command.FORWARD, Command.BACKWARD, Command.LEFT, Command.RIGHT)


class Motor(enum.Enum):
    """Motor drive states, one per command symbol."""

    FORWARD = "Forward"
    BACKWARD = "Backward"
    LEFT = "Left"
    RIGHT = "Right"
    STOP = "Stop"
